"""Termination budgets and per-run statistics shared by all solvers."""
from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class Termination:
    """Stop after ``stagnation_iterations`` without improvement or ``wall_clock_limit`` seconds.

    ``stagnation_iterations=None`` defers to the engine parameters' ``n_i``.
    """

    stagnation_iterations: int | None = None
    wall_clock_limit: float = math.inf

    def __post_init__(self):
        if self.stagnation_iterations is not None and self.stagnation_iterations < 1:
            raise ValueError("stagnation_iterations must be >= 1")
        if not self.wall_clock_limit > 0:
            raise ValueError("wall_clock_limit must be positive")


@dataclass
class RunStats:
    iterations: int = 0
    elapsed: float = 0.0  # seconds
    terminated_by: str = ""  # "stagnation" | "wall_clock"
    trace: list[tuple[int, float, float]] = field(default_factory=list)  # (iteration, elapsed_ms, best_cost)
    epochs: list[tuple[int, int, float]] = field(default_factory=list)  # (epoch, empires_alive, best_cost)

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iteration", "elapsed_ms", "best_cost"])
        for it, ms, cost in self.trace:
            w.writerow([it, f"{ms:.3f}", repr(cost)])
        return buf.getvalue()

    def epoch_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epoch", "empires_alive", "best_cost"])
        for ep, alive, cost in self.epochs:
            w.writerow([ep, alive, repr(cost)])
        return buf.getvalue()


class Budget:
    """Tracks stagnation and elapsed time for one run."""

    def __init__(self, termination: Termination, default_stagnation: int):
        self.limit = termination.wall_clock_limit
        self.stagnation = termination.stagnation_iterations or default_stagnation
        self.start = time.perf_counter()
        self.since_improvement = 0

    def elapsed(self) -> float:
        return time.perf_counter() - self.start

    def elapsed_ms(self) -> float:
        return 1000.0 * self.elapsed()

    def out_of_time(self) -> bool:
        return self.elapsed() >= self.limit

    def record(self, improved: bool) -> None:
        self.since_improvement = 0 if improved else self.since_improvement + 1

    def stagnated(self) -> bool:
        return self.since_improvement >= self.stagnation

    def finish(self, stats: RunStats) -> RunStats:
        stats.elapsed = self.elapsed()
        if not stats.terminated_by:
            stats.terminated_by = "stagnation" if self.stagnated() else "wall_clock"
        return stats


def heuristic_matrix(dist: np.ndarray, beta: float) -> np.ndarray:
    """Visibility raised to ``beta``: (1 / distance) ** beta, coincident nodes clamped."""
    return (1.0 / np.maximum(dist, 1e-10)) ** beta
