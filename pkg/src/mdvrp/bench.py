"""Benchmark harness: seeded campaigns, re-verification, summaries and reports.

A campaign runs every (instance, seed) pair for one or more engines. Each
solution is re-checked with ``check_feasible`` before its record is written,
so a record marked feasible never relies on the engine's own claim. Records
are appended to ``results.partial.csv`` as runs finish; ``emit`` then writes
the canonical, sorted ``results.csv`` and ``summary.csv`` plus a plain-text
table shaped like the published comparison.
"""
from __future__ import annotations

import csv
import dataclasses
import io
import logging
import math
import os
import re
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .aco import AcoParams, solve_aco
from .engine import Termination
from .hybrid import HybridParams, solve_hybrid
from .ica import IcaParams, solve_ica
from .instance import Instance, load
from .solution import check_feasible, format_solution

log = logging.getLogger(__name__)

ENGINES = {
    "aco": (solve_aco, AcoParams),
    "ica": (solve_ica, IcaParams),
    "hybrid": (solve_hybrid, HybridParams),
}
DEFAULT_WALL_CLOCK = 3600.0

RESULT_FIELDS = ["instance", "algorithm", "seed", "best_cost", "elapsed_ms", "terminated_by", "feasible"]
SUMMARY_FIELDS = [
    "instance", "algorithm", "runs", "feasible_runs", "best", "mean", "mean_minutes", "bks",
    "best_error_pct", "mean_error_pct", "wall_clock_runs", "improves_bks",
]


# ---------------------------------------------------------------- reference data

def _read_table(name: str) -> list[dict]:
    text = resources.files("mdvrp.data").joinpath(name).read_text(encoding="utf-8")
    return list(csv.DictReader(io.StringIO(text)))


def bks_table() -> dict[str, float]:
    """Best-known costs for the 23 Cordeau instances."""
    return {row["instance"]: float(row["bks"]) for row in _read_table("instances.csv")}


def instance_table() -> dict[str, tuple[int, int, float, float]]:
    """(N, M, Q_max, R_max) per Cordeau instance; R_max is ``inf`` when unbounded."""
    return {
        row["instance"]: (int(row["n"]), int(row["m"]), float(row["q_max"]), float(row["r_max"]))
        for row in _read_table("instances.csv")
    }


def rival_table() -> dict[str, dict[str, float]]:
    """Published best costs of competing methods, keyed by instance then method."""
    cols = ("coes", "iaco", "tsh", "aco_plus", "aco_ica")
    return {row["instance"]: {c: float(row[c]) for c in cols} for row in _read_table("instances.csv")}


def published_results() -> dict[str, dict[str, float]]:
    """Published best, mean and minutes for aco, ica and hybrid."""
    return {row["instance"]: {k: float(v) for k, v in row.items() if k != "instance"}
            for row in _read_table("published.csv")}


# ---------------------------------------------------------------- parsing helpers

_DURATION = re.compile(r"^\s*(\d+(?:\.\d*)?|\.\d+)\s*(ms|s|m|min|h)?\s*$")
_UNIT = {None: 1.0, "s": 1.0, "ms": 1e-3, "m": 60.0, "min": 60.0, "h": 3600.0}


def parse_duration(text: str) -> float:
    """Seconds from ``90``, ``90s``, ``1.5m``, ``10min`` or ``1h``."""
    m = _DURATION.match(str(text))
    if not m:
        raise ValueError(f"bad duration {text!r} (examples: 90, 90s, 10m, 1h)")
    value = float(m.group(1)) * _UNIT[m.group(2)]
    if value <= 0:
        raise ValueError(f"duration must be positive, got {text!r}")
    return value


def parse_params(text: str, algorithm: str):
    """Engine parameters from flat ``key=value`` lines; ``#`` starts a comment."""
    cls = ENGINES[algorithm][1]
    types = {f.name: f.type for f in dataclasses.fields(cls)}
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in types:
            raise ValueError(f"line {lineno}: unknown parameter {key!r} for {algorithm}")
        try:
            values[key] = int(value) if types[key] in (int, "int") else float(value)
        except ValueError:
            raise ValueError(f"line {lineno}: {key} needs a number, got {value!r}") from None
    return cls(**values)


# ---------------------------------------------------------------- runs

@dataclass(frozen=True)
class RunRecord:
    instance: str
    algorithm: str
    seed: int
    best_cost: float
    elapsed: float  # seconds
    terminated_by: str  # "stagnation" | "wall_clock" | "error"
    feasible: bool
    diagnostics: str = ""
    solution_text: str = field(default="", repr=False, compare=False)

    @property
    def elapsed_ms(self) -> float:
        return 1000.0 * self.elapsed

    def row(self) -> list[str]:
        cost = repr(float(self.best_cost)) if math.isfinite(self.best_cost) else "nan"
        return [self.instance, self.algorithm, str(self.seed), cost, f"{self.elapsed_ms:.0f}",
                self.terminated_by, "true" if self.feasible else "false"]


@dataclass(frozen=True)
class _Task:
    index: int
    instance: Instance | str  # an Instance, or a path to load in the worker
    algorithm: str
    params: object
    termination: Termination
    seed: int


def run_one(instance: Instance, algorithm: str, params, termination: Termination, seed: int) -> RunRecord:
    """One seeded run, re-verified. Engine exceptions become an infeasible record."""
    solver, cls = ENGINES[algorithm]
    params = params if params is not None else cls()
    start = time.perf_counter()
    try:
        solution, stats = solver(instance, params, termination, np.random.default_rng(seed))
    except Exception as exc:  # recorded, never fatal for the campaign
        log.warning("%s/%s seed %d failed: %s", instance.name, algorithm, seed, exc)
        return RunRecord(instance.name, algorithm, seed, math.nan, time.perf_counter() - start, "error",
                         False, f"{type(exc).__name__}: {exc}")
    violations = check_feasible(solution, instance)
    return RunRecord(
        instance.name, algorithm, seed, float(solution.total_cost), stats.elapsed, stats.terminated_by,
        not violations, "; ".join(map(str, violations[:5])), format_solution(solution),
    )


def _run_task(task: _Task) -> tuple[int, RunRecord]:
    inst = task.instance if isinstance(task.instance, Instance) else load(task.instance)
    return task.index, run_one(inst, task.algorithm, task.params, task.termination, task.seed)


def run_experiment(instances: Iterable[Instance | str | os.PathLike], algorithm: str | Iterable[str],
                   params=None, termination: Termination = Termination(wall_clock_limit=DEFAULT_WALL_CLOCK),
                   seeds: Iterable[int] = (), parallelism: int = 1,
                   on_record: Callable[[RunRecord], None] | None = None) -> list[RunRecord]:
    """Run every (instance, algorithm, seed) triple; records come back in task order.

    ``instances`` may hold parsed instances or paths; paths are loaded inside
    the worker. ``params`` applies to a single algorithm; pass None for each
    engine's defaults. ``on_record`` is called from this process as each run
    finishes, in completion order.
    """
    algorithms = [algorithm] if isinstance(algorithm, str) else list(algorithm)
    for a in algorithms:
        if a not in ENGINES:
            raise ValueError(f"unknown algorithm {a!r}; expected one of {sorted(ENGINES)}")
    if params is not None and len(algorithms) != 1:
        raise ValueError("explicit params need exactly one algorithm")
    seeds = list(seeds)
    if len(set(seeds)) != len(seeds):
        raise ValueError("seeds must be distinct")
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    prepared = [i if isinstance(i, Instance) else os.fspath(i) for i in instances]
    tasks = [
        _Task(k, inst, alg, params, termination, seed)
        for k, (inst, alg, seed) in enumerate(
            (inst, alg, seed) for inst in prepared for alg in algorithms for seed in seeds)
    ]
    out: list[RunRecord | None] = [None] * len(tasks)
    if parallelism == 1 or len(tasks) <= 1:
        for task in tasks:
            _, rec = _run_task(task)
            out[task.index] = rec
            if on_record:
                on_record(rec)
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            futures = [pool.submit(_run_task, t) for t in tasks]
            for fut in as_completed(futures):
                k, rec = fut.result()
                out[k] = rec
                if on_record:
                    on_record(rec)
    return out


def default_seeds(runs: int) -> list[int]:
    return list(range(1, runs + 1))


# ---------------------------------------------------------------- summaries

@dataclass(frozen=True)
class CellSummary:
    instance: str
    algorithm: str
    runs: int
    feasible_runs: int
    best: float
    mean: float
    mean_minutes: float
    bks: float
    best_error_pct: float
    mean_error_pct: float
    wall_clock_runs: int

    @property
    def improves_bks(self) -> bool:
        """Best beats the published value at its own two-decimal precision."""
        return math.isfinite(self.best) and round(self.best, 2) < self.bks

    @property
    def wall_clock_flag(self) -> bool:
        return self.wall_clock_runs > 0


@dataclass(frozen=True)
class Report:
    records: list[RunRecord]
    cells: list[CellSummary]
    average_best_error: dict[str, float]
    average_mean_error: dict[str, float]


def _error(value: float, ref: float) -> float:
    return 100.0 * (value - ref) / ref if math.isfinite(value) else math.nan


def _record_key(r: RunRecord):
    return (r.instance, r.algorithm, r.seed)


def summarize(records: Iterable[RunRecord], bks: dict[str, float] | None = None) -> Report:
    """Per (instance, algorithm) best, mean, mean minutes and errors against BKS."""
    bks = bks_table() if bks is None else bks
    records = sorted(records, key=_record_key)
    groups: dict[tuple[str, str], list[RunRecord]] = {}
    for r in records:
        if r.instance not in bks:
            raise KeyError(f"no best-known cost for instance {r.instance!r}")
        groups.setdefault((r.instance, r.algorithm), []).append(r)
    cells = []
    for (name, alg), rs in sorted(groups.items()):
        costs = sorted(r.best_cost for r in rs if r.feasible)
        best = costs[0] if costs else math.nan
        mean = math.fsum(costs) / len(costs) if costs else math.nan
        minutes = math.fsum(sorted(r.elapsed for r in rs)) / len(rs) / 60.0
        cells.append(CellSummary(
            name, alg, len(rs), len(costs), best, mean, minutes, bks[name],
            _error(best, bks[name]), _error(mean, bks[name]),
            sum(r.terminated_by == "wall_clock" for r in rs),
        ))
    avg_best, avg_mean = {}, {}
    for alg in sorted({c.algorithm for c in cells}):
        mine = [c for c in cells if c.algorithm == alg]
        avg_best[alg] = math.fsum(c.best_error_pct for c in mine) / len(mine)
        avg_mean[alg] = math.fsum(c.mean_error_pct for c in mine) / len(mine)
    return Report(records, cells, avg_best, avg_mean)


# ---------------------------------------------------------------- output

def _csv_text(header: list[str], rows: Iterable[list[str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def results_csv(records: Iterable[RunRecord]) -> str:
    return _csv_text(RESULT_FIELDS, (r.row() for r in sorted(records, key=_record_key)))


def _num(x: float, fmt: str = ".2f") -> str:
    return format(x, fmt) if math.isfinite(x) else "nan"


def summary_csv(report: Report) -> str:
    rows = [[
        c.instance, c.algorithm, str(c.runs), str(c.feasible_runs), _num(c.best, ".6f"), _num(c.mean, ".6f"),
        _num(c.mean_minutes, ".1f"), _num(c.bks), _num(c.best_error_pct, ".4f"), _num(c.mean_error_pct, ".4f"),
        str(c.wall_clock_runs), "true" if c.improves_bks else "false",
    ] for c in report.cells]
    return _csv_text(SUMMARY_FIELDS, rows)


def table_text(report: Report) -> str:
    """Instance rows with best, mean and minutes per algorithm.

    ``*`` marks cells where some run stopped on the wall clock and ``!`` marks a
    best cost below the best-known value.
    """
    algs = sorted({c.algorithm for c in report.cells})
    by = {(c.instance, c.algorithm): c for c in report.cells}
    names = sorted({c.instance for c in report.cells})
    header = ["Instance", "BKS"] + [f"Best {a}" for a in algs] + [f"Mean {a}" for a in algs] + \
             [f"Min {a}" for a in algs]
    rows = []
    for n in names:
        cs = [by.get((n, a)) for a in algs]
        bks = next(c.bks for c in cs if c)
        rows.append(
            [n, f"{bks:.2f}"]
            + [(_num(c.best) + ("!" if c.improves_bks else "")) if c else "-" for c in cs]
            + [_num(c.mean) if c else "-" for c in cs]
            + [(_num(c.mean_minutes, ".1f") + ("*" if c.wall_clock_flag else "")) if c else "-" for c in cs]
        )
    footer_best = ["Avg best error", ""] + [f"{report.average_best_error[a]:.2f}%" for a in algs] + \
        [""] * (2 * len(algs))
    footer_mean = ["Avg mean error", ""] + [""] * len(algs) + \
        [f"{report.average_mean_error[a]:.2f}%" for a in algs] + [""] * len(algs)
    table = [header] + rows + ([footer_best, footer_mean] if rows else [])
    widths = [max(len(r[i]) for r in table) for i in range(len(header))]
    lines = ["  ".join(cell.rjust(w) if i else cell.ljust(w) for i, (cell, w) in enumerate(zip(r, widths)))
             for r in table]
    return "\n".join(line.rstrip() for line in lines) + "\n"


def emit(report: Report, out_dir: str | os.PathLike) -> dict[str, Path]:
    """Write results.csv, summary.csv, table.txt and per-run solution files."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "results": out / "results.csv",
            "summary": out / "summary.csv",
            "table": out / "table.txt",
        }
        paths["results"].write_text(results_csv(report.records), encoding="utf-8")
        paths["summary"].write_text(summary_csv(report), encoding="utf-8")
        paths["table"].write_text(table_text(report), encoding="utf-8")
        sol_dir = out / "solutions"
        for r in report.records:
            if r.solution_text:
                sol_dir.mkdir(exist_ok=True)
                (sol_dir / f"{r.instance}_{r.algorithm}_{r.seed}.txt").write_text(r.solution_text, encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write report to {out}: {exc}") from exc
    return paths


class Journal:
    """Appends finished records to ``results.partial.csv`` so a killed campaign keeps them."""

    def __init__(self, out_dir: str | os.PathLike):
        self.path = Path(out_dir) / "results.partial.csv"
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.path.write_text(",".join(RESULT_FIELDS) + ",diagnostics\n", encoding="utf-8")

    def __call__(self, record: RunRecord) -> None:
        with self.path.open("a", encoding="utf-8", newline="") as f:
            csv.writer(f, lineterminator="\n").writerow(record.row() + [record.diagnostics])

    def close(self) -> None:
        self.path.unlink(missing_ok=True)


__all__ = [
    "ENGINES", "RunRecord", "CellSummary", "Report", "Journal", "bks_table", "instance_table", "rival_table",
    "published_results", "parse_duration", "parse_params", "run_one", "run_experiment", "default_seeds",
    "summarize", "emit", "results_csv", "summary_csv", "table_text",
]
