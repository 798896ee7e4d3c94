"""Routes, solutions, cost evaluation and constraint checking."""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .instance import Instance

TOL = 1e-9


@dataclass
class Route:
    depot: int  # depot index 0..M-1, node N + depot
    visits: tuple[int, ...]
    load: float = 0.0
    duration: float = 0.0
    cost: float = 0.0


@dataclass
class Solution:
    routes: list[Route] = field(default_factory=list)
    total_cost: float = 0.0

    def encoding(self):
        """Canonical key: routes sorted by (depot, visit sequence)."""
        return tuple(sorted((r.depot, tuple(r.visits)) for r in self.routes))

    def assignment(self, n_customers: int) -> np.ndarray:
        """Depot index serving each customer, -1 when unserved."""
        out = np.full(n_customers, -1, dtype=np.int64)
        for r in self.routes:
            out[list(r.visits)] = r.depot
        return out


@dataclass(frozen=True)
class Violation:
    constraint: str  # capacity | duration | unserved | served_twice | vehicles | index | empty_route
    where: str
    message: str

    def __str__(self):
        return f"{self.constraint} [{self.where}]: {self.message}"


def _check_indices(route: Route, instance: Instance):
    if not 0 <= route.depot < instance.n_depots:
        raise IndexError(f"depot index {route.depot} out of range")
    for c in route.visits:
        if not 0 <= c < instance.n_customers:
            raise IndexError(f"customer index {c} out of range")


def route_metrics(route: Route, instance: Instance) -> tuple[float, float, float]:
    """(load, duration, travel cost) of one route."""
    _check_indices(route, instance)
    d = instance.dist
    depot = instance.depot_node(route.depot)
    prev = depot
    travel = 0.0
    for c in route.visits:
        travel += d[prev, c]
        prev = c
    travel += d[prev, depot]
    visits = list(route.visits)
    load = float(instance.demand[visits].sum()) if visits else 0.0
    service = float(instance.service[visits].sum()) if visits else 0.0
    return load, travel + service, float(travel)


def evaluate(solution: Solution, instance: Instance) -> float:
    """Total travel cost; refreshes each route's load, duration and cost."""
    total = 0.0
    for r in solution.routes:
        r.load, r.duration, r.cost = route_metrics(r, instance)
        total += r.cost
    solution.total_cost = total
    return total


def check_feasible(solution: Solution, instance: Instance) -> list[Violation]:
    out = []
    seen: dict[int, int] = {}
    per_depot = [0] * instance.n_depots
    for k, r in enumerate(solution.routes):
        where = f"route {k} @depot {r.depot}"
        try:
            load, duration, _ = route_metrics(r, instance)
        except IndexError as e:
            out.append(Violation("index", where, str(e)))
            continue
        if not r.visits:
            out.append(Violation("empty_route", where, "route visits no customer"))
        dep = instance.depots[r.depot]
        if load > dep.max_vehicle_load + TOL:
            out.append(Violation("capacity", where, f"load {load:g} exceeds Q_max {dep.max_vehicle_load:g}"))
        if duration > dep.max_route_duration + TOL:
            out.append(Violation("duration", where, f"duration {duration:.4f} exceeds R_max {dep.max_route_duration:g}"))
        per_depot[r.depot] += 1
        for c in r.visits:
            if c in seen:
                out.append(Violation("served_twice", f"customer {c}", f"in route {seen[c]} and route {k}"))
            else:
                seen[c] = k
    for d, count in enumerate(per_depot):
        k_max = instance.depots[d].vehicles
        if count > k_max:
            out.append(Violation("vehicles", f"depot {d}", f"{count} routes but only {k_max} vehicles"))
    for c in range(instance.n_customers):
        if c not in seen:
            out.append(Violation("unserved", f"customer {c}", "not visited by any route"))
    return out


def from_arrays(instance: Instance, order, route, route_depot, n_routes: int) -> Solution:
    """Build a Solution from flat kernel output (visit order, route id per visit)."""
    buckets: list[list[int]] = [[] for _ in range(n_routes)]
    for j, r in zip(order, route):
        buckets[int(r)].append(int(j))
    sol = Solution([Route(int(route_depot[r]), tuple(v)) for r, v in enumerate(buckets) if v])
    evaluate(sol, instance)
    return sol


def combine(instance: Instance, parts) -> Solution:
    """Merge per-depot route lists into one evaluated Solution."""
    sol = Solution([r for part in parts for r in part])
    evaluate(sol, instance)
    return sol


def format_solution(solution: Solution) -> str:
    lines = []
    for r in solution.routes:
        visits = " ".join(str(c) for c in r.visits)
        lines.append(f"{r.depot}: {visits} | load={r.load:.2f} dur={r.duration:.2f} cost={r.cost:.2f}")
    lines.append(f"total={solution.total_cost:.2f}")
    return "\n".join(lines) + "\n"


_ROUTE_LINE = re.compile(r"^\s*(\d+)\s*:\s*([\d\s]*?)\s*(?:\|.*)?$")


def parse_solution(text: str, instance: Instance | None = None) -> Solution:
    """Read the text format back. Metrics are recomputed when ``instance`` is given."""
    routes = []
    total = math.nan
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("total="):
            total = float(line.split("=", 1)[1])
            continue
        m = _ROUTE_LINE.match(line)
        if not m:
            raise ValueError(f"line {lineno}: not a route line: {line!r}")
        routes.append(Route(int(m.group(1)), tuple(int(t) for t in m.group(2).split())))
    sol = Solution(routes, total)
    if instance is not None:
        evaluate(sol, instance)
    return sol
