"""Ant colony optimization for the MDVRP, one colony per depot.

Transitions follow the pseudo-random proportional rule: with probability q0
the ant takes the edge maximizing tau^alpha * eta^beta (eta = 1/distance),
otherwise it samples proportionally to that weight. The global trail decays
by (1 - rho) every iteration; an improving iteration-best solution deposits
sigma / cost on each of its edges.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import kernels
from .engine import Budget, RunStats, Termination, heuristic_matrix
from .instance import Instance
from .oracle import InfeasibleError
from .solution import TOL, Route, Solution, from_arrays

log = logging.getLogger(__name__)

TAU_0 = 1.0
TAU_MIN = 1e-6


@dataclass
class PheromoneMatrix:
    tau: np.ndarray
    tau_min: float = TAU_MIN
    tau_0: float = TAU_0

    @classmethod
    def uniform(cls, n_nodes: int, tau_0: float = TAU_0, tau_min: float = TAU_MIN) -> PheromoneMatrix:
        if not 0 < tau_min <= tau_0:
            raise ValueError("need 0 < tau_min <= tau_0")
        return cls(np.full((n_nodes, n_nodes), tau_0, dtype=np.float64), tau_min, tau_0)

    def copy(self) -> PheromoneMatrix:
        return PheromoneMatrix(self.tau.copy(), self.tau_min, self.tau_0)


@dataclass(frozen=True)
class AcoParams:
    n_a: int = 10
    alpha: float = 2.0
    beta: float = 1.0
    rho: float = 0.1
    sigma: float = 0.1
    q0: float = 0.5
    n_i: int = 20000

    def __post_init__(self):
        if self.n_a < 1 or self.n_i < 1:
            raise ValueError("n_a and n_i must be >= 1")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be non-negative")
        if not 0 < self.rho < 1:
            raise ValueError("rho must lie in (0, 1)")
        if not 0 < self.sigma < 1:
            raise ValueError("sigma must lie in (0, 1)")
        if not 0 <= self.q0 <= 1:
            raise ValueError("q0 must lie in [0, 1]")


def star_cost(instance: Instance) -> float:
    """Cost of serving every customer by its own out-and-back trip from the nearest depot."""
    if instance.n_customers == 0:
        return 0.0
    return float(2.0 * instance.dist[: instance.n_customers, instance.n_customers :].min(axis=1).sum())


def reference_trail(instance: Instance, sigma: float, rho: float) -> float:
    """Equilibrium level sigma / (rho * C) of an edge reinforced once per iteration.

    C is the star cost, so the level sits below what any real solution's edges
    settle at. Used as both initial trail and floor; with the constants above
    instead, a deposit of order 1e-4 against a floor of 1e-6 freezes the search
    after a few hundred iterations once alpha is large.
    """
    c = star_cost(instance)
    return sigma / (rho * c) if c > 0 else TAU_0


def transition_weights(tau: np.ndarray, dist: np.ndarray, params: AcoParams) -> np.ndarray:
    """tau ** alpha * eta ** beta, elementwise."""
    return kernels.power(tau, params.alpha) * heuristic_matrix(dist, params.beta)


def select_next(current: int, candidates, pheromone: PheromoneMatrix, params: AcoParams,
                rng: np.random.Generator, instance: Instance) -> int:
    cand = np.sort(np.asarray(candidates, dtype=np.int64))
    if cand.size == 0:
        raise ValueError("empty candidate set")
    if cand.size == 1:
        return int(cand[0])
    # a one-row weight matrix; row 0 stands in for row `current`
    w = transition_weights(pheromone.tau[current : current + 1], instance.dist[current : current + 1], params)
    u = rng.random(2)
    k = kernels.pick(0, cand, cand.size, w, params.q0, u[0], u[1])
    return int(cand[k])


def construct_route_set(depot: int, allowed, pheromone: PheromoneMatrix, instance: Instance,
                        params: AcoParams, rng: np.random.Generator, heur=None):
    """Routes from ``depot`` covering ``allowed``, or None when K routes do not suffice."""
    cust = np.sort(np.asarray(list(allowed), dtype=np.int64))
    if cust.size == 0:
        return []
    if heur is None:
        heur = heuristic_matrix(instance.dist, params.beta)
    w = kernels.power(pheromone.tau, params.alpha) * heur
    order = np.empty(cust.size, dtype=np.int64)
    route = np.empty(cust.size, dtype=np.int64)
    u = rng.random(2 * cust.size)
    nr = kernels.construct_depot(
        instance.depot_node(depot), cust, w, instance.dist,
        instance.demand, instance.service, instance.q_max[depot], instance.r_max[depot],
        int(instance.vehicles[depot]), params.q0, u, order, route,
    )
    if nr < 0:
        return None
    return from_arrays(instance, order, route, np.full(nr, depot), nr).routes


def evaporate(pheromone: PheromoneMatrix, rho: float) -> None:
    if not 0 < rho < 1:
        raise ValueError("rho must lie in (0, 1)")
    np.multiply(pheromone.tau, 1.0 - rho, out=pheromone.tau)
    np.maximum(pheromone.tau, pheromone.tau_min, out=pheromone.tau)


def solution_edges(solution: Solution, n_customers: int):
    """Endpoints of every traversed edge, depot legs included."""
    a, b = [], []
    for r in solution.routes:
        depot = n_customers + r.depot
        path = [depot, *r.visits, depot]
        a.extend(path[:-1])
        b.extend(path[1:])
    return np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)


def deposit(pheromone: PheromoneMatrix, solution: Solution, sigma: float, instance: Instance) -> None:
    if not solution.total_cost > 0:
        raise ValueError("deposit needs a solution with positive cost")
    a, b = solution_edges(solution, instance.n_customers)
    amount = sigma / solution.total_cost
    np.add.at(pheromone.tau, (a, b), amount)
    np.add.at(pheromone.tau, (b, a), amount)


def _multi_depot_cost(order, route, route_depot, n_routes, instance: Instance) -> float:
    idx = np.argsort(route, kind="stable")
    seq, rid = order[idx], route[idx]
    dep = instance.n_customers + route_depot[:n_routes][rid]
    d = instance.dist
    first = np.r_[True, rid[1:] != rid[:-1]]
    last = np.r_[rid[1:] != rid[:-1], True]
    inner = ~first[1:]
    return float(d[dep[first], seq[first]].sum() + d[seq[:-1][inner], seq[1:][inner]].sum()
                 + d[seq[last], dep[last]].sum())


def solve_aco(instance: Instance, params: AcoParams = AcoParams(), budget: Termination = Termination(),
              rng: np.random.Generator | None = None) -> tuple[Solution, RunStats]:
    rng = rng if rng is not None else np.random.default_rng()
    clock = Budget(budget, params.n_i)
    stats = RunStats()
    n = instance.n_customers
    if n == 0:
        stats.trace.append((0, 0.0, 0.0))
        return Solution([], 0.0), clock.finish(stats)

    depots = np.arange(n, instance.node_count, dtype=np.int64)
    heur = heuristic_matrix(instance.dist, params.beta)
    ph = PheromoneMatrix.uniform(instance.node_count)
    order = np.empty(n, dtype=np.int64)
    route = np.empty(n, dtype=np.int64)
    route_depot = np.empty(n, dtype=np.int64)
    best: Solution | None = None
    best_cost = np.inf
    failures = 0

    w = np.empty_like(ph.tau)
    while True:
        stats.iterations += 1
        np.multiply(kernels.power(ph.tau, params.alpha), heur, out=w)
        it_cost, it_arrays = np.inf, None
        for _ in range(params.n_a):
            u = rng.random(2 * n)
            nr = kernels.construct_interleaved(
                n, depots, w, instance.dist, instance.demand, instance.service,
                instance.q_max, instance.r_max, instance.vehicles, params.q0,
                u, order, route, route_depot,
            )
            if nr < 0:
                failures += 1
                continue
            cost = _multi_depot_cost(order, route, route_depot, nr, instance)
            if cost < it_cost:
                it_cost, it_arrays = cost, (order.copy(), route.copy(), route_depot[:nr].copy(), nr)
        improved = it_cost < best_cost - TOL
        if improved:
            best = from_arrays(instance, *it_arrays)
            best_cost = it_cost
            stats.trace.append((stats.iterations, clock.elapsed_ms(), best.total_cost))
            if best.total_cost > 0:
                deposit(ph, best, params.sigma, instance)
        evaporate(ph, params.rho)
        clock.record(improved)
        if clock.stagnated():
            stats.terminated_by = "stagnation"
            break
        if clock.out_of_time():
            stats.terminated_by = "wall_clock"
            break

    if best is None:
        raise InfeasibleError(
            f"{instance.name}: no feasible solution in {stats.iterations} iterations "
            f"({failures} failed constructions)"
        )
    log.debug("aco %s: best %.2f after %d iterations", instance.name, best.total_cost, stats.iterations)
    return best, clock.finish(stats)


__all__ = [
    "AcoParams", "PheromoneMatrix", "Route", "select_next", "construct_route_set",
    "evaporate", "deposit", "solve_aco",
]
