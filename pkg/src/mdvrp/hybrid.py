"""Two-stage ACO-ICA: ICA assigns customers to depots, ACO routes each depot.

Every country owns a pheromone matrix over the full node set that persists for
the country's lifetime and travels with it between empires. Creating a new
country runs:

1. Stage 1: assimilation toward the imperialist (or an independence move),
   constrained by depot capacity.
2. Stage 2: for each depot, ``n_aco`` ACO iterations restricted to the
   customers assigned to it, learning on the country's matrix.
3. The combined solution replaces the country's best only when it is better.
4. The matrix receives a deposit from the country's best solution, then evaporates.

Memory: each matrix is (N + M)^2 float64. A population of 128 on a
369-node instance holds about 139 MB of trail state.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, fields

import numpy as np

from . import kernels
from .aco import AcoParams, PheromoneMatrix, deposit, evaporate, reference_trail
from .engine import Budget, RunStats, Termination, heuristic_matrix
from .ica import (
    Country, Empire, IcaParams, assimilate_assignment, best_country, imperialist_competition,
    independence_assignment, initialize_population, swap_roles,
)
from .instance import Instance
from .oracle import InfeasibleError
from .solution import TOL, Solution, from_arrays

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class HybridParams:
    n_population: int = 128
    n_imperialists: int = 51
    n_local_iter: int = 1
    upsilon: float = 0.1
    xi: float = 0.05
    independence_rate: float = 0.8
    n_a: int = 3
    alpha: float = 4.0
    beta: float = 1.0
    rho: float = 0.1
    sigma: float = 0.1
    q0: float = 0.8
    n_aco: int = 100
    n_i: int = 50

    def __post_init__(self):
        if self.n_aco < 1:
            raise ValueError("n_aco must be >= 1")
        self.ica  # noqa: B018  validates the shared ranges
        self.aco  # noqa: B018

    @property
    def ica(self) -> IcaParams:
        names = {f.name for f in fields(IcaParams)}
        return IcaParams(**{k: getattr(self, k) for k in names})

    @property
    def aco(self) -> AcoParams:
        names = {f.name for f in fields(AcoParams)}
        return AcoParams(**{k: getattr(self, k) for k in names})


@dataclass
class HybridCountry:
    country: Country
    pheromone: PheromoneMatrix

    @property
    def assignment(self) -> np.ndarray:
        return self.country.assignment

    @property
    def cost(self) -> float:
        return self.country.cost

    @property
    def best_solution(self) -> Solution:
        return self.country.best_solution


class _Context:
    """Per-run constants: heuristic matrix, reference trail and scratch buffers."""

    def __init__(self, instance: Instance, params: HybridParams):
        self.instance = instance
        self.params = params
        self.heur = heuristic_matrix(instance.dist, params.beta)
        n = max(instance.n_customers, 1)
        self.order = np.empty(n, dtype=np.int64)
        self.route = np.empty(n, dtype=np.int64)
        self.route_depot = np.empty(n, dtype=np.int64)
        self.weights = np.empty_like(self.heur)
        self.tau_ref = reference_trail(instance, params.sigma, params.rho)

    def fresh_pheromone(self) -> PheromoneMatrix:
        return PheromoneMatrix.uniform(self.instance.node_count, self.tau_ref, self.tau_ref)


def _route(assignment, pheromone: PheromoneMatrix, params: HybridParams, rng: np.random.Generator,
           ctx: _Context) -> tuple[float, int] | None:
    """Stage 2 into the context buffers; returns (cost, route count) or None on failure.

    Depots are routed in index order, each consuming its own contiguous block
    of uniforms from ``rng``. Visits land depot by depot in ``ctx.order``.
    """
    instance = ctx.instance
    groups = [np.flatnonzero(assignment == d) for d in range(instance.n_depots)]
    per_visit = params.n_aco * params.n_a * 2
    u = rng.random(per_visit * instance.n_customers)
    total = 0.0
    placed = 0
    n_routes = 0
    for d, cust in enumerate(groups):
        k = cust.size
        if k == 0:
            continue
        order, route = ctx.order[placed:placed + k], ctx.route[placed:placed + k]
        nr, cost = kernels.colony_search(
            instance.depot_node(d), cust, pheromone.tau, ctx.heur, ctx.weights, instance.dist, instance.demand,
            instance.service, instance.q_max[d], instance.r_max[d], int(instance.vehicles[d]),
            params.alpha, params.q0, params.rho, params.sigma, pheromone.tau_0, pheromone.tau_min,
            params.n_aco, params.n_a, u[per_visit * placed:per_visit * (placed + k)], order, route,
        )
        if nr < 0:
            return None
        route += n_routes
        ctx.route_depot[n_routes:n_routes + nr] = d
        n_routes += nr
        placed += k
        total += cost
    return total, n_routes


def _materialize(ctx: _Context, n_routes: int) -> Solution:
    n = ctx.instance.n_customers
    return from_arrays(ctx.instance, ctx.order[:n], ctx.route[:n], ctx.route_depot, n_routes)


def route_assignment(assignment, pheromone: PheromoneMatrix, instance: Instance, params: HybridParams,
                     rng: np.random.Generator, _ctx: _Context | None = None) -> Solution | None:
    """Route each depot's assigned customers with ACO on the shared matrix; None on failure."""
    ctx = _ctx or _Context(instance, params)
    out = _route(np.asarray(assignment, dtype=np.int64), pheromone, params, rng, ctx)
    if out is None:
        return None
    return _materialize(ctx, out[1])


def _update_trail(hc: HybridCountry, params: HybridParams, instance: Instance) -> None:
    if hc.best_solution.total_cost > 0:
        deposit(hc.pheromone, hc.best_solution, params.sigma, instance)
    evaporate(hc.pheromone, params.rho)


def _stage2(hc: HybridCountry, assignment, instance, params, rng, ctx) -> HybridCountry:
    snapshot = hc.pheromone.tau.copy()
    assignment = np.asarray(assignment, dtype=np.int64)
    out = _route(assignment, hc.pheromone, params, rng, ctx)
    if out is None:
        hc.pheromone.tau[...] = snapshot
        return hc
    if out[0] < hc.cost - TOL:
        sol = _materialize(ctx, out[1])
        hc = HybridCountry(Country(assignment, sol.total_cost, sol), hc.pheromone)
    _update_trail(hc, params, instance)
    return hc


def create_country(parent: HybridCountry, imperialist: HybridCountry, instance: Instance,
                   params: HybridParams, rng: np.random.Generator, _ctx: _Context | None = None) -> HybridCountry:
    ctx = _ctx or _Context(instance, params)
    new, triggered = independence_assignment(parent.assignment, params.independence_rate, rng, instance)
    if not triggered:
        new = assimilate_assignment(parent.assignment, imperialist.assignment, params.upsilon, rng, instance)
    return _stage2(parent, new, instance, params, rng, ctx)


def refine(country: HybridCountry, instance: Instance, params: HybridParams, rng, _ctx=None) -> HybridCountry:
    """Stage 2 alone on the country's current assignment."""
    ctx = _ctx or _Context(instance, params)
    return _stage2(country, country.assignment, instance, params, rng, ctx)


def _make_country_factory(instance, params, rng, ctx):
    def make(assignment):
        ph = ctx.fresh_pheromone()
        sol = route_assignment(assignment, ph, instance, params, rng, ctx)
        if sol is None:
            return None
        hc = HybridCountry(Country(assignment, sol.total_cost, sol), ph)
        _update_trail(hc, params, instance)
        return hc
    return make


def solve_hybrid(instance: Instance, params: HybridParams = HybridParams(), budget: Termination = Termination(),
                 rng: np.random.Generator | None = None) -> tuple[Solution, RunStats]:
    rng = rng if rng is not None else np.random.default_rng()
    clock = Budget(budget, params.n_i)
    stats = RunStats()
    if instance.n_customers == 0:
        stats.trace.append((0, 0.0, 0.0))
        return Solution([], 0.0), clock.finish(stats)

    ctx = _Context(instance, params)
    empires: list[Empire] = initialize_population(
        instance, params.ica, rng, _make_country_factory(instance, params, rng, ctx))
    best = best_country(empires)
    best_sol = best.best_solution
    stats.trace.append((0, clock.elapsed_ms(), best_sol.total_cost))
    stats.epochs.append((0, len(empires), best_sol.total_cost))
    timed_out = False
    while True:
        stats.iterations += 1
        for e in empires:
            e.imperialist = refine(e.imperialist, instance, params, rng, ctx)
            for k in range(len(e.colonies)):
                col = e.colonies[k]
                for _ in range(params.n_local_iter):
                    col = create_country(col, e.imperialist, instance, params, rng, ctx)
                e.colonies[k] = col
            swap_roles(e)
            if clock.out_of_time():
                timed_out = True
                break
        empires = imperialist_competition(empires, rng, params.xi)
        cand = best_country(empires)
        improved = cand.cost < best_sol.total_cost - TOL
        if improved:
            best_sol = cand.best_solution
            stats.trace.append((stats.iterations, clock.elapsed_ms(), best_sol.total_cost))
        stats.epochs.append((stats.iterations, len(empires), best_sol.total_cost))
        clock.record(improved)
        if clock.stagnated():
            stats.terminated_by = "stagnation"
            break
        if timed_out or clock.out_of_time():
            stats.terminated_by = "wall_clock"
            break

    if best_sol is None:
        raise InfeasibleError(f"{instance.name}: hybrid produced no feasible solution")
    log.debug("hybrid %s: best %.2f after %d epochs", instance.name, best_sol.total_cost, stats.iterations)
    return best_sol, clock.finish(stats)
