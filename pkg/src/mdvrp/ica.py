"""Imperialist competitive algorithm over customer-to-depot assignments.

A country is a vector holding, for every customer, the index of the depot that
serves it. Countries are kept within the depot capacity rule (total demand
assigned to a depot never exceeds K * Q_max of that depot) by every operator.
Standalone ICA turns an assignment into routes with a deterministic
nearest-admissible-neighbour decoder.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .engine import Budget, RunStats, Termination, heuristic_matrix
from .instance import Instance
from .oracle import InfeasibleError
from .solution import TOL, Solution, from_arrays

log = logging.getLogger(__name__)

MAX_RESTARTS = 1000


@dataclass
class Country:
    assignment: np.ndarray
    cost: float
    best_solution: Solution | None = None


@dataclass
class Empire:
    imperialist: Country
    colonies: list = field(default_factory=list)


@dataclass(frozen=True)
class IcaParams:
    n_population: int = 4096
    n_imperialists: int = 1638
    n_local_iter: int = 16
    upsilon: float = 0.05
    xi: float = 0.05
    independence_rate: float = 0.7
    n_i: int = 10

    def __post_init__(self):
        if not 1 <= self.n_imperialists < self.n_population:
            raise ValueError("need 1 <= n_imperialists < n_population")
        if self.n_local_iter < 1 or self.n_i < 1:
            raise ValueError("n_local_iter and n_i must be >= 1")
        for name in ("upsilon", "xi", "independence_rate"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must lie in (0, 1)")


class GreedyDecoder:
    """Assignment -> routes by nearest admissible neighbour, memoized on the assignment."""

    def __init__(self, instance: Instance, cache_size: int = 200_000):
        self.instance = instance
        n = instance.n_customers
        self._heur = heuristic_matrix(instance.dist, 1.0)
        self._order = np.empty(n, dtype=np.int64)
        self._route = np.empty(n, dtype=np.int64)
        self._route_depot = np.empty(max(n, 1), dtype=np.int64)
        self._cache: dict[bytes, float] = {}
        self._cache_size = cache_size

    def _run(self, assignment):
        inst = self.instance
        return kernels.decode_greedy(
            np.ascontiguousarray(assignment, dtype=np.int64), inst.n_depots, self._heur,
            inst.dist, inst.demand, inst.service, inst.q_max, inst.r_max, inst.vehicles,
            self._order, self._route, self._route_depot,
        )

    def cost(self, assignment) -> float:
        """Routed cost of ``assignment``; inf when a depot cannot route its share in K vehicles."""
        key = np.asarray(assignment, dtype=np.int64).tobytes()
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        nr, cost = self._run(assignment)
        cost = float(cost) if nr >= 0 else np.inf
        if len(self._cache) >= self._cache_size:
            self._cache.clear()
        self._cache[key] = cost
        return cost

    def solution(self, assignment) -> Solution | None:
        nr, _ = self._run(assignment)
        if nr < 0:
            return None
        return from_arrays(self.instance, self._order, self._route, self._route_depot, nr)

    def __call__(self, assignment) -> Country:
        return Country(np.asarray(assignment, dtype=np.int64), self.cost(assignment))


def depot_loads(assignment, instance: Instance) -> np.ndarray:
    return np.bincount(assignment, weights=instance.demand, minlength=instance.n_depots)


def capacity_ok(assignment, instance: Instance) -> bool:
    return bool(np.all(depot_loads(assignment, instance) <= instance.depot_capacity + TOL))


def random_assignment(instance: Instance, rng: np.random.Generator) -> np.ndarray:
    """Uniform depot per customer; a draw that overflows a depot is redrawn among depots with slack."""
    n, m = instance.n_customers, instance.n_depots
    cap = instance.depot_capacity
    dem = instance.demand
    for _ in range(MAX_RESTARTS):
        load = np.zeros(m)
        out = np.empty(n, dtype=np.int64)
        picks = rng.integers(0, m, size=n)
        for c in range(n):
            d = picks[c]
            if load[d] + dem[c] > cap[d] + TOL:
                slack = np.flatnonzero(load + dem[c] <= cap + TOL)
                if slack.size == 0:
                    break
                d = slack[rng.integers(slack.size)]
            out[c] = d
            load[d] += dem[c]
        else:
            return out
    raise InfeasibleError(f"no capacity-feasible assignment after {MAX_RESTARTS} restarts")


def _colony_counts(costs, n_colonies: int) -> np.ndarray:
    """Colonies per empire proportional to inverse imperialist cost; remainder to the strongest."""
    inv = 1.0 / np.maximum(np.asarray(costs, dtype=np.float64), 1e-12)
    counts = np.floor(n_colonies * inv / inv.sum()).astype(np.int64)
    counts[0] += n_colonies - counts.sum()
    return counts


def form_empires(countries: list, n_imperialists: int, rng: np.random.Generator) -> list[Empire]:
    ranked = sorted(countries, key=lambda c: c.cost)
    imps, cols = ranked[:n_imperialists], ranked[n_imperialists:]
    counts = _colony_counts([c.cost for c in imps], len(cols))
    perm = rng.permutation(len(cols))
    empires, start = [], 0
    for imp, k in zip(imps, counts):
        empires.append(Empire(imp, [cols[i] for i in perm[start : start + k]]))
        start += k
    return empires


def initialize_population(instance: Instance, params: IcaParams, rng: np.random.Generator,
                          make_country=None) -> list[Empire]:
    """Random feasible countries split into empires.

    ``make_country(assignment)`` evaluates an assignment and returns a country,
    or None when it cannot be routed; such draws are discarded and redrawn.
    """
    make_country = make_country or GreedyDecoder(instance)
    countries, rejected = [], 0
    while len(countries) < params.n_population:
        country = make_country(random_assignment(instance, rng))
        if country is None or not np.isfinite(country.cost):
            rejected += 1
            if rejected > MAX_RESTARTS * max(1, params.n_population // 16):
                raise InfeasibleError("could not build a routable initial population")
            continue
        countries.append(country)
    return form_empires(countries, params.n_imperialists, rng)


def assimilate_assignment(colony, imperialist, upsilon: float, rng, instance: Instance) -> np.ndarray:
    """Adopt each imperialist gene with probability ``upsilon`` unless it breaks depot capacity."""
    colony = np.asarray(colony, dtype=np.int64)
    imperialist = np.asarray(imperialist, dtype=np.int64)
    mask = np.asarray(rng.random(colony.size)) < upsilon
    out = colony.copy()
    load = depot_loads(colony, instance)
    cap = instance.depot_capacity
    dem = instance.demand
    for c in np.flatnonzero(mask & (colony != imperialist)):
        src, dst = out[c], imperialist[c]
        if load[dst] + dem[c] <= cap[dst] + TOL:
            out[c] = dst
            load[dst] += dem[c]
            load[src] -= dem[c]
    return out


def independence_assignment(colony, rate: float, rng, instance: Instance) -> tuple[np.ndarray, bool]:
    """Maybe reassign one random customer to another depot.

    Returns ``(assignment, triggered)``; ``triggered`` is False when the draw
    says the colony stays loyal (the caller assimilates instead).
    """
    colony = np.asarray(colony, dtype=np.int64)
    if not rng.random() < rate:
        return colony, False
    m = instance.n_depots
    if m < 2 or colony.size == 0:
        return colony, True
    pos = int(rng.integers(colony.size))
    old = colony[pos]
    new = int(rng.integers(m - 1))
    if new >= old:
        new += 1
    if depot_loads(colony, instance)[new] + instance.demand[pos] > instance.depot_capacity[new] + TOL:
        return colony, True
    out = colony.copy()
    out[pos] = new
    return out, True


def assimilate(colony: Country, imperialist: Country, upsilon: float, rng, instance: Instance,
               decoder: GreedyDecoder | None = None) -> Country:
    decoder = decoder or GreedyDecoder(instance)
    return decoder(assimilate_assignment(colony.assignment, imperialist.assignment, upsilon, rng, instance))


def independence(colony: Country, independence_rate: float, rng, instance: Instance,
                 decoder: GreedyDecoder | None = None) -> Country:
    new, _ = independence_assignment(colony.assignment, independence_rate, rng, instance)
    if new is colony.assignment or np.array_equal(new, colony.assignment):
        return colony
    decoder = decoder or GreedyDecoder(instance)
    return decoder(new)


def empire_power(empire: Empire, xi: float) -> float:
    """Total cost of an empire; lower is stronger."""
    if not empire.colonies:
        return float(empire.imperialist.cost)
    return float(empire.imperialist.cost + xi * np.mean([c.cost for c in empire.colonies]))


def swap_roles(empire: Empire) -> None:
    if not empire.colonies:
        return
    k = int(np.argmin([c.cost for c in empire.colonies]))
    if empire.colonies[k].cost < empire.imperialist.cost:
        empire.colonies[k], empire.imperialist = empire.imperialist, empire.colonies[k]


def imperialist_competition(empires: list[Empire], rng, xi: float = 0.05) -> list[Empire]:
    """Hand the weakest empire's weakest colony to a stronger empire; collapse empty empires."""
    if len(empires) < 2:
        for e in empires:
            swap_roles(e)
        return empires
    power = np.array([empire_power(e, xi) for e in empires])
    weak = int(np.argmax(power))
    others = [i for i in range(len(empires)) if i != weak]
    adv = np.maximum(power[weak] - power[others], 0.0)
    if adv.sum() > 0:
        p = adv / adv.sum()
    else:
        p = np.full(len(others), 1.0 / len(others))
    u = rng.random()
    k = min(int(np.searchsorted(np.cumsum(p), u, side="right")), len(others) - 1)
    winner = empires[others[k]]
    loser = empires[weak]
    if loser.colonies:
        worst = int(np.argmax([c.cost for c in loser.colonies]))
        winner.colonies.append(loser.colonies.pop(worst))
    if not loser.colonies:
        winner.colonies.append(loser.imperialist)
        empires = [e for i, e in enumerate(empires) if i != weak]
    for e in empires:
        swap_roles(e)
    return empires


def best_country(empires: list[Empire]):
    return min((e.imperialist for e in empires), key=lambda c: c.cost)


def _evolve_colony(colony: Country, imperialist: Country, params: IcaParams, rng,
                   instance: Instance, decoder: GreedyDecoder) -> Country:
    best = None
    for _ in range(params.n_local_iter):
        new, triggered = independence_assignment(colony.assignment, params.independence_rate, rng, instance)
        if not triggered:
            new = assimilate_assignment(colony.assignment, imperialist.assignment, params.upsilon, rng, instance)
        cand = decoder(new)
        if best is None or cand.cost < best.cost:
            best = cand
    return best if best.cost <= colony.cost else colony


def solve_ica(instance: Instance, params: IcaParams = IcaParams(), budget: Termination = Termination(),
              rng: np.random.Generator | None = None) -> tuple[Solution, RunStats]:
    rng = rng if rng is not None else np.random.default_rng()
    clock = Budget(budget, params.n_i)
    stats = RunStats()
    if instance.n_customers == 0:
        stats.trace.append((0, 0.0, 0.0))
        return Solution([], 0.0), clock.finish(stats)

    decoder = GreedyDecoder(instance)
    empires = initialize_population(instance, params, rng, decoder)
    best = best_country(empires)
    stats.trace.append((0, clock.elapsed_ms(), best.cost))
    stats.epochs.append((0, len(empires), best.cost))
    timed_out = False
    while True:
        stats.iterations += 1
        for e in empires:
            for k, colony in enumerate(e.colonies):
                e.colonies[k] = _evolve_colony(colony, e.imperialist, params, rng, instance, decoder)
            swap_roles(e)
            if clock.out_of_time():
                timed_out = True
                break
        empires = imperialist_competition(empires, rng, params.xi)
        cand = best_country(empires)
        improved = cand.cost < best.cost - TOL
        if improved:
            best = cand
            stats.trace.append((stats.iterations, clock.elapsed_ms(), best.cost))
        stats.epochs.append((stats.iterations, len(empires), best.cost))
        clock.record(improved)
        if clock.stagnated():
            stats.terminated_by = "stagnation"
            break
        if timed_out or clock.out_of_time():
            stats.terminated_by = "wall_clock"
            break

    sol = decoder.solution(best.assignment)
    best.best_solution = sol
    log.debug("ica %s: best %.2f after %d epochs", instance.name, sol.total_cost, stats.iterations)
    return sol, clock.finish(stats)
