"""Exhaustive optimum for tiny instances, used as a test oracle.

Enumerates every customer-to-depot assignment, every partition of a depot's
customers into at most K routes and every visiting order of each route.
Memoization only shares identical sub-enumerations; no pruning by bounds.
"""
from __future__ import annotations

from functools import lru_cache
from itertools import permutations

import numpy as np

from .instance import Instance
from .solution import TOL, Route, Solution, evaluate

MAX_CUSTOMERS = 9


class InstanceTooLarge(ValueError):
    pass


class InfeasibleError(RuntimeError):
    """No feasible solution exists or none could be constructed."""


@lru_cache(maxsize=None)
def _orderings(k: int) -> np.ndarray:
    """All orderings of range(k) with first < last (one of each reversal pair), lexicographic."""
    if k == 0:
        return np.zeros((1, 0), dtype=np.int64)
    p = np.array(list(permutations(range(k))), dtype=np.int64)
    if k > 1:
        p = p[p[:, 0] < p[:, -1]]
    return p


def _better(a, b) -> bool:
    if b is None:
        return a is not None
    if a is None:
        return False
    if a[0] < b[0] - TOL:
        return True
    if abs(a[0] - b[0]) <= TOL:
        return a[1] < b[1]
    return False


def _single_routes(instance: Instance, d: int):
    """Best single route for every customer subset served from depot ``d``."""
    n = instance.n_customers
    dist = instance.dist
    depot = instance.depot_node(d)
    q, r = instance.q_max[d], instance.r_max[d]
    demand, service = instance.demand, instance.service
    best = [None] * (1 << n)
    for mask in range(1, 1 << n):
        members = np.array([c for c in range(n) if mask >> c & 1], dtype=np.int64)
        if demand[members].sum() > q + TOL:
            continue
        seqs = members[_orderings(len(members))]
        travel = dist[depot, seqs[:, 0]] + dist[seqs[:, -1], depot]
        for p in range(seqs.shape[1] - 1):
            travel = travel + dist[seqs[:, p], seqs[:, p + 1]]
        ok = travel + service[members].sum() <= r + TOL
        if not ok.any():
            continue
        travel = np.where(ok, travel, np.inf)
        lo = travel.min()
        first = int(np.flatnonzero(travel <= lo + TOL)[0])
        best[mask] = (float(travel[first]), tuple(int(c) for c in seqs[first]))
    return best


def brute_force(instance: Instance) -> Solution:
    n, m = instance.n_customers, instance.n_depots
    if n > MAX_CUSTOMERS:
        raise InstanceTooLarge(f"exhaustive search limited to {MAX_CUSTOMERS} customers, got {n}")
    if n == 0:
        return Solution([], 0.0)
    if m == 0:
        raise InfeasibleError("no depots")
    singles = [_single_routes(instance, d) for d in range(m)]
    full = (1 << n) - 1

    @lru_cache(maxsize=None)
    def depot_part(d: int, mask: int, k: int):
        """Best (cost, encoding) covering exactly ``mask`` from depot d with <= k routes."""
        if mask == 0:
            return (0.0, ())
        if k == 0:
            return None
        low = mask & -mask
        rest = mask ^ low
        best = None
        sub = rest
        while True:
            t = sub | low
            route = singles[d][t]
            if route is not None:
                tail = depot_part(d, mask ^ t, k - 1)
                if tail is not None:
                    enc = tuple(sorted(((d, route[1]),) + tail[1]))
                    cand = (route[0] + tail[0], enc)
                    if _better(cand, best):
                        best = cand
            if sub == 0:
                break
            sub = (sub - 1) & rest
        return best

    @lru_cache(maxsize=None)
    def assign(d: int, mask: int):
        """Best (cost, encoding) serving ``mask`` from depots d..m-1."""
        if d == m:
            return (0.0, ()) if mask == 0 else None
        best = None
        sub = mask
        while True:
            here = depot_part(d, sub, int(instance.vehicles[d]))
            if here is not None:
                rest = assign(d + 1, mask ^ sub)
                if rest is not None:
                    cand = (here[0] + rest[0], tuple(sorted(here[1] + rest[1])))
                    if _better(cand, best):
                        best = cand
            if sub == 0:
                break
            sub = (sub - 1) & mask
        return best

    found = assign(0, full)
    if found is None:
        raise InfeasibleError("no feasible solution exists")
    sol = Solution([Route(d, seq) for d, seq in found[1]])
    evaluate(sol, instance)
    return sol
