"""Loop-form kernels compiled with numba.

Every stochastic decision reads from a caller-supplied buffer of uniforms,
two per customer placement (exploit test, roulette position), so that the
numba and numpy backends consume identical random streams. Transition
weights ``w[i, j] = tau[i, j] ** alpha * eta[i, j] ** beta`` are precomputed
by the caller; trails only change between iterations.
"""
import numpy as np
from numba import njit

EPS = 1e-9


@njit(cache=True)
def pick(cur, cand, n_cand, w, q0, u_exploit, u_roulette):
    """Index into ``cand[:n_cand]`` chosen by the pseudo-random proportional rule."""
    if n_cand == 1:
        return 0
    if u_exploit <= q0:
        best = 0
        best_w = -1.0
        for k in range(n_cand):
            x = w[cur, cand[k]]
            if x > best_w:
                best_w = x
                best = k
        return best
    acc = 0.0
    for k in range(n_cand):
        acc += w[cur, cand[k]]
    if not acc > 0.0:
        return min(int(u_roulette * n_cand), n_cand - 1)
    target = u_roulette * acc
    run = 0.0
    for k in range(n_cand):
        run += w[cur, cand[k]]
        if run > target:
            return k
    return n_cand - 1


@njit(cache=True)
def construct_depot(depot, cust, w, dist, demand, service, q_max, r_max, k_max, q0, u, order, route):
    """Build one depot's route set over ``cust``; returns route count or -1."""
    n = cust.shape[0]
    if n == 0:
        return 0
    return _construct(depot, cust, w, dist, demand, service, q_max, r_max, k_max, q0, u, order, route,
                      np.empty(n, dtype=np.bool_), np.empty(n, dtype=np.int64), np.empty(n, dtype=np.int64))


@njit(cache=True)
def _construct(depot, cust, w, dist, demand, service, q_max, r_max, k_max, q0, u, order, route,
               visited, cand, slot):
    n = cust.shape[0]
    visited[:] = False
    placed = 0
    n_routes = 0
    cur = depot
    load = 0.0
    dur = 0.0
    while placed < n:
        n_cand = 0
        for k in range(n):
            if visited[k]:
                continue
            j = cust[k]
            if load + demand[j] > q_max + EPS:
                continue
            if dur + dist[cur, j] + service[j] + dist[j, depot] > r_max + EPS:
                continue
            cand[n_cand] = j
            slot[n_cand] = k
            n_cand += 1
        if n_cand == 0:
            if cur == depot:
                return -1
            n_routes += 1
            if n_routes >= k_max:
                return -1
            cur = depot
            load = 0.0
            dur = 0.0
            continue
        c = pick(cur, cand, n_cand, w, q0, u[2 * placed], u[2 * placed + 1])
        j = cand[c]
        visited[slot[c]] = True
        order[placed] = j
        route[placed] = n_routes
        placed += 1
        load += demand[j]
        dur += dist[cur, j] + service[j]
        cur = j
    return n_routes + 1


@njit(cache=True)
def construct_interleaved(n_cust, depots, w, dist, demand, service,
                          q_max, r_max, k_max, q0, u, order, route, route_depot):
    """Round-robin multi-colony construction over a shared customer pool.

    Returns the total route count, or -1 when customers remain that no colony
    can take. ``route_depot[r]`` is the depot index of route ``r``.
    """
    m = depots.shape[0]
    visited = np.zeros(n_cust, dtype=np.bool_)
    cand = np.empty(n_cust, dtype=np.int64)
    cur = depots.copy()
    load = np.zeros(m)
    dur = np.zeros(m)
    used = np.zeros(m, dtype=np.int64)
    open_id = np.full(m, -1, dtype=np.int64)
    active = np.ones(m, dtype=np.bool_)
    n_active = m
    placed = 0
    n_routes = 0
    while placed < n_cust and n_active > 0:
        for d in range(m):
            if placed >= n_cust:
                break
            if not active[d]:
                continue
            depot = depots[d]
            n_cand = 0
            while True:
                n_cand = 0
                for j in range(n_cust):
                    if visited[j]:
                        continue
                    if load[d] + demand[j] > q_max[d] + EPS:
                        continue
                    if dur[d] + dist[cur[d], j] + service[j] + dist[j, depot] > r_max[d] + EPS:
                        continue
                    cand[n_cand] = j
                    n_cand += 1
                if n_cand > 0:
                    break
                if cur[d] == depot:
                    active[d] = False
                    n_active -= 1
                    break
                # close the open route
                used[d] += 1
                open_id[d] = -1
                cur[d] = depot
                load[d] = 0.0
                dur[d] = 0.0
                if used[d] >= k_max[d]:
                    active[d] = False
                    n_active -= 1
                    break
            if not active[d]:
                continue
            c = pick(cur[d], cand, n_cand, w, q0, u[2 * placed], u[2 * placed + 1])
            j = cand[c]
            if open_id[d] < 0:
                open_id[d] = n_routes
                route_depot[n_routes] = d
                n_routes += 1
            visited[j] = True
            order[placed] = j
            route[placed] = open_id[d]
            placed += 1
            load[d] += demand[j]
            dur[d] += dist[cur[d], j] + service[j]
            cur[d] = j
    if placed < n_cust:
        return -1
    return n_routes


@njit(cache=True)
def route_set_cost(depot, order, route, n, dist):
    """Length of a single-depot route set stored as (order, route id) arrays."""
    if n == 0:
        return 0.0
    total = dist[depot, order[0]]
    for p in range(1, n):
        if route[p] != route[p - 1]:
            total += dist[order[p - 1], depot] + dist[depot, order[p]]
        else:
            total += dist[order[p - 1], order[p]]
    total += dist[order[n - 1], depot]
    return total


@njit(cache=True)
def _deposit_route_set(tau, depot, order, route, n, amount):
    prev = depot
    for p in range(n):
        j = order[p]
        if p > 0 and route[p] != route[p - 1]:
            tau[prev, depot] += amount
            tau[depot, prev] += amount
            prev = depot
        tau[prev, j] += amount
        tau[j, prev] += amount
        prev = j
    if n > 0:
        tau[prev, depot] += amount
        tau[depot, prev] += amount


@njit(cache=True)
def int_power(alpha):
    """``alpha`` as an int when it is a small whole number, else -1."""
    if alpha >= 0.0 and alpha <= 8.0 and alpha == np.floor(alpha):
        return int(alpha)
    return -1


@njit(cache=True)
def _pow(t, alpha, k):
    if k < 0:
        return t ** alpha
    # repeated products match the vectorized backend bit for bit
    p = 1.0
    for _ in range(k):
        p = p * t
    return p


@njit(cache=True)
def _block_weights(w, tau, heur, alpha, nodes):
    m = nodes.shape[0]
    k = int_power(alpha)
    for a in range(m):
        ia = nodes[a]
        for b in range(m):
            ib = nodes[b]
            w[ia, ib] = _pow(tau[ia, ib], alpha, k) * heur[ia, ib]


@njit(cache=True)
def _relax_edge(tau, w, heur, i, j, keep, add, alpha, k):
    v = keep * tau[i, j] + add
    tau[i, j] = v
    tau[j, i] = v
    x = _pow(v, alpha, k)
    w[i, j] = x * heur[i, j]
    w[j, i] = x * heur[j, i]


@njit(cache=True)
def local_update(tau, w, heur, depot, order, route, n, sigma, tau_0, alpha):
    """Pull every edge of one ant's route set toward ``tau_0`` at rate ``sigma``.

    Edges are visited in travel order, so an edge used twice is relaxed twice.
    The matching entries of the weight matrix ``w`` are refreshed in place.
    """
    keep = 1.0 - sigma
    add = sigma * tau_0
    k = int_power(alpha)
    prev = depot
    for p in range(n):
        j = order[p]
        if p > 0 and route[p] != route[p - 1]:
            _relax_edge(tau, w, heur, prev, depot, keep, add, alpha, k)
            prev = depot
        _relax_edge(tau, w, heur, prev, j, keep, add, alpha, k)
        prev = j
    if n > 0:
        _relax_edge(tau, w, heur, prev, depot, keep, add, alpha, k)


@njit(cache=True)
def colony_search(depot, cust, tau, heur, w, dist, demand, service, q_max, r_max, k_max,
                  alpha, q0, rho, sigma, tau_0, tau_min, n_iter, n_ants, u, best_order, best_route):
    """Run ``n_iter`` iterations of ``n_ants`` ants for one depot.

    ``heur`` holds eta ** beta; ``w`` is scratch for the transition weights.
    Each ant relaxes its own edges toward ``tau_0`` as soon as it finishes.
    After each iteration the iteration-best route set deposits ``sigma / cost``
    on its edges, then the sub-block of edges among the depot and ``cust``
    evaporates by ``rho`` with floor ``tau_min``.
    Returns ``(route count, cost)`` of the best route set, count -1 if none found.
    """
    n = cust.shape[0]
    if n == 0:
        return 0, 0.0
    per_ant = 2 * n
    order = np.empty(n, dtype=np.int64)
    route = np.empty(n, dtype=np.int64)
    it_order = np.empty(n, dtype=np.int64)
    it_route = np.empty(n, dtype=np.int64)
    nodes = np.empty(n + 1, dtype=np.int64)
    nodes[:n] = cust
    nodes[n] = depot
    visited = np.empty(n, dtype=np.bool_)
    cand = np.empty(n, dtype=np.int64)
    slot = np.empty(n, dtype=np.int64)
    best_cost = np.inf
    best_nr = -1
    offset = 0
    keep = 1.0 - rho
    for it in range(n_iter):
        _block_weights(w, tau, heur, alpha, nodes)
        it_cost = np.inf
        it_nr = -1
        for a in range(n_ants):
            nr = _construct(depot, cust, w, dist, demand, service, q_max, r_max, k_max, q0,
                            u[offset:offset + per_ant], order, route, visited, cand, slot)
            offset += per_ant
            if nr < 0:
                continue
            local_update(tau, w, heur, depot, order, route, n, sigma, tau_0, alpha)
            cost = route_set_cost(depot, order, route, n, dist)
            if cost < it_cost:
                it_cost = cost
                it_nr = nr
                it_order[:] = order
                it_route[:] = route
        if it_nr >= 0:
            if it_cost < best_cost:
                best_cost = it_cost
                best_nr = it_nr
                best_order[:n] = it_order
                best_route[:n] = it_route
            if it_cost > 0.0:
                _deposit_route_set(tau, depot, it_order, it_route, n, sigma / it_cost)
        for a in range(n + 1):
            ia = nodes[a]
            for b in range(n + 1):
                ib = nodes[b]
                v = tau[ia, ib] * keep
                tau[ia, ib] = v if v > tau_min else tau_min
    return best_nr, best_cost


@njit(cache=True)
def decode_greedy(assign, n_depots, heur, dist, demand, service, q_max, r_max, k_max,
                  order, route, route_depot):
    """Nearest-admissible-neighbour routing of a fixed customer-to-depot assignment.

    Routes are written depot by depot into ``order``/``route``/``route_depot``.
    Returns ``(route count, cost)``; count -1 when some depot needs more than K routes.
    """
    n = assign.shape[0]
    u = np.zeros(2 * n)
    total = 0.0
    placed = 0
    n_routes = 0
    for d in range(n_depots):
        cnt = 0
        for c in range(n):
            if assign[c] == d:
                cnt += 1
        if cnt == 0:
            continue
        cust = np.empty(cnt, dtype=np.int64)
        k = 0
        for c in range(n):
            if assign[c] == d:
                cust[k] = c
                k += 1
        depot = n + d
        o = order[placed:placed + cnt]
        r = route[placed:placed + cnt]
        nr = construct_depot(depot, cust, heur, dist, demand, service, q_max[d], r_max[d],
                             k_max[d], 1.0, u, o, r)
        if nr < 0:
            return -1, np.inf
        total += route_set_cost(depot, o, r, cnt, dist)
        for p in range(cnt):
            r[p] += n_routes
        for q in range(nr):
            route_depot[n_routes + q] = d
        n_routes += nr
        placed += cnt
    return n_routes, total
