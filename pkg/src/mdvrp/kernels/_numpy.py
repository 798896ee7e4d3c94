"""Vectorized numpy kernels; same contracts and random-stream layout as ``_numba``."""
import numpy as np

EPS = 1e-9


def pick(cur, cand, n_cand, w, q0, u_exploit, u_roulette):
    if n_cand == 1:
        return 0
    x = w[cur, cand[:n_cand]]
    if u_exploit <= q0:
        return int(np.argmax(x))
    cum = np.cumsum(x)
    acc = cum[-1]
    if not acc > 0.0:
        return min(int(u_roulette * n_cand), n_cand - 1)
    k = int(np.searchsorted(cum, u_roulette * acc, side="right"))
    return min(k, n_cand - 1)


def construct_depot(depot, cust, w, dist, demand, service, q_max, r_max, k_max, q0, u, order, route):
    n = cust.shape[0]
    if n == 0:
        return 0
    remaining = np.ones(n, dtype=bool)
    dem = demand[cust]
    svc = service[cust]
    back = dist[cust, depot]
    placed = 0
    n_routes = 0
    cur = depot
    load = 0.0
    dur = 0.0
    while placed < n:
        ok = remaining & (load + dem <= q_max + EPS) & (dur + dist[cur, cust] + svc + back <= r_max + EPS)
        slots = np.flatnonzero(ok)
        if slots.size == 0:
            if cur == depot:
                return -1
            n_routes += 1
            if n_routes >= k_max:
                return -1
            cur, load, dur = depot, 0.0, 0.0
            continue
        cand = cust[slots]
        c = pick(cur, cand, cand.size, w, q0, u[2 * placed], u[2 * placed + 1])
        j = cand[c]
        remaining[slots[c]] = False
        order[placed] = j
        route[placed] = n_routes
        placed += 1
        load += demand[j]
        dur += dist[cur, j] + service[j]
        cur = j
    return n_routes + 1


def construct_interleaved(n_cust, depots, w, dist, demand, service,
                          q_max, r_max, k_max, q0, u, order, route, route_depot):
    m = depots.shape[0]
    remaining = np.ones(n_cust, dtype=bool)
    svc = service[:n_cust]
    cur = depots.copy()
    load = np.zeros(m)
    dur = np.zeros(m)
    used = np.zeros(m, dtype=np.int64)
    open_id = np.full(m, -1, dtype=np.int64)
    active = np.ones(m, dtype=bool)
    placed = 0
    n_routes = 0
    while placed < n_cust and active.any():
        for d in range(m):
            if placed >= n_cust:
                break
            if not active[d]:
                continue
            depot = depots[d]
            while True:
                ok = (remaining
                      & (load[d] + demand <= q_max[d] + EPS)
                      & (dur[d] + dist[cur[d], :n_cust] + svc + dist[:n_cust, depot] <= r_max[d] + EPS))
                cand = np.flatnonzero(ok)
                if cand.size:
                    break
                if cur[d] == depot:
                    active[d] = False
                    break
                used[d] += 1
                open_id[d] = -1
                cur[d], load[d], dur[d] = depot, 0.0, 0.0
                if used[d] >= k_max[d]:
                    active[d] = False
                    break
            if not active[d]:
                continue
            c = pick(cur[d], cand, cand.size, w, q0, u[2 * placed], u[2 * placed + 1])
            j = cand[c]
            if open_id[d] < 0:
                open_id[d] = n_routes
                route_depot[n_routes] = d
                n_routes += 1
            remaining[j] = False
            order[placed] = j
            route[placed] = open_id[d]
            placed += 1
            load[d] += demand[j]
            dur[d] += dist[cur[d], j] + service[j]
            cur[d] = j
    if placed < n_cust:
        return -1
    return n_routes


def int_power(alpha):
    if 0.0 <= alpha <= 8.0 and alpha == np.floor(alpha):
        return int(alpha)
    return -1


def power(t, alpha):
    """``t ** alpha`` by repeated products for small whole ``alpha``."""
    k = int_power(alpha)
    if k < 0:
        return t ** alpha
    p = np.ones_like(t)
    for _ in range(k):
        p = p * t
    return p


def _pow(t, alpha, k):
    if k < 0:
        return t ** alpha
    p = 1.0
    for _ in range(k):
        p = p * t
    return p


def local_update(tau, w, heur, depot, order, route, n, sigma, tau_0, alpha):
    keep = 1.0 - sigma
    add = sigma * tau_0
    k = int_power(alpha)
    a, b = _path_edges(depot, order, route, n)
    for i, j in zip(a.tolist(), b.tolist()):
        v = keep * tau[i, j] + add
        tau[i, j] = v
        tau[j, i] = v
        x = _pow(v, alpha, k)
        w[i, j] = x * heur[i, j]
        w[j, i] = x * heur[j, i]


def _path_edges(depot, order, route, n):
    """Edges of a route set in travel order."""
    a, b = [], []
    prev = depot
    for p in range(n):
        j = int(order[p])
        if p > 0 and route[p] != route[p - 1]:
            a.append(prev)
            b.append(depot)
            prev = depot
        a.append(prev)
        b.append(j)
        prev = j
    if n > 0:
        a.append(prev)
        b.append(depot)
    return np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)


def route_set_cost(depot, order, route, n, dist):
    if n == 0:
        return 0.0
    # sequential sum in visiting order keeps parity with the loop kernel
    total = dist[depot, order[0]]
    for p in range(1, n):
        if route[p] != route[p - 1]:
            total += dist[order[p - 1], depot] + dist[depot, order[p]]
        else:
            total += dist[order[p - 1], order[p]]
    return float(total + dist[order[n - 1], depot])


def _deposit_route_set(tau, depot, order, route, n, amount):
    if n == 0:
        return
    a, b = _path_edges(depot, order, route, n)
    np.add.at(tau, (a, b), amount)
    np.add.at(tau, (b, a), amount)


def colony_search(depot, cust, tau, heur, w, dist, demand, service, q_max, r_max, k_max,
                  alpha, q0, rho, sigma, tau_0, tau_min, n_iter, n_ants, u, best_order, best_route):
    n = cust.shape[0]
    if n == 0:
        return 0, 0.0
    per_ant = 2 * n
    order = np.empty(n, dtype=np.int64)
    route = np.empty(n, dtype=np.int64)
    it_order = np.empty(n, dtype=np.int64)
    it_route = np.empty(n, dtype=np.int64)
    nodes = np.append(cust, depot)
    block = np.ix_(nodes, nodes)
    best_cost = np.inf
    best_nr = -1
    offset = 0
    for _ in range(n_iter):
        w[block] = power(tau[block], alpha) * heur[block]
        it_cost = np.inf
        it_nr = -1
        for _ in range(n_ants):
            nr = construct_depot(depot, cust, w, dist, demand, service, q_max, r_max,
                                 k_max, q0, u[offset:offset + per_ant], order, route)
            offset += per_ant
            if nr < 0:
                continue
            local_update(tau, w, heur, depot, order, route, n, sigma, tau_0, alpha)
            cost = route_set_cost(depot, order, route, n, dist)
            if cost < it_cost:
                it_cost, it_nr = cost, nr
                it_order[:] = order
                it_route[:] = route
        if it_nr >= 0:
            if it_cost < best_cost:
                best_cost, best_nr = it_cost, it_nr
                best_order[:n] = it_order
                best_route[:n] = it_route
            if it_cost > 0.0:
                _deposit_route_set(tau, depot, it_order, it_route, n, sigma / it_cost)
        tau[block] = np.maximum(tau[block] * (1.0 - rho), tau_min)
    return best_nr, best_cost


def decode_greedy(assign, n_depots, heur, dist, demand, service, q_max, r_max, k_max,
                  order, route, route_depot):
    n = assign.shape[0]
    u = np.zeros(2 * n)
    total = 0.0
    placed = 0
    n_routes = 0
    for d in range(n_depots):
        cust = np.flatnonzero(assign == d)
        cnt = cust.size
        if cnt == 0:
            continue
        depot = n + d
        o = order[placed:placed + cnt]
        r = route[placed:placed + cnt]
        nr = construct_depot(depot, cust, heur, dist, demand, service, q_max[d], r_max[d],
                             k_max[d], 1.0, u, o, r)
        if nr < 0:
            return -1, np.inf
        total += route_set_cost(depot, o, r, cnt, dist)
        r += n_routes
        route_depot[n_routes:n_routes + nr] = d
        n_routes += nr
        placed += cnt
    return n_routes, total
