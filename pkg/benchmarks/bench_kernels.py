"""Time the numba and numpy kernel backends on the same inputs.

Usage: python benchmarks/bench_kernels.py [instance-file] [--repeat N]

Both backends get identical arrays and random streams, and their outputs are
compared before any timing is reported. Numba compile time is excluded by a
warm-up call.
"""
import argparse
import time
from pathlib import Path

import numpy as np

from mdvrp import load
from mdvrp.engine import heuristic_matrix
from mdvrp.kernels import get_backend

DEFAULT_INSTANCE = Path(__file__).resolve().parent.parent / "tests" / "data" / "cordeau" / "p01"


def cases(inst, rng):
    n = inst.n_customers
    dist, demand, service = inst.dist, inst.demand, inst.service
    heur = heuristic_matrix(dist, 1.0)
    tau = np.full(dist.shape, 1e-3)
    w = tau ** 2 * heur
    depots = np.arange(n, inst.node_count, dtype=np.int64)
    assign = np.argmin(dist[:n, n:], axis=1).astype(np.int64)
    cust0 = np.flatnonzero(assign == 0).astype(np.int64)
    u_all = rng.random(2 * n)
    u_col = rng.random(2 * cust0.size * 20 * 3)

    def interleaved(be):
        order, route, rd = (np.empty(n, dtype=np.int64) for _ in range(3))
        nr = be.construct_interleaved(n, depots, w, dist, demand, service, inst.q_max, inst.r_max,
                                      inst.vehicles, 0.5, u_all, order, route, rd)
        return nr, order.tolist()

    def colony(be):
        t = tau.copy()
        scratch = np.empty_like(t)
        order = np.empty(cust0.size, dtype=np.int64)
        route = np.empty(cust0.size, dtype=np.int64)
        out = be.colony_search(n, cust0, t, heur, scratch, dist, demand, service, inst.q_max[0], inst.r_max[0],
                               int(inst.vehicles[0]), 4.0, 0.8, 0.1, 0.1, 1e-3, 1e-3, 20, 3, u_col, order, route)
        return out, order.tolist(), t.sum()

    def decode(be):
        order, route, rd = (np.empty(n, dtype=np.int64) for _ in range(3))
        return be.decode_greedy(assign, inst.n_depots, heur, dist, demand, service, inst.q_max, inst.r_max,
                                inst.vehicles, order, route, rd)

    return {"construct_interleaved (one ant, all depots)": interleaved,
            "colony_search (20 iterations x 3 ants, one depot)": colony,
            "decode_greedy (one assignment)": decode}


def timeit(fn, be, repeat):
    best = np.inf
    for _ in range(3):
        start = time.perf_counter()
        for _ in range(repeat):
            fn(be)
        best = min(best, (time.perf_counter() - start) / repeat)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("instance", nargs="?", default=str(DEFAULT_INSTANCE))
    ap.add_argument("--repeat", type=int, default=50)
    args = ap.parse_args()
    inst = load(args.instance)
    nb, npy = get_backend("numba"), get_backend("numpy")
    print(f"instance {inst.name}: N={inst.n_customers} M={inst.n_depots}")
    print(f"{'kernel':52s} {'numba':>12s} {'numpy':>12s} {'speedup':>8s}")
    for name, fn in cases(inst, np.random.default_rng(0)).items():
        a, b = fn(nb), fn(npy)  # warm-up doubles as the parity check
        if repr(a) != repr(b):
            raise SystemExit(f"{name}: backends disagree")
        t_nb, t_np = timeit(fn, nb, args.repeat), timeit(fn, npy, max(1, args.repeat // 10))
        print(f"{name:52s} {t_nb * 1e6:10.1f}us {t_np * 1e6:10.1f}us {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
