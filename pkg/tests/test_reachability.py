"""Each engine finds the best solution its construction rule can produce on tiny instances."""
import numpy as np
import pytest
from conftest import oracle_corpus
from reachable import (
    assignment_routing_reachable, greedy_decoder_reachable, interleaved_reachable,
)

from mdvrp import AcoParams, HybridParams, IcaParams, Termination, solve_aco, solve_hybrid, solve_ica

CORPUS = oracle_corpus()
ENGINES = {
    "aco": (solve_aco, AcoParams(n_i=3000), interleaved_reachable),
    "ica": (solve_ica, IcaParams(n_population=32, n_imperialists=8), greedy_decoder_reachable),
    "hybrid": (solve_hybrid, HybridParams(n_population=16, n_imperialists=4), assignment_routing_reachable),
}


@pytest.mark.parametrize("engine", sorted(ENGINES))
@pytest.mark.parametrize("k", range(len(CORPUS)), ids=[inst.name for inst, _ in CORPUS])
def test_engine_reaches_its_reachable_optimum(engine, k):
    inst, optimum = CORPUS[k]
    solve, params, reachable = ENGINES[engine]
    target = reachable(inst)
    assert target >= optimum - 1e-9
    best = np.inf
    for seed in range(1, 11):
        sol, _ = solve(inst, params, Termination(wall_clock_limit=10), np.random.default_rng(seed))
        best = min(best, sol.total_cost)
        if best <= target + 1e-9:
            break
    assert best == pytest.approx(target, abs=1e-9)
