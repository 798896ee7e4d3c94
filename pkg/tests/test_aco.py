import math

import numpy as np
import pytest
from conftest import o1, random_tiny
from hypothesis import given, settings
from hypothesis import strategies as st

from mdvrp import AcoParams, PheromoneMatrix, Route, Solution, Termination, check_feasible, make_instance, solve_aco
from mdvrp.aco import construct_route_set, deposit, evaporate, reference_trail, select_next, star_cost
from mdvrp.solution import evaluate

CHI2_DF2_P001 = 13.816  # upper 0.1% point of chi-square with 2 degrees of freedom


def star3():
    """Depot at the origin, three customers at distance 2."""
    return make_instance([(0, 0)], [(2, 0, 1), (0, 2, 1), (-2, 0, 1)])


def test_single_candidate_ignores_draws():
    inst = star3()
    ph = PheromoneMatrix.uniform(inst.node_count)
    for seed in range(5):
        assert select_next(3, [1], ph, AcoParams(q0=0.0), np.random.default_rng(seed), inst) == 1


def test_exploitation_picks_nearest():
    inst = make_instance([(0, 0)], [(2, 0, 1), (4, 0, 1)])
    ph = PheromoneMatrix.uniform(inst.node_count)
    for seed in range(20):
        assert select_next(2, [1, 0], ph, AcoParams(q0=1.0), np.random.default_rng(seed), inst) == 0


def test_empty_candidates_rejected():
    inst = star3()
    with pytest.raises(ValueError):
        select_next(3, [], PheromoneMatrix.uniform(4), AcoParams(), np.random.default_rng(0), inst)


def chi2(counts, probs):
    expected = np.asarray(probs) * sum(counts)
    return float(((np.asarray(counts) - expected) ** 2 / expected).sum())


def test_uniform_sampling_chi_square():
    inst = star3()
    ph = PheromoneMatrix.uniform(inst.node_count)
    rng = np.random.default_rng(2024)
    counts = np.zeros(3)
    for _ in range(100_000):
        counts[select_next(3, [0, 1, 2], ph, AcoParams(q0=0.0), rng, inst)] += 1
    assert chi2(counts, [1 / 3] * 3) < CHI2_DF2_P001


def test_weighted_sampling_chi_square():
    inst = make_instance([(0, 0)], [(1, 0, 1), (0, 2, 1), (-4, 0, 1)])
    ph = PheromoneMatrix.uniform(inst.node_count)
    ph.tau[3, 2] = 2.0  # alpha = 2 makes this edge 4x heavier
    weights = np.array([1 / 1, 1 / 2, 4 / 4])
    rng = np.random.default_rng(7)
    counts = np.zeros(3)
    for _ in range(60_000):
        counts[select_next(3, [0, 1, 2], ph, AcoParams(q0=0.0, alpha=2.0, beta=1.0), rng, inst)] += 1
    assert chi2(counts, weights / weights.sum()) < CHI2_DF2_P001


def test_construct_empty_allowed():
    inst = o1()
    assert construct_route_set(0, [], PheromoneMatrix.uniform(6), inst, AcoParams(), np.random.default_rng(0)) == []


def test_construct_greedy_on_line():
    inst = o1()
    routes = construct_route_set(0, {0, 1}, PheromoneMatrix.uniform(6), inst, AcoParams(q0=1.0),
                                 np.random.default_rng(0))
    assert [r.visits for r in routes] == [(0, 1)]
    assert routes[0].cost == 4.0


def test_construct_fails_when_fleet_too_small():
    inst = make_instance([(0, 0)], [(1, 0, 1), (2, 0, 1), (3, 0, 1)], q_max=1, vehicles=2)
    out = construct_route_set(0, {0, 1, 2}, PheromoneMatrix.uniform(4), inst, AcoParams(), np.random.default_rng(0))
    assert out is None


def greedy_reference(inst, depot, allowed):
    """Independent nearest-admissible-neighbour construction."""
    left = sorted(allowed)
    d = inst.dist
    node = inst.depot_node(depot)
    routes, cur, load, dur, visits = [], node, 0.0, 0.0, []
    while left:
        ok = [c for c in left
              if load + inst.demand[c] <= inst.q_max[depot] + 1e-9
              and dur + d[cur, c] + inst.service[c] + d[c, node] <= inst.r_max[depot] + 1e-9]
        if not ok:
            if not visits:
                return None
            routes.append(tuple(visits))
            cur, load, dur, visits = node, 0.0, 0.0, []
            continue
        c = min(ok, key=lambda j: (d[cur, j], j))
        visits.append(c)
        left.remove(c)
        load += inst.demand[c]
        dur += d[cur, c] + inst.service[c]
        cur = c
    routes.append(tuple(visits))
    return routes if len(routes) <= inst.vehicles[depot] else None


@pytest.mark.parametrize("seed", range(25))
def test_exploitation_with_uniform_trail_is_nearest_neighbour(seed):
    rng = np.random.default_rng(seed)
    inst = random_tiny(rng)
    allowed = set(range(inst.n_customers))
    got = construct_route_set(0, allowed, PheromoneMatrix.uniform(inst.node_count), inst, AcoParams(q0=1.0), rng)
    want = greedy_reference(inst, 0, allowed)
    assert (None if got is None else [r.visits for r in got]) == want
    if got is not None:
        sol = Solution(got)
        evaluate(sol, inst)
        assert [v.constraint for v in check_feasible(sol, inst) if v.constraint != "unserved"] == []


def test_evaporate_examples():
    ph = PheromoneMatrix.uniform(3)
    evaporate(ph, 0.1)
    assert np.allclose(ph.tau, 0.9)
    evaporate(ph, 0.1)
    assert np.allclose(ph.tau, 0.81)
    floor = PheromoneMatrix.uniform(3, tau_0=1e-6, tau_min=1e-6)
    evaporate(floor, 0.1)
    assert np.all(floor.tau == 1e-6)
    with pytest.raises(ValueError):
        evaporate(ph, 1.0)


def test_deposit_examples():
    inst = make_instance([(0, 0)], [(3, 4, 1), (10, 10, 1)])
    sol = Solution([Route(0, (0,))])
    evaluate(sol, inst)
    assert sol.total_cost == 10.0
    ph = PheromoneMatrix.uniform(3)
    deposit(ph, sol, 0.1, inst)
    # the out-and-back route uses edge (2, 0) twice
    assert ph.tau[2, 0] == ph.tau[0, 2] == pytest.approx(1.02)
    assert ph.tau[1, 2] == 1.0 and ph.tau[0, 1] == 1.0
    deposit(ph, sol, 0.1, inst)
    assert ph.tau[2, 0] == pytest.approx(1.04)


def test_deposit_single_traversal_edges():
    inst = o1()
    sol = Solution([Route(0, (0, 1)), Route(1, (3, 2))])
    evaluate(sol, inst)
    ph = PheromoneMatrix.uniform(6)
    deposit(ph, sol, 0.1, inst)
    assert ph.tau[0, 1] == pytest.approx(1.0 + 0.1 / 8)
    deposit(ph, sol, 0.1, inst)
    assert ph.tau[1, 0] == pytest.approx(1.0 + 0.2 / 8)
    assert ph.tau[1, 2] == 1.0


def test_deposit_rejects_zero_cost():
    inst = make_instance([(0, 0)], [(0, 0, 1)])
    sol = Solution([Route(0, (0,))])
    evaluate(sol, inst)
    with pytest.raises(ValueError):
        deposit(PheromoneMatrix.uniform(2), sol, 0.1, inst)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.booleans(), st.floats(0.01, 0.99)), max_size=60))
def test_floor_holds_under_any_update_sequence(ops):
    inst = o1()
    sol = Solution([Route(0, (0, 1)), Route(1, (2, 3))])
    evaluate(sol, inst)
    ph = PheromoneMatrix.uniform(6, tau_0=1e-3, tau_min=1e-4)
    for is_deposit, rate in ops:
        if is_deposit:
            deposit(ph, sol, rate, inst)
        else:
            evaporate(ph, rate)
        assert np.all(ph.tau >= ph.tau_min)
        assert np.array_equal(ph.tau, ph.tau.T)


def test_reference_trail_on_p01(p01):
    assert star_cost(p01) == pytest.approx(1415.36, abs=0.01)
    assert reference_trail(p01, 0.1, 0.1) == pytest.approx(1 / 1415.36, rel=1e-5)


def test_params_validation():
    with pytest.raises(ValueError):
        AcoParams(rho=0.0)
    with pytest.raises(ValueError):
        AcoParams(q0=1.5)
    with pytest.raises(ValueError):
        AcoParams(n_a=0)


def test_solve_o1_reaches_optimum():
    costs = [solve_aco(o1(), AcoParams(n_i=200), Termination(wall_clock_limit=10), np.random.default_rng(s))[0].total_cost
             for s in range(1, 11)]
    assert min(costs) == pytest.approx(8.0, abs=1e-9)


def test_zero_customers():
    inst = make_instance([(0, 0)], [])
    sol, stats = solve_aco(inst, AcoParams(), Termination(stagnation_iterations=5))
    assert sol.routes == [] and sol.total_cost == 0.0


def test_fixed_seed_is_reproducible(p01):
    runs = [solve_aco(p01, AcoParams(n_i=30), Termination(), np.random.default_rng(3)) for _ in range(2)]
    (a, sa), (b, sb) = runs
    assert a.encoding() == b.encoding() and a.total_cost == b.total_cost
    assert [t[::2] for t in sa.trace] == [t[::2] for t in sb.trace]
    assert sa.terminated_by == "stagnation" and check_feasible(a, p01) == []
    assert sa.trace_csv().startswith("iteration,elapsed_ms,best_cost\n")


def test_wall_clock_stop(p01):
    _, stats = solve_aco(p01, AcoParams(), Termination(wall_clock_limit=0.5), np.random.default_rng(1))
    assert stats.terminated_by == "wall_clock" and stats.elapsed < 5


def test_infeasible_instance_reports():
    from mdvrp import InfeasibleError
    inst = o1(q_max=1)
    with pytest.raises(InfeasibleError, match="no feasible solution"):
        solve_aco(inst, AcoParams(n_i=5), Termination(), np.random.default_rng(0))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_solutions_are_feasible(seed):
    rng = np.random.default_rng(seed)
    inst = random_tiny(rng)
    from mdvrp import InfeasibleError
    try:
        sol, _ = solve_aco(inst, AcoParams(n_i=20), Termination(wall_clock_limit=5), rng)
    except InfeasibleError:
        return
    assert check_feasible(sol, inst) == []
    assert math.isclose(sol.total_cost, evaluate(sol, inst))
