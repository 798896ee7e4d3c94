import numpy as np
import pytest
from conftest import o1, random_tiny
from hypothesis import given, settings
from hypothesis import strategies as st

from mdvrp import IcaParams, Termination, check_feasible, make_instance, solve_ica
from mdvrp.ica import (
    Country, Empire, GreedyDecoder, assimilate, assimilate_assignment, capacity_ok, empire_power,
    form_empires, imperialist_competition, independence, independence_assignment, initialize_population,
    random_assignment,
)

WORKED_COLONY = [2, 1, 2, 4, 3, 2, 3, 1, 3, 3]
WORKED_IMPERIALIST = [4, 4, 2, 2, 3, 3, 3, 1, 1, 1]
WORKED_RESULT = [2, 4, 2, 4, 3, 3, 3, 1, 3, 3]


class MaskRng:
    """Stands in for a Generator: ``random(n)`` yields 0 at masked positions and 1 elsewhere."""

    def __init__(self, mask, n, scalar=0.99, ints=()):
        self.draw = np.array([0.0 if i in mask else 0.999 for i in range(n)])
        self.scalar = scalar
        self.ints = list(ints)

    def random(self, size=None):
        return self.scalar if size is None else self.draw.copy()

    def integers(self, *args, **kwargs):
        return self.ints.pop(0)


def ten_customers_four_depots():
    rng = np.random.default_rng(0)
    return make_instance([tuple(p) for p in rng.uniform(0, 50, (4, 2))],
                         [(*p, 1.0) for p in rng.uniform(0, 50, (10, 2))], q_max=100, vehicles=2)


def test_worked_assimilation_example():
    inst = ten_customers_four_depots()
    colony = np.array(WORKED_COLONY) - 1
    imperialist = np.array(WORKED_IMPERIALIST) - 1
    out = assimilate_assignment(colony, imperialist, 0.05, MaskRng({1, 5}, 10), inst)
    assert (out + 1).tolist() == WORKED_RESULT


def test_empty_mask_keeps_colony():
    inst = ten_customers_four_depots()
    colony = np.array(WORKED_COLONY) - 1
    out = assimilate_assignment(colony, np.array(WORKED_IMPERIALIST) - 1, 0.05, MaskRng(set(), 10), inst)
    assert out.tolist() == colony.tolist()


def test_identical_parents_fixed_point():
    inst = ten_customers_four_depots()
    same = np.array(WORKED_IMPERIALIST) - 1
    out = assimilate_assignment(same, same, 0.9, MaskRng(set(range(10)), 10), inst)
    assert out.tolist() == same.tolist()


def test_assimilation_skips_capacity_breaking_genes():
    inst = o1()  # depot capacity K * Q_max = 2
    colony = np.array([0, 0, 1, 1])
    imperialist = np.array([1, 1, 1, 1])
    out = assimilate_assignment(colony, imperialist, 0.5, MaskRng({0, 1}, 4), inst)
    assert out.tolist() == [0, 0, 1, 1]


def test_assimilate_redecodes():
    inst = o1(q_max=4)
    col = GreedyDecoder(inst)(np.array([0, 1, 0, 1]))
    imp = GreedyDecoder(inst)(np.array([0, 0, 1, 1]))
    new = assimilate(col, imp, 0.5, MaskRng({1, 2}, 4), inst)
    assert new.assignment.tolist() == [0, 0, 1, 1] and new.cost == 8.0


def test_independence_draw_above_rate_keeps_country():
    inst = o1()
    col = GreedyDecoder(inst)(np.array([0, 0, 1, 1]))
    assert independence(col, 0.7, MaskRng(set(), 4, scalar=0.9), inst) is col


def test_independence_single_depot():
    inst = make_instance([(0, 0)], [(1, 0, 1), (2, 0, 1)], q_max=5)
    a, triggered = independence_assignment(np.zeros(2, dtype=np.int64), 1.0, np.random.default_rng(0), inst)
    assert triggered and a.tolist() == [0, 0]


def test_forced_mutation_respects_capacity():
    colony = np.array([0, 0, 1, 1])
    # position 1 moves to depot B; B already carries 2 = K * Q_max
    tight, _ = independence_assignment(colony, 0.5, MaskRng(set(), 4, scalar=0.1, ints=[1, 0]), o1())
    assert tight.tolist() == [0, 0, 1, 1]
    roomy, _ = independence_assignment(colony, 0.5, MaskRng(set(), 4, scalar=0.1, ints=[1, 0]), o1(q_max=3))
    assert roomy.tolist() == [0, 1, 1, 1]


def test_empire_power_examples():
    c = lambda cost: Country(np.zeros(1, dtype=np.int64), cost)  # noqa: E731
    e = Empire(c(100.0), [c(180.0), c(220.0)])
    assert empire_power(e, 0.05) == pytest.approx(110.0)
    assert empire_power(Empire(c(100.0)), 0.05) == 100.0
    assert empire_power(e, 0.0) == 100.0


def test_initial_empires_follow_cost_order():
    inst = o1(q_max=4)
    costs = iter([9.0, 5.0, 11.0, 7.0])
    make = lambda a: Country(a, next(costs))  # noqa: E731
    empires = initialize_population(inst, IcaParams(n_population=4, n_imperialists=2), np.random.default_rng(0), make)
    assert [e.imperialist.cost for e in empires] == [5.0, 7.0]
    assert sorted(c.cost for e in empires for c in e.colonies) == [9.0, 11.0]


def test_stronger_empire_gets_more_colonies():
    c = lambda cost: Country(np.zeros(1, dtype=np.int64), cost)  # noqa: E731
    countries = [c(10.0), c(40.0)] + [c(100.0 + i) for i in range(10)]
    empires = form_empires(countries, 2, np.random.default_rng(0))
    assert len(empires[0].colonies) == 8 and len(empires[1].colonies) == 2


def test_single_depot_population_is_uniform():
    inst = make_instance([(0, 0)], [(1, 0, 1), (2, 0, 1)], q_max=5)
    empires = initialize_population(inst, IcaParams(n_population=6, n_imperialists=2), np.random.default_rng(1))
    for e in empires:
        for country in [e.imperialist, *e.colonies]:
            assert country.assignment.tolist() == [0, 0]


def test_initial_countries_respect_capacity_on_o1():
    inst = o1()
    for seed in range(1000):
        a = random_assignment(inst, np.random.default_rng(seed))
        assert np.bincount(a, minlength=2).tolist() == [2, 2]


def test_competition_single_empire_unchanged():
    c = Country(np.zeros(1, dtype=np.int64), 1.0)
    e = [Empire(c, [])]
    assert imperialist_competition(e, np.random.default_rng(0)) is e


def test_competition_collapse():
    c = lambda cost: Country(np.zeros(1, dtype=np.int64), cost)  # noqa: E731
    strong = Empire(c(10.0), [c(30.0), c(40.0)])
    weak = Empire(c(20.0), [c(90.0)])
    out = imperialist_competition([strong, weak], np.random.default_rng(0))
    assert len(out) == 1
    assert sorted(x.cost for x in out[0].colonies) == [20.0, 30.0, 40.0, 90.0]


def test_role_swap_after_competition():
    c = lambda cost: Country(np.zeros(1, dtype=np.int64), cost)  # noqa: E731
    a = Empire(c(60.0), [c(50.0), c(70.0)])
    b = Empire(c(100.0), [c(200.0), c(300.0)])
    out = imperialist_competition([a, b], np.random.default_rng(0))
    assert out[0].imperialist.cost == 50.0
    assert all(e.imperialist.cost <= min((x.cost for x in e.colonies), default=np.inf) for e in out)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 6))
def test_operator_sequences_conserve_countries_and_capacity(seed, n_imp):
    rng = np.random.default_rng(seed)
    inst = random_tiny(rng)
    decoder = GreedyDecoder(inst)
    make = lambda a: Country(a, float(rng.random()))  # noqa: E731
    try:
        empires = initialize_population(inst, IcaParams(n_population=12, n_imperialists=n_imp), rng, make)
    except Exception:
        return
    del decoder
    for _ in range(15):
        for e in empires:
            for k, col in enumerate(e.colonies):
                new, hit = independence_assignment(col.assignment, 0.5, rng, inst)
                if not hit:
                    new = assimilate_assignment(col.assignment, e.imperialist.assignment, 0.3, rng, inst)
                assert capacity_ok(new, inst)
                e.colonies[k] = Country(new, float(rng.random()))
        empires = imperialist_competition(empires, rng, 0.05)
        assert sum(1 + len(e.colonies) for e in empires) == 12
        for e in empires:
            assert all(e.imperialist.cost <= c.cost for c in e.colonies)


def test_solve_o1_small_population():
    costs = []
    for s in range(1, 11):
        sol, _ = solve_ica(o1(), IcaParams(n_population=32, n_imperialists=8), Termination(wall_clock_limit=10),
                           np.random.default_rng(s))
        costs.append(sol.total_cost)
    assert min(costs) == pytest.approx(8.0, abs=1e-9)


def test_identical_population_stops_after_n_i_epochs():
    inst = make_instance([(0, 0)], [(1, 0, 1), (2, 0, 1), (0, 3, 1)], q_max=5)
    sol, stats = solve_ica(inst, IcaParams(n_population=8, n_imperialists=2, n_i=7), Termination(),
                           np.random.default_rng(0))
    assert stats.iterations == 7 and stats.terminated_by == "stagnation"
    assert len({c for _, _, c in stats.epochs}) == 1
    assert stats.epoch_csv().startswith("epoch,empires_alive,best_cost\n")


def test_best_cost_monotone_and_feasible(p01):
    params = IcaParams(n_population=64, n_imperialists=16, n_local_iter=2, n_i=5)
    sol, stats = solve_ica(p01, params, Termination(wall_clock_limit=60), np.random.default_rng(4))
    best = [c for _, _, c in stats.epochs]
    assert all(b <= a for a, b in zip(best, best[1:]))
    assert check_feasible(sol, p01) == []
    assert sol.total_cost == pytest.approx(best[-1])


def test_params_validation():
    with pytest.raises(ValueError):
        IcaParams(n_population=10, n_imperialists=10)
    with pytest.raises(ValueError):
        IcaParams(upsilon=0.0)
