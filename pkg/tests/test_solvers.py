import math
import random
from fractions import Fraction
from itertools import permutations

import pytest
from hypothesis import given, settings, strategies as st

from probemin.generate import random_coin, random_knapsack_instance, random_linear_matroid
from probemin.matroid import Matroid
from probemin.model import Cardinality, Element, Instance, Knapsack, WeightDistribution
from probemin.objective import ThresholdContext, prob_at_least
from probemin.oracle import opt_adaptive_mtrank_cardinality, opt_adaptive_rank_knapsack, opt_adaptive_rank_matroid, opt_nonadaptive
from probemin.policy import SetPolicy, exact_success_probability
from probemin.solvers import (
    AdapMGreedy,
    RankKnapsackPolicy,
    bin_select,
    decomposition_check,
    decomposition_terms,
    density,
    density_greedy,
    ext_greedy,
    mgreedy,
    rank_knapsack_solver,
)


def make(costs, dists, m=4, budget=4):
    return Instance(tuple(Element(e, c, d) for e, (c, d) in enumerate(zip(costs, dists))), m, Knapsack(budget))


def coin(p, m=4):
    return WeightDistribution.two_point(0, m, p)


def below(inst, S, t):
    return 1 - math.prod(inst.dist(e).above_prob(t) for e in S)


def test_density_single_half_budget():
    inst = make([2], [coin(Fraction(1, 2))])
    assert density_greedy(inst, 4, 0) == [0]


def test_sure_element_first():
    inst = make([1, 3, 2], [coin(Fraction(1, 2)), WeightDistribution.point(0), coin(Fraction(9, 10))])
    assert density(1, 0, inst) == math.inf
    assert density_greedy(inst, 4, 0)[0] == 1


def test_density_skips_oversized():
    inst = make([5, 1], [WeightDistribution.point(0), coin(Fraction(1, 2))])
    assert density_greedy(inst, 4, 0) == [1]


def test_zero_cost_elements():
    inst = make([0, 0, 1], [coin(Fraction(1, 2)), WeightDistribution.point(4), coin(Fraction(1, 2))])
    assert density(0, 0, inst) == math.inf
    assert density(1, 0, inst) is None
    assert 1 not in ext_greedy(inst, range(3), 1, 0, 0)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000))
def test_density_beats_best_fixed_set(seed):
    rng = random.Random(seed)
    inst = random_knapsack_instance(rng, 6, m=4)
    t = rng.randint(0, 3)
    G = density_greedy(inst, inst.constraint.budget, t)
    best = opt_nonadaptive(inst, t=t)
    assert below(inst, G, t) >= 1 - best.failure


def test_extgreedy_zero_extra_is_density_rule():
    rng = random.Random(1)
    for _ in range(30):
        inst = random_knapsack_instance(rng, 7, m=4, budget=30)
        assert list(ext_greedy(inst, inst.ids, 30, 0, 1).order) == density_greedy(inst, 30, 1)


@settings(max_examples=80, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 5))
def test_extgreedy_cost_window(seed, i):
    rng = random.Random(seed)
    inst = random_knapsack_instance(rng, 8, m=4, budget=12)
    U = [e for e in inst.ids if inst.cost(e) * i <= 12]
    G = ext_greedy(inst, U, 12, i, 2)
    assert G.total_cost <= 12 + (i + 1) * G.delta
    assert G.total_cost <= 36 or not U
    assert G.total_cost == inst.cost_of(G)


def test_bin_i_one_empty():
    inst = make([1, 2, 3], [coin(Fraction(1, 2))] * 3, budget=8)
    assert bin_select(inst, 8, 1, 0).levels == ()


def test_bin_cheap_elements_skipped():
    inst = make([1, 2, 2], [coin(Fraction(1, 2))] * 3, budget=8)
    assert bin_select(inst, 8, 4, 0).union == ()


def test_bin_levels_i4_b8():
    costs = [5, 8, 6, 7, 3, 4, 4, 3, 2, 1]
    probs = [Fraction(j, 11) for j in range(1, 11)]
    inst = make(costs, [coin(p) for p in probs], budget=8)
    sel = bin_select(inst, 8, 4, 0)
    assert len(sel.levels) == 2
    assert sorted(sel.levels[0]) == [2, 3]
    assert sorted(sel.levels[1]) == [4, 5, 6, 7]
    assert all(inst.cost(e) > 4 for e in sel.levels[0])
    assert all(2 < inst.cost(e) <= 4 for e in sel.levels[1])
    assert all(c <= 16 for c in sel.level_costs(inst))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 8))
def test_rank_knapsack_cost_bound(seed, i):
    rng = random.Random(seed)
    inst = random_knapsack_instance(rng, 10, m=4, max_cost=10, budget=10)
    S = rank_knapsack_solver(inst, 10, i, 1)
    z = (i - 1).bit_length()
    assert inst.cost_of(S) <= 3 * 10 + 2 * 10 * z
    assert len(set(S)) == len(S)


def test_rank_knapsack_unit_costs():
    inst = Instance(tuple(Element(e, 1, coin(Fraction(1, 3))) for e in range(8)), 4, Knapsack(3))
    assert len(rank_knapsack_solver(inst, 3, 2, 0)) == 5


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000))
def test_rank_knapsack_beats_oracle(seed):
    rng = random.Random(seed)
    inst = random_knapsack_instance(rng, 10, m=1, max_cost=6, budget=8, coins=True)
    S = rank_knapsack_solver(inst, 8, 2, 0)
    ps = [inst.dist(e).below_prob(0) for e in S]
    assert prob_at_least(ps, 2) >= opt_adaptive_rank_knapsack(inst, 8, 2, 0)


def test_handoff_mode_runs():
    rng = random.Random(3)
    inst = random_knapsack_instance(rng, 6, m=2, max_cost=8, budget=8)
    pol = RankKnapsackPolicy(inst, 8, 4, 0, mode="handoff")
    p = exact_success_probability(pol, inst, ThresholdContext(0, 4))
    assert 0 <= p <= 1
    with pytest.raises(ValueError):
        RankKnapsackPolicy(inst, 8, 4, 0, mode="other")


def uniform_instance(ps, m=3):
    return Instance(tuple(Element(e, 1, coin(p, m)) for e, p in enumerate(ps)), m, Cardinality(len(ps)))


def test_mgreedy_uniform_and_rank_one():
    ps = [Fraction(1, 5), Fraction(4, 5), Fraction(1, 2), Fraction(3, 5)]
    inst = uniform_instance(ps)
    assert mgreedy(inst, Matroid.uniform(range(4), 2), 0) == [1, 3]
    assert mgreedy(inst, Matroid.uniform(range(4), 1), 0) == [1]


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_mgreedy_matches_oracle(seed):
    rng = random.Random(seed)
    n = rng.randint(2, 7)
    M = random_linear_matroid(rng, list(range(n)), rng.randint(1, min(4, n)))
    inst = Instance(tuple(Element(e, 1, random_coin(rng, 2)) for e in range(n)), 2, Cardinality(n))
    basis = mgreedy(inst, M, 0)
    assert M.rank(basis) == M.rank() == len(basis)
    ps = [inst.dist(e).below_prob(0) for e in basis]
    for i in range(1, M.rank() + 1):
        assert prob_at_least(ps, i) == opt_adaptive_rank_matroid(inst, M, i, 0)


def test_adapmgreedy_all_below_probes_top():
    ps = [Fraction(1, 5), Fraction(4, 5), Fraction(1, 2), Fraction(3, 5), Fraction(1, 3)]
    inst = uniform_instance(ps)
    from probemin.policy import execute
    rep = execute(AdapMGreedy(inst, Matroid.uniform(range(5), 5), 3, 0), inst, [0] * 5)
    assert rep.probes == [1, 3, 2]


def test_adapmgreedy_budget_below_target():
    inst = uniform_instance([Fraction(1, 2)] * 4)
    M = Matroid.uniform(range(4), 3)
    pol = AdapMGreedy(inst, M, 2, 0)
    assert exact_success_probability(pol, inst, ThresholdContext(0, 3), "mtrank", M) == 0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_adapmgreedy_matches_oracle(seed):
    rng = random.Random(seed)
    n = rng.randint(2, 7)
    M = random_linear_matroid(rng, list(range(n)), rng.randint(1, min(3, n)))
    B = rng.randint(1, min(5, n))
    inst = Instance(tuple(Element(e, 1, random_coin(rng, 2)) for e in range(n)), 2, Cardinality(B))
    for i in range(1, M.rank() + 1):
        got = exact_success_probability(AdapMGreedy(inst, M, B, 0), inst, ThresholdContext(0, i), "mtrank", M)
        assert got == opt_adaptive_mtrank_cardinality(inst, M, B, i, 0)


def test_decomposition_single_element():
    inst = make([1], [coin(Fraction(2, 7))])
    assert decomposition_terms([0], [0], inst, 0, 1) == [Fraction(2, 7)]
    assert decomposition_check([0], [0], inst, 0, 1) == 0


def test_decomposition_ell_one_is_width():
    rng = random.Random(8)
    inst = make([1] * 4, [random_coin(rng, 4) for _ in range(4)])
    assert sum(decomposition_terms([0, 1, 2, 3], [2, 0, 3, 1], inst, 0, 1)) == below(inst, range(4), 0)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 5))
def test_decomposition_any_ordering(seed, ell):
    rng = random.Random(seed)
    inst = make([1] * 5, [random_coin(rng, 4) for _ in range(5)])
    for order in list(permutations(range(5)))[::17]:
        assert decomposition_check(list(range(5)), list(order), inst, 0, ell) == 0


def test_decomposition_validates():
    inst = make([1], [coin(Fraction(1, 2))])
    with pytest.raises(ValueError):
        decomposition_check([], [], inst, 0, 1)
    with pytest.raises(ValueError):
        decomposition_terms([0], [0], inst, 0, 0)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10_000))
def test_nesting(seed):
    rng = random.Random(seed)
    n = rng.randint(1, 8)
    inst = random_knapsack_instance(rng, n, m=3)
    U = rng.sample(range(n), rng.randint(1, n))
    e = rng.choice(U)
    B = inst.cost(e) + rng.randint(0, 12)
    t = rng.randint(0, 3)
    inner = set(ext_greedy(inst, [u for u in U if u != e], B - inst.cost(e), 0, t))
    assert inner <= set(ext_greedy(inst, U, B, 0, t))


def test_set_policy_success_uses_product():
    inst = make([1, 1], [coin(Fraction(1, 2)), coin(Fraction(1, 3))], budget=2)
    p = exact_success_probability(SetPolicy([0, 1]), inst, ThresholdContext(0))
    assert p == below(inst, [0, 1], 0) == Fraction(2, 3)
