import json
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st
from scipy import stats

from probemin.adaptivity_gap import gap_instance
from probemin.model import (
    CapExceeded,
    Element,
    Instance,
    InstanceError,
    Knapsack,
    WeightDistribution,
    below_prob,
    dump_instance,
    enumerate_realizations,
    parse_instance,
    sample_realization,
)


def doc(elements, m=10, constraint=None, **extra):
    return json.dumps({"m": m, "k": 1, "constraint": constraint or {"type": "knapsack", "budget": 2},
                       "objective": {"type": "min"}, "elements": elements, **extra})


def test_parse_gap_document():
    text = doc([
        {"id": 0, "cost": 1, "dist": [[1, "99/100"], [100, "1/100"]]},
        {"id": 1, "cost": 1, "dist": [[0, "9/10"], [100, "1/10"]]},
        {"id": 2, "cost": 1, "dist": [[10, 1]]},
    ], m=100, constraint={"type": "cardinality", "budget": 2})
    inst = parse_instance(text)
    assert inst.m == 100
    assert inst.n == 3
    assert inst.dist(1).below_prob(50) == Fraction(9, 10)
    assert inst == gap_instance(10)


def test_round_trip():
    inst = gap_instance(4)
    assert parse_instance(dump_instance(inst)) == inst


def test_singleton_point_mass():
    inst = parse_instance(doc([{"id": 0, "cost": 1, "dist": [[0, 1.0]]}]))
    assert inst.n == 1


@pytest.mark.parametrize("elements,m", [
    ([{"id": 0, "cost": 1, "dist": [[0, 0.5], [1, 0.4]]}], 10),
    ([{"id": 0, "cost": 1, "dist": [[0, "1/2"], [1, "1/3"]]}], 10),
    ([{"id": 0, "cost": 1, "dist": [[11, 1]]}], 10),
    ([{"id": 0, "cost": 1, "dist": [[1, 1]]}, {"id": 0, "cost": 1, "dist": [[1, 1]]}], 10),
    ([{"id": 1, "cost": 1, "dist": [[1, 1]]}], 10),
    ([{"id": 0, "cost": -1, "dist": [[1, 1]]}], 10),
])
def test_invalid_documents(elements, m):
    with pytest.raises(InstanceError):
        parse_instance(doc(elements, m=m))


def test_malformed_json():
    with pytest.raises(InstanceError):
        parse_instance("{not json")


def test_float_path():
    inst = parse_instance(doc([{"id": 0, "cost": 1.5, "dist": [[0, 0.25], [3, 0.75]]}]), exact=False)
    assert isinstance(inst.dist(0).below_prob(0), float)


def test_below_prob_examples():
    d = WeightDistribution.of([(0, Fraction(1, 2)), (3, Fraction(1, 2))])
    assert below_prob(d, 0) == Fraction(1, 2)
    assert below_prob(d, 3) == 1
    assert below_prob(d, 2) == Fraction(1, 2)


dists = st.lists(st.integers(1, 9), min_size=1, max_size=5).flatmap(
    lambda ws: st.lists(st.integers(0, 12), min_size=len(ws), max_size=len(ws), unique=True).map(
        lambda vs: WeightDistribution.of(sorted(zip(vs, (Fraction(w, sum(ws)) for w in ws))))
    )
)


@given(dists, st.integers(0, 12), st.integers(0, 12))
def test_below_prob_monotone(d, a, b):
    lo, hi = sorted((a, b))
    assert d.below_prob(lo) <= d.below_prob(hi)
    assert d.below_prob(12) == 1
    assert d.below_prob(lo) + d.above_prob(lo) == 1


def test_sampling_deterministic():
    inst = gap_instance(10)
    assert sample_realization(inst, 7, 3) == sample_realization(inst, 7, 3)
    assert [sample_realization(inst, 7, t) for t in range(50)] != [sample_realization(inst, 8, t) for t in range(50)]


def test_point_mass_sample():
    inst = Instance((Element(0, 1, WeightDistribution.point(5)),), 10, Knapsack(1))
    assert all(sample_realization(inst, 1, t)[0] == 5 for t in range(100))


def test_sample_mean_and_marginals():
    d = WeightDistribution.of([(0, Fraction(1, 2)), (1, Fraction(1, 2))])
    skew = WeightDistribution.of([(0, Fraction(1, 5)), (2, Fraction(3, 10)), (4, Fraction(1, 2))])
    inst = Instance((Element(0, 1, d), Element(1, 1, skew)), 4, Knapsack(2))
    trials = 100_000
    draws = [sample_realization(inst, 11, t) for t in range(trials)]
    mean = sum(x[0] for x in draws) / trials
    assert abs(mean - 0.5) <= 0.01
    for e, dist in ((0, d), (1, skew)):
        observed = [sum(1 for x in draws if x[e] == v) for v in dist.values]
        expected = [float(p) * trials for _, p in dist.support]
        assert stats.chisquare(observed, expected).pvalue > 0.001


def test_enumerate_two_coins():
    coin = WeightDistribution.of([(0, Fraction(1, 3)), (2, Fraction(2, 3))])
    inst = Instance((Element(0, 1, coin), Element(1, 1, coin)), 2, Knapsack(2))
    profiles = list(enumerate_realizations(inst))
    assert len(profiles) == 4
    assert sum(p for _, p in profiles) == 1


def test_enumerate_gap_and_singleton():
    assert len(list(enumerate_realizations(gap_instance(10)))) == 4
    inst = Instance((Element(0, 1, WeightDistribution.point(3)),), 3, Knapsack(1))
    assert list(enumerate_realizations(inst)) == [(sample_realization(inst, 0, 0), 1)]


def test_enumerate_cap():
    coin = WeightDistribution.of([(0, Fraction(1, 2)), (1, Fraction(1, 2))])
    inst = Instance(tuple(Element(e, 1, coin) for e in range(5)), 1, Knapsack(1))
    with pytest.raises(CapExceeded):
        list(enumerate_realizations(inst, cap=16))
