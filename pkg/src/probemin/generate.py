"""Random small instances for tests, verification suites and sweeps.

All probabilities are Fractions with small denominators so oracles stay
exact.  Randomness comes from ``random.Random`` seeded by the caller.
"""

from __future__ import annotations

import random
from fractions import Fraction
from itertools import combinations

from .matroid import Matroid
from .model import Cardinality, Element, Instance, Knapsack, MatroidConstraint, WeightDistribution
from .objective import MinBasis, MinElement, MinK


def random_distribution(rng: random.Random, m: int, max_support: int = 3) -> WeightDistribution:
    size = rng.randint(1, min(max_support, m + 1))
    values = sorted(rng.sample(range(m + 1), size))
    raw = [rng.randint(1, 6) for _ in values]
    total = sum(raw)
    return WeightDistribution.of([(v, Fraction(w, total)) for v, w in zip(values, raw)])


def random_coin(rng: random.Random, m: int, denominators=(2, 3, 4, 5, 6, 8)) -> WeightDistribution:
    """Two-point law on {0, m}; P(0) is a random fraction strictly in (0, 1)."""
    d = rng.choice(denominators)
    p = Fraction(rng.randint(1, d - 1), d)
    return WeightDistribution.two_point(0, m, p)


def _elements(rng, n, m, costs, max_support, coins):
    out = []
    for e in range(n):
        dist = random_coin(rng, m) if coins else random_distribution(rng, m, max_support)
        out.append(Element(e, costs[e], dist))
    return tuple(out)


def random_knapsack_instance(rng: random.Random, n: int, m: int = 4, max_cost: int = 6,
                             budget: int | None = None, k: int = 1, max_support: int = 3,
                             coins: bool = False) -> Instance:
    """Integer costs in [1, max_cost]; the budget defaults to a random value
    that fits a few elements."""
    costs = [rng.randint(1, max_cost) for _ in range(n)]
    if budget is None:
        low = min(costs)
        budget = rng.randint(low, max(low, sum(costs) // 2))
    objective = MinElement() if k == 1 else MinK(k)
    return Instance(_elements(rng, n, m, costs, max_support, coins), m, Knapsack(budget), objective, k=k)


def random_cardinality_instance(rng: random.Random, n: int, m: int, budget: int, k: int = 1,
                                max_support: int = 3) -> Instance:
    objective = MinElement() if k == 1 else MinK(k)
    return Instance(_elements(rng, n, m, [1] * n, max_support, False), m, Cardinality(budget), objective, k=k)


def low_cost_knapsack_instance(rng: random.Random, n: int, i: int, m: int = 4, budget: int = 12,
                               coins: bool = False) -> Instance:
    """Every cost at most budget / i."""
    cap = Fraction(budget, i)
    steps = [cap * Fraction(j, 4) for j in range(1, 5)]
    costs = [rng.choice(steps) for _ in range(n)]
    return Instance(_elements(rng, n, m, costs, 3, coins), m, Knapsack(budget))


def full_range_knapsack_instance(rng: random.Random, n: int, m: int = 4, budget: int = 16,
                                 coins: bool = False) -> Instance:
    """Costs spread over (0, budget] on a power-of-two friendly grid."""
    grid = [Fraction(budget * j, 16) for j in range(1, 17)]
    costs = [rng.choice(grid) for _ in range(n)]
    return Instance(_elements(rng, n, m, costs, 3, coins), m, Knapsack(budget))


def random_linear_matroid(rng: random.Random, ground: list[int], rank: int, loops: bool = False) -> Matroid:
    """Explicit matroid from random GF(2) vectors (bitmasks) of dimension ``rank``."""
    low = 0 if loops else 1
    vectors = {e: rng.randint(low, (1 << rank) - 1) for e in ground}

    def independent(S) -> bool:
        basis: list[int] = []
        for e in S:
            v = vectors[e]
            for b in basis:
                v = min(v, v ^ b)
            if v == 0:
                return False
            basis.append(v)
        return True

    family = [S for r in range(rank + 1) for S in combinations(ground, r) if independent(S)]
    return Matroid.explicit(ground, family)


def random_partition_matroid(rng: random.Random, ground: list[int], max_cap: int = 2) -> Matroid:
    ids = list(ground)
    rng.shuffle(ids)
    blocks = []
    while ids:
        size = rng.randint(1, max(1, len(ids)))
        block, ids = ids[:size], ids[size:]
        blocks.append((block, rng.randint(1, max_cap)))
    return Matroid.partition(blocks)


def random_matroid(rng: random.Random, n: int, max_rank: int = 4) -> Matroid:
    ground = list(range(n))
    rank = rng.randint(1, min(max_rank, n))
    kind = rng.choice(["uniform", "partition", "explicit"])
    if kind == "uniform":
        return Matroid.uniform(ground, rank)
    if kind == "partition":
        m = random_partition_matroid(rng, ground, max_cap=2)
        if m.rank() <= max_rank:
            return m
        return Matroid.uniform(ground, rank)
    return random_linear_matroid(rng, ground, rank)


def random_matroid_instance(rng: random.Random, n: int, m: int = 4, max_rank: int = 4,
                            coins: bool = False) -> Instance:
    matroid = random_matroid(rng, n, max_rank)
    return Instance(_elements(rng, n, m, [1] * n, 3, coins), m, MatroidConstraint(matroid),
                    outer_matroid=matroid)


def random_minbasis_instance(rng: random.Random, n: int, budget: int, m: int = 4, max_rank: int = 3,
                             coins: bool = False) -> Instance:
    rank = rng.randint(1, min(max_rank, n))
    inner = random_linear_matroid(rng, list(range(n)), rank)
    k = inner.rank()
    return Instance(_elements(rng, n, m, [1] * n, 3, coins), m, Cardinality(budget), MinBasis(inner),
                    k=k, inner_matroid=inner)
