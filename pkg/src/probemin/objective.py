"""Objective and rank functions on selection sets.

``x`` is anything indexable by element id that yields the (revealed)
weight: a Realization, a list, or a dict of revealed weights.  Sets too
small for an order statistic are padded with the sentinel ``m``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from ._numeric import Number, log2_neg
from .matroid import Matroid, to_mask


def f_min(S: Iterable[int], x, m: int) -> int:
    return min((x[e] for e in S), default=m)


def y_i(S: Iterable[int], x, i: int, m: int) -> int:
    """i-th smallest weight in S, or m when |S| < i."""
    if i < 1:
        raise ValueError("order statistic index starts at 1")
    w = sorted(x[e] for e in S)
    return w[i - 1] if len(w) >= i else m


def f_mink(S: Iterable[int], x, k: int, m: int) -> int:
    if k < 1:
        raise ValueError("k must be at least 1")
    w = sorted(x[e] for e in S)[:k]
    return sum(w) + (k - len(w)) * m


def g_i(S: Iterable[int], x, matroid: Matroid, i: int, m: int) -> int:
    """Weight of the i-th element of the greedy min-weight basis inside S."""
    if i < 1:
        raise ValueError("basis index starts at 1")
    basis = matroid.min_weight_basis(x, S)
    return x[basis[i - 1]] if len(basis) >= i else m


def f_minbasis(S: Iterable[int], x, matroid: Matroid, m: int, k: int | None = None) -> int:
    """Weight of the greedy min-weight basis in S, padded with m up to k entries."""
    if k is None:
        k = matroid.rank()
    basis = matroid.min_weight_basis(x, S)[:k]
    return sum(x[e] for e in basis) + (k - len(basis)) * m


def trank(S: Iterable[int], x, t: int) -> int:
    return sum(1 for e in S if x[e] <= t)


def mtrank(matroid: Matroid, S: Iterable[int], x, t: int) -> int:
    return matroid.rank_mask(to_mask(e for e in S if x[e] <= t))


def reward(above: Number) -> float:
    """-log2 P(X > t); +inf when the element is surely below threshold."""
    return log2_neg(above)


def width(above_probs: Iterable[Number]) -> Number:
    """P(at least one below-threshold element) = 1 - prod P(X_e > t)."""
    prod = 1
    for q in above_probs:
        prod = prod * q
    return 1 - prod


def width_of(S: Iterable[int], t: int, instance) -> Number:
    return width(instance.dist(e).above_prob(t) for e in S)


def reward_of(e: int, t: int, instance) -> float:
    return reward(instance.dist(e).above_prob(t))


def width_from_reward(total_reward: float) -> float:
    return 1.0 - 2.0 ** (-total_reward) if total_reward != math.inf else 1.0


# -- objective specs ------------------------------------------------------------
# Each spec is callable as f(S, x, m) and knows how it decomposes into
# per-index components for the sum-of-k driver.


@dataclass(frozen=True)
class MinElement:
    name = "min"

    def __call__(self, S, x, m: int) -> int:
        return f_min(S, x, m)

    def value_bound(self, m: int) -> int:
        return m

    def to_json(self) -> dict:
        return {"type": "min"}


@dataclass(frozen=True)
class OrderStat:
    """y_i as a standalone objective."""

    i: int

    def __call__(self, S, x, m: int) -> int:
        return y_i(S, x, self.i, m)

    def value_bound(self, m: int) -> int:
        return m

    @property
    def name(self) -> str:
        return f"y{self.i}"


@dataclass(frozen=True)
class BasisStat:
    """g_i as a standalone objective."""

    matroid: Matroid
    i: int

    def __call__(self, S, x, m: int) -> int:
        return g_i(S, x, self.matroid, self.i, m)

    def value_bound(self, m: int) -> int:
        return m

    @property
    def name(self) -> str:
        return f"g{self.i}"


@dataclass(frozen=True)
class MinK:
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("MinK needs k >= 1")

    name = "min_k"

    def __call__(self, S, x, m: int) -> int:
        return f_mink(S, x, self.k, m)

    def component(self, i: int) -> OrderStat:
        return OrderStat(i)

    def value_bound(self, m: int) -> int:
        return self.k * m

    def to_json(self) -> dict:
        return {"type": "min_k", "k": self.k}


@dataclass(frozen=True)
class MinBasis:
    matroid: Matroid

    name = "min_basis"

    @property
    def k(self) -> int:
        return self.matroid.rank()

    def __call__(self, S, x, m: int) -> int:
        return f_minbasis(S, x, self.matroid, m)

    def component(self, i: int) -> BasisStat:
        return BasisStat(self.matroid, i)

    def value_bound(self, m: int) -> int:
        return self.k * m

    def to_json(self) -> dict:
        return {"type": "min_basis"}


ObjectiveSpec = MinElement | MinK | MinBasis


@dataclass(frozen=True)
class ThresholdContext:
    t: int
    i: int = 1

    def __post_init__(self):
        if self.t < 0:
            raise ValueError("threshold must be non-negative")
        if self.i < 0:
            raise ValueError("target rank must be non-negative")


# -- exact rank probabilities for fixed sets -------------------------------------


def count_distribution(ps: Iterable[Number]) -> list[Number]:
    """Law of the number of heads among independent coins with biases ``ps``."""
    dist: list[Number] = [1]
    for p in ps:
        nxt = [0] * (len(dist) + 1)
        for h, q in enumerate(dist):
            nxt[h] += q * (1 - p)
            nxt[h + 1] += q * p
        dist = nxt
    return dist


def prob_at_least(ps: Iterable[Number], i: int) -> Number:
    """P(at least i heads); 1 for i <= 0."""
    if i <= 0:
        return 1
    dist = count_distribution(ps)
    return sum(dist[i:], 0)


def prob_trank_at_least(S: Iterable[int], i: int, t: int, instance) -> Number:
    return prob_at_least((instance.dist(e).below_prob(t) for e in S), i)


def prob_mtrank_at_least(matroid: Matroid, S: Iterable[int], i: int, t: int, instance) -> Number:
    """P(mtrank(S) >= i) by summing over which members land below threshold."""
    if i <= 0:
        return 1
    members = sorted(set(S))
    ps = [instance.dist(e).below_prob(t) for e in members]
    total = 0
    for bits in range(1 << len(members)):
        prob = 1
        mask = 0
        for j, e in enumerate(members):
            if bits >> j & 1:
                prob = prob * ps[j]
                mask |= 1 << e
            else:
                prob = prob * (1 - ps[j])
        if prob and matroid.rank_mask(mask) >= i:
            total += prob
    return total
