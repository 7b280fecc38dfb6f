"""Threshold and rank solvers: density greedy, ExtGreedy, BIN, their union,
matroid greedy and adaptive matroid greedy, plus the rectangle
decomposition diagnostic for fixed sets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from ._numeric import Number, ceil_log2
from .matroid import Matroid
from .model import Cardinality, Instance, Knapsack
from .objective import prob_at_least, reward, width
from .policy import Policy, Session, SetPolicy


@dataclass(frozen=True)
class GreedySelection:
    order: tuple[int, ...]
    total_cost: Number
    densities: Mapping[int, float] = field(repr=False)
    delta: Number

    def __iter__(self):
        return iter(self.order)

    def __len__(self) -> int:
        return len(self.order)

    def __contains__(self, e) -> bool:
        return e in self.order

    @property
    def members(self) -> frozenset[int]:
        return frozenset(self.order)


@dataclass(frozen=True)
class BinSelection:
    levels: tuple[tuple[int, ...], ...]

    @property
    def union(self) -> tuple[int, ...]:
        return tuple(e for level in self.levels for e in level)

    def level_costs(self, instance: Instance) -> list[Number]:
        return [instance.cost_of(level) for level in self.levels]


def density(e: int, t: int, instance: Instance) -> float | None:
    """Reward per unit cost; None marks a zero-cost element with no reward."""
    r = reward(instance.dist(e).above_prob(t))
    c = instance.cost(e)
    if c == 0:
        return math.inf if r > 0 else None
    return r / float(c)


def density_order(universe: Iterable[int], t: int, instance: Instance) -> list[tuple[int, float]]:
    """Elements by descending density; infinite densities cheapest first, then by id."""
    scored = []
    for e in set(universe):
        d = density(e, t, instance)
        if d is not None:
            scored.append((e, d))
    scored.sort(key=lambda ed: (-ed[1], instance.cost(ed[0]) if ed[1] == math.inf else 0, ed[0]))
    return scored


def ext_greedy(instance: Instance, universe: Iterable[int], budget: Number, extra: int, t: int) -> GreedySelection:
    """Greedy by density until the cost reaches ``budget + extra * delta``.

    ``delta`` is the largest cost in ``universe``.  The loop also ends when
    the pool runs dry.
    """
    universe = list(set(universe))
    delta = max((instance.cost(e) for e in universe), default=0)
    target = budget + extra * delta
    ranked = density_order(universe, t, instance)
    order = []
    cost: Number = 0
    for e, _ in ranked:
        c = instance.cost(e)
        if cost >= target and c > 0:
            break
        order.append(e)
        cost += c
    return GreedySelection(tuple(order), cost, dict(ranked), delta)


def density_greedy(instance: Instance, budget: Number, t: int) -> list[int]:
    """Overflowing greedy for P(min weight <= t): a union of at most two feasible sets."""
    pool = [e for e in instance.ids if instance.cost(e) <= budget]
    return list(ext_greedy(instance, pool, budget, 0, t).order)


def bin_select(instance: Instance, budget: Number, i: int, t: int, universe: Iterable[int] | None = None) -> BinSelection:
    """Per cost level j = 1..ceil(log2 i), take up to 2^j elements with cost in
    (max(B/2^j, B/i), B/2^(j-1)] of largest P(X <= t)."""
    if i < 1:
        raise ValueError("bin needs i >= 1")
    pool = list(instance.ids if universe is None else universe)
    B = Fraction(budget) if isinstance(budget, int) else budget
    levels = []
    for j in range(1, ceil_log2(i) + 1):
        low = max(B / 2**j, B / i)
        high = B / 2 ** (j - 1)
        bucket = [e for e in pool if low < instance.cost(e) <= high]
        bucket.sort(key=lambda e: (-instance.dist(e).below_prob(t), e))
        levels.append(tuple(bucket[: 2**j]))
    return BinSelection(tuple(levels))


def low_cost_universe(instance: Instance, budget: Number, i: int, universe: Iterable[int] | None = None) -> list[int]:
    pool = instance.ids if universe is None else universe
    return [e for e in pool if instance.cost(e) * i <= budget]


def rank_knapsack_solver(instance: Instance, budget: Number, i: int, t: int) -> list[int]:
    """Non-adaptive G u C for P(at least i below-threshold elements)."""
    G = ext_greedy(instance, low_cost_universe(instance, budget, i), budget, i, t)
    C = bin_select(instance, budget, i, t)
    seen = set()
    out = []
    for e in C.union + G.order:
        if e not in seen:
            seen.add(e)
            out.append(e)
    return out


def rank_knapsack_beta(i: int) -> int:
    # cost(G u C) <= (3 + 2 ceil(log2 i)) B and consecutive first-fit chunks pairwise exceed B
    return 2 * (3 + 2 * ceil_log2(i)) + 1


class RankKnapsackPolicy(Policy):
    """G u C as a policy.

    ``mode="union"`` probes the whole non-adaptive set.  ``mode="handoff"``
    probes C, counts its below-threshold elements, then probes the
    ExtGreedy set for the remaining target max(i - trank(C), 1).
    """

    name = "rank-knapsack"

    def __init__(self, instance: Instance, budget: Number, i: int, t: int, mode: str = "union"):
        if mode not in ("union", "handoff"):
            raise ValueError(f"unknown mode {mode!r}")
        self.instance = instance
        self.budget = budget
        self.i = i
        self.t = t
        self.mode = mode
        self.constraint = Knapsack(budget)
        self.max_feasible_sets = rank_knapsack_beta(i)
        self._low = low_cost_universe(instance, budget, i)
        self._C = bin_select(instance, budget, i, t).union

    def run(self, session: Session) -> list[int]:
        if self.mode == "union":
            members = rank_knapsack_solver(self.instance, self.budget, self.i, self.t)
            for e in members:
                session.probe(e)
            return members
        heads = 0
        for e in self._C:
            if session.probe(e) <= self.t:
                heads += 1
        target = max(self.i - heads, 1)
        G = ext_greedy(self.instance, self._low, self.budget, target, self.t)
        for e in G.order:
            session.probe(e)
        return list(self._C) + list(G.order)


def mgreedy(instance: Instance, matroid: Matroid, t: int) -> list[int]:
    """Matroid greedy by descending P(X <= t), ids breaking ties: a basis."""
    order = sorted(matroid.ground, key=lambda e: (-instance.dist(e).below_prob(t), e))
    mask = 0
    basis = []
    for e in order:
        if matroid.independent_mask(mask | (1 << e)):
            mask |= 1 << e
            basis.append(e)
    return basis


class AdapMGreedy(Policy):
    """Adaptive matroid greedy under a probe-count budget.

    Keeps the independent set T of below-threshold finds and always probes
    the most likely below-threshold element that could still extend T.
    """

    name = "adap-mgreedy"

    def __init__(self, instance: Instance, matroid: Matroid, budget: int, t: int):
        self.instance = instance
        self.matroid = matroid
        self.budget = budget
        self.t = t
        self.constraint = Cardinality(budget)
        self.max_feasible_sets = 1
        self._order = sorted(matroid.ground, key=lambda e: (-instance.dist(e).below_prob(t), e))

    def run(self, session: Session) -> list[int]:
        probed: list[int] = []
        done = 0
        accepted = 0
        while len(probed) < self.budget:
            pick = None
            for e in self._order:
                bit = 1 << e
                if not done & bit and self.matroid.independent_mask(accepted | bit):
                    pick = e
                    break
            if pick is None:
                break
            done |= 1 << pick
            probed.append(pick)
            if session.probe(pick) <= self.t:
                accepted |= 1 << pick
        return probed


def decomposition_terms(G: Sequence[int], ordering: Sequence[int], instance: Instance, t: int, ell: int) -> list[Number]:
    """Rectangle areas [w(L_j) - w(L_{j-1})] * P(trank(G - L_j) >= ell - 1).

    ``L_j`` is the first j+1 elements of ``ordering``, a permutation of G.
    """
    if ell < 1:
        raise ValueError("decomposition needs ell >= 1")
    if sorted(ordering) != sorted(G):
        raise ValueError("ordering must be a permutation of G")
    q = {e: instance.dist(e).above_prob(t) for e in G}
    p = {e: instance.dist(e).below_prob(t) for e in G}
    terms = []
    prev = 0
    for j in range(len(ordering)):
        prefix = ordering[: j + 1]
        w = width(q[e] for e in prefix)
        rest = ordering[j + 1:]
        terms.append((w - prev) * prob_at_least((p[e] for e in rest), ell - 1))
        prev = w
    return terms


def decomposition_check(G: Sequence[int], ordering: Sequence[int], instance: Instance, t: int, ell: int) -> Number:
    """|sum of rectangle areas - P(trank(G) >= ell)|; zero in exact arithmetic."""
    if not G:
        raise ValueError("decomposition needs a nonempty set")
    total = sum(decomposition_terms(G, ordering, instance, t, ell), 0)
    direct = prob_at_least((instance.dist(e).below_prob(t) for e in G), ell)
    return abs(total - direct)


def set_policy(members: Iterable[int], name: str, beta: int = 1, constraint=None) -> SetPolicy:
    return SetPolicy(members, name=name, max_feasible_sets=beta, constraint=constraint)
