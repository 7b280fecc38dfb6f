"""Brute-force optimal values on small instances.

Rank problems collapse every weight to a coin (below threshold or not) and
run backward induction over bitmask states.  The expectation oracle keeps
the full vector of observed values.  Everything is exact when the instance
probabilities are Fractions.
"""

from __future__ import annotations

import itertools
import math
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from ._numeric import Number
from .matroid import Matroid, from_mask, popcount
from .model import (
    CapExceeded,
    Cardinality,
    ConstraintSpec,
    Instance,
    Knapsack,
    MatroidConstraint,
    state_cap,
)
from .policy import Policy, Session

RANK_DP_MAX_N = 20
MATROID_DP_MAX_GROUND = 14
MTRANK_DP_MAX_GROUND = 12
TREE_ENUM_MAX_N = 5


class OracleTooLarge(ValueError):
    pass


sys.setrecursionlimit(max(sys.getrecursionlimit(), 10_000))


def _knapsack_feasibility(costs: Sequence[Number], budget: Number) -> Callable[[int, int], bool]:
    spent: dict[int, Number] = {0: 0}

    def cost(mask: int) -> Number:
        c = spent.get(mask)
        if c is None:
            low = mask & -mask
            c = cost(mask ^ low) + costs[low.bit_length() - 1]
            spent[mask] = c
        return c

    def feasible(mask: int, e: int) -> bool:
        return cost(mask) + costs[e] <= budget

    return feasible


def _matroid_feasibility(matroid: Matroid) -> Callable[[int, int], bool]:
    ground = matroid.ground_mask

    def feasible(mask: int, e: int) -> bool:
        bit = 1 << e
        return bool(ground & bit) and matroid.independent_mask(mask | bit)

    return feasible


def constraint_feasibility(constraint: ConstraintSpec, instance: Instance) -> Callable[[int, int], bool]:
    """``feasible(mask, e)``: may ``e`` join the probed set ``mask``?"""
    if isinstance(constraint, Knapsack):
        return _knapsack_feasibility(instance.costs, constraint.budget)
    if isinstance(constraint, Cardinality):
        return lambda mask, e: popcount(mask) < constraint.budget
    if isinstance(constraint, MatroidConstraint):
        return _matroid_feasibility(constraint.matroid)
    raise TypeError(f"unsupported constraint {constraint!r}")


class _Scaling:
    """Integer arithmetic for Fraction inputs.

    With a common denominator D, a value at probed mask P is stored times
    D^(n - |P|), so every transition is integer-only.  Float inputs pass
    through unscaled.
    """

    def __init__(self, probs: Sequence[Number]):
        self.n = len(probs)
        if probs and all(isinstance(p, (Fraction, int)) for p in probs):
            D = 1
            for p in probs:
                D = math.lcm(D, Fraction(p).denominator)
            self.full = D
            self.weights = [int(p * D) for p in probs]
        else:
            self.full = 1
            self.weights = list(probs)
        self.exact = self.full != 1 or all(isinstance(p, (Fraction, int)) for p in probs)

    def one(self, mask: int) -> Number:
        return self.full ** (self.n - popcount(mask))

    def unscale(self, v: Number, mask: int) -> Number:
        if not self.exact:
            return v
        return Fraction(v, self.one(mask))


class RankDP:
    """max P(at least ``need`` more heads) from a probed mask.

    ``probs[e]`` is the chance element e lands below threshold and
    ``feasible(mask, e)`` says whether e may still be probed.  Stopping is
    always allowed and is worth 0 unless the target is already met.
    """

    def __init__(self, probs: Sequence[Number], feasible: Callable[[int, int], bool]):
        self.probs = list(probs)
        self.n = len(self.probs)
        if self.n > RANK_DP_MAX_N:
            raise OracleTooLarge(f"rank oracle is limited to {RANK_DP_MAX_N} elements")
        self.feasible = feasible
        self._scale = _Scaling(self.probs)
        self._memo: dict[tuple[int, int], tuple[Number, int | None]] = {}

    @property
    def states_visited(self) -> int:
        return len(self._memo)

    def _solve(self, mask: int, need: int) -> tuple[Number, int | None]:
        if need <= 0:
            return self._scale.one(mask), None
        key = (mask, need)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        best: Number = 0
        arg = None
        w, full = self._scale.weights, self._scale.full
        for e in range(self.n):
            bit = 1 << e
            if mask & bit or not self.feasible(mask, e):
                continue
            p = w[e]
            v = p * self._solve(mask | bit, need - 1)[0] + (full - p) * self._solve(mask | bit, need)[0]
            if v > best:
                best, arg = v, e
        self._memo[key] = (best, arg)
        return best, arg

    def value(self, mask: int = 0, need: int = 1) -> Number:
        return self._scale.unscale(self._solve(mask, need)[0], mask)

    def best(self, mask: int, need: int) -> int | None:
        """An optimal next probe (smallest id among ties), or None to stop."""
        return self._solve(mask, need)[1]


def rank_knapsack_dp(instance: Instance, budget: Number, t: int) -> RankDP:
    return RankDP(instance.below_probs(t), _knapsack_feasibility(instance.costs, budget))


def rank_matroid_dp(instance: Instance, matroid: Matroid, t: int) -> RankDP:
    if len(matroid.ground) > MATROID_DP_MAX_GROUND:
        raise OracleTooLarge(f"matroid oracle is limited to {MATROID_DP_MAX_GROUND} ground elements")
    return RankDP(instance.below_probs(t), _matroid_feasibility(matroid))


def opt_adaptive_rank_knapsack(instance: Instance, budget: Number, i: int, t: int) -> Number:
    """Best adaptive P(trank >= i) with total probe cost at most ``budget``."""
    return rank_knapsack_dp(instance, budget, t).value(0, i)


def opt_adaptive_rank_matroid(instance: Instance, matroid: Matroid, i: int, t: int) -> Number:
    """Best adaptive P(trank >= i) when the probed set must stay independent."""
    return rank_matroid_dp(instance, matroid, t).value(0, i)


class MtrankDP:
    """max P(rank of accepted below-threshold set reaches i) with at most
    ``budget`` probes, keyed by (probed mask, accepted mask).

    Only elements that keep the accepted set independent are probed; the
    accepted set plays the role of the contracted set.
    """

    def __init__(self, probs: Sequence[Number], matroid: Matroid, budget: int):
        if len(matroid.ground) > MTRANK_DP_MAX_GROUND:
            raise OracleTooLarge(f"mtrank oracle is limited to {MTRANK_DP_MAX_GROUND} ground elements")
        self.probs = list(probs)
        self.matroid = matroid
        self.budget = budget
        self._scale = _Scaling(self.probs)
        self._memo: dict[tuple[int, int, int], tuple[Number, int | None]] = {}

    @property
    def states_visited(self) -> int:
        return len(self._memo)

    def _solve(self, probed: int, accepted: int, i: int) -> tuple[Number, int | None]:
        need = i - popcount(accepted)
        if need <= 0:
            return self._scale.one(probed), None
        left = self.budget - popcount(probed)
        if left < need:
            return 0, None
        key = (probed, accepted, i)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        best: Number = 0
        arg = None
        w, full = self._scale.weights, self._scale.full
        for e in sorted(self.matroid.ground):
            bit = 1 << e
            if probed & bit or not self.matroid.independent_mask(accepted | bit):
                continue
            p = w[e]
            v = p * self._solve(probed | bit, accepted | bit, i)[0] + (full - p) * self._solve(probed | bit, accepted, i)[0]
            if v > best:
                best, arg = v, e
        self._memo[key] = (best, arg)
        return best, arg

    def value(self, i: int, probed: int = 0, accepted: int = 0) -> Number:
        return self._scale.unscale(self._solve(probed, accepted, i)[0], probed)

    def best(self, probed: int, accepted: int, i: int) -> int | None:
        return self._solve(probed, accepted, i)[1]


def opt_adaptive_mtrank_cardinality(instance: Instance, matroid: Matroid, budget: int, i: int, t: int) -> Number:
    """Best adaptive P(mtrank >= i) using at most ``budget`` probes."""
    return MtrankDP(instance.below_probs(t), matroid, budget).value(i)


def opt_adaptive_mtrank_plain(instance: Instance, matroid: Matroid, budget: int, i: int, t: int) -> Number:
    """Same value as :func:`opt_adaptive_mtrank_cardinality` without the
    contraction shortcut: any element may be probed and success is judged
    by the matroid rank of the full below-threshold set."""
    probs = instance.below_probs(t)
    ground = sorted(matroid.ground)
    memo: dict[tuple[int, int], Number] = {}

    def solve(probed: int, below: int) -> Number:
        if matroid.rank_mask(below) >= i:
            return 1
        if popcount(probed) >= budget:
            return 0
        key = (probed, below)
        if key in memo:
            return memo[key]
        best: Number = 0
        for e in ground:
            bit = 1 << e
            if probed & bit:
                continue
            p = probs[e]
            v = p * solve(probed | bit, below | bit) + (1 - p) * solve(probed | bit, below)
            if v > best:
                best = v
        memo[key] = best
        return best

    return solve(0, 0)


def policy_tree_values(probs: Sequence[Number], feasible: Callable[[int, int], bool], i: int) -> set:
    """Success probabilities of every deterministic decision tree.

    Built bottom-up as sets of attainable values, with no maximization, so
    it checks the DP independently.  Only for a handful of elements.
    """
    n = len(probs)
    if n > TREE_ENUM_MAX_N:
        raise OracleTooLarge(f"tree enumeration is limited to {TREE_ENUM_MAX_N} elements")
    memo: dict[tuple[int, int], frozenset] = {}

    def trees(mask: int, heads: int) -> frozenset:
        key = (mask, heads)
        if key in memo:
            return memo[key]
        values = {1 if heads >= i else 0}
        for e in range(n):
            bit = 1 << e
            if mask & bit or not feasible(mask, e):
                continue
            p = probs[e]
            up = trees(mask | bit, heads + 1)
            down = trees(mask | bit, heads)
            values.update(p * a + (1 - p) * b for a in up for b in down)
        memo[key] = frozenset(values)
        return memo[key]

    return set(trees(0, 0))


# -- expectation oracle ----------------------------------------------------------


@dataclass(frozen=True)
class OracleResult:
    value: Number
    states_visited: int


def opt_adaptive_expectation(instance: Instance, objective=None, constraint: ConstraintSpec | None = None,
                             cap: int | None = None) -> OracleResult:
    """min over adaptive policies of E[f(selection)] by backward induction
    over the observed values; stopping is allowed at any time."""
    objective = instance.objective if objective is None else objective
    constraint = instance.constraint if constraint is None else constraint
    cap = state_cap() if cap is None else cap
    feasible = constraint_feasibility(constraint, instance)
    n, m = instance.n, instance.m
    supports = [[(v, p) for v, p in instance.dist(e).support if p] for e in range(n)]
    memo: dict[tuple, Number] = {}

    def solve(obs: tuple, mask: int) -> Number:
        hit = memo.get(obs)
        if hit is not None:
            return hit
        if len(memo) >= cap:
            raise CapExceeded(f"expectation oracle exceeded the state cap {cap}")
        seen = {e: obs[e] for e in range(n) if mask >> e & 1}
        best = objective(seen.keys(), seen, m)
        for e in range(n):
            bit = 1 << e
            if mask & bit or not feasible(mask, e):
                continue
            total = 0
            for v, p in supports[e]:
                total += p * solve(obs[:e] + (v,) + obs[e + 1:], mask | bit)
            if total < best:
                best = total
        memo[obs] = best
        return best

    value = solve((None,) * n, 0)
    return OracleResult(value, len(memo))


@dataclass(frozen=True)
class NonAdaptiveResult:
    """Best fixed feasible set.

    For threshold queries ``value`` is the success probability P(min <= t);
    for expectation queries it is E[f(S)].
    """

    value: Number
    members: tuple[int, ...]
    kind: str
    sets_checked: int

    @property
    def failure(self) -> Number:
        if self.kind != "threshold":
            raise ValueError("failure probability applies to threshold queries")
        return 1 - self.value


def feasible_masks(instance: Instance, constraint: ConstraintSpec, maximal_only: bool = False) -> Iterable[int]:
    n = instance.n
    if n > RANK_DP_MAX_N:
        raise OracleTooLarge(f"set enumeration is limited to {RANK_DP_MAX_N} elements")
    costs = instance.costs
    for mask in range(1 << n):
        if not constraint.admits_mask(mask, costs):
            continue
        if maximal_only and any(
            not mask >> e & 1 and constraint.admits_mask(mask | 1 << e, costs) for e in range(n)
        ):
            continue
        yield mask


def expected_value_of_set(instance: Instance, members: Sequence[int], objective=None) -> Number:
    """E[f(S)] for a fixed set by enumerating its members' outcomes."""
    objective = instance.objective if objective is None else objective
    members = list(members)
    supports = [[(v, p) for v, p in instance.dist(e).support if p] for e in members]
    total = 0
    for combo in itertools.product(*supports):
        prob = 1
        seen = {}
        for e, (v, p) in zip(members, combo):
            prob = prob * p
            seen[e] = v
        total += prob * objective(members, seen, instance.m)
    return total


def opt_nonadaptive(instance: Instance, t: int | None = None, objective=None,
                    constraint: ConstraintSpec | None = None) -> NonAdaptiveResult:
    """Exhaustive search over feasible sets.

    With ``t`` it maximizes P(min weight <= t) by the product formula;
    otherwise it minimizes E[f(S)] over maximal feasible sets (f is
    non-increasing, so nothing is lost).  Ties go to the smallest mask.
    """
    constraint = instance.constraint if constraint is None else constraint
    checked = 0
    if t is not None:
        above = [instance.dist(e).above_prob(t) for e in instance.ids]
        best_val, best_mask = None, 0
        for mask in feasible_masks(instance, constraint):
            checked += 1
            fail = 1
            for e in from_mask(mask):
                fail = fail * above[e]
            val = 1 - fail
            if best_val is None or val > best_val:
                best_val, best_mask = val, mask
        return NonAdaptiveResult(best_val, tuple(from_mask(best_mask)), "threshold", checked)
    best_val, best_mask = None, 0
    for mask in feasible_masks(instance, constraint, maximal_only=True):
        checked += 1
        val = expected_value_of_set(instance, from_mask(mask), objective)
        if best_val is None or val < best_val:
            best_val, best_mask = val, mask
    return NonAdaptiveResult(best_val, tuple(from_mask(best_mask)), "expectation", checked)


# -- optimal policies as threshold solvers ---------------------------------------


class RankDPPolicy(Policy):
    """Follows the argmax of a :class:`RankDP` for target ``i`` at threshold ``t``."""

    name = "opt-rank"

    def __init__(self, dp: RankDP, i: int, t: int, constraint: ConstraintSpec | None = None):
        self.dp = dp
        self.i = i
        self.t = t
        self.constraint = constraint
        self.max_feasible_sets = 1

    def run(self, session: Session) -> list[int]:
        mask, need, probed = 0, self.i, []
        while need > 0:
            e = self.dp.best(mask, need)
            if e is None:
                break
            probed.append(e)
            mask |= 1 << e
            if session.probe(e) <= self.t:
                need -= 1
        return probed


class MtrankDPPolicy(Policy):
    """Follows the argmax of an :class:`MtrankDP`."""

    name = "opt-mtrank"

    def __init__(self, dp: MtrankDP, i: int, t: int):
        self.dp = dp
        self.i = i
        self.t = t
        self.constraint = Cardinality(dp.budget)
        self.max_feasible_sets = 1

    def run(self, session: Session) -> list[int]:
        probed_mask, accepted, probed = 0, 0, []
        while True:
            e = self.dp.best(probed_mask, accepted, self.i)
            if e is None:
                break
            probed.append(e)
            probed_mask |= 1 << e
            if session.probe(e) <= self.t:
                accepted |= 1 << e
        return probed
