"""Adaptive binary search over power-of-two thresholds, the UB tracker,
and the driver for objectives that are sums of order statistics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from ._numeric import Number, ceil_log2, floor_log2
from .matroid import Matroid
from .model import Cardinality, Element, Instance, Knapsack, MatroidConstraint
from .objective import MinBasis, MinElement, MinK
from .oracle import MtrankDP, MtrankDPPolicy, RankDP, RankDPPolicy, constraint_feasibility
from .policy import Policy, Session, SetPolicy
from .solvers import (
    AdapMGreedy,
    RankKnapsackPolicy,
    bin_select,
    density_greedy,
    ext_greedy,
    low_cost_universe,
    mgreedy,
    rank_knapsack_beta,
)


def threshold_grid(M: int) -> list[int]:
    """{0} together with every power of two up to M."""
    if M < 1:
        raise ValueError("value bound must be at least 1")
    return [0] + [1 << j for j in range(floor_log2(M) + 1)]


def calls_bound(M: int) -> int:
    return 1 + ceil_log2(floor_log2(M) + 2)


def grid_intervals(M: int) -> list[tuple[int, int]]:
    """Adjacent (a, b] pieces covering (0, M]; the last one may end off-grid."""
    grid = threshold_grid(M)
    pieces = list(zip(grid, grid[1:]))
    if grid[-1] < M:
        pieces.append((grid[-1], M))
    return pieces


@dataclass
class MetaMinResult:
    selection: frozenset[int]
    objective_value: Number
    tau: int | None
    ub: Number
    threshold_calls: list[tuple[int, bool]]
    value_bound: int
    label: str = ""

    def to_json(self) -> dict:
        return {
            "label": self.label,
            "selection": sorted(self.selection),
            "objective_value": self.objective_value,
            "tau": self.tau,
            "ub": self.ub,
            "value_bound": self.value_bound,
            "call_log": [{"t": t, "success": ok} for t, ok in self.threshold_calls],
        }


def ub_interval_claim(calls: list[tuple[int, bool]], ub: Number, M: int) -> bool:
    """Check that UB lands in (a, b] exactly when the run failed at a and
    succeeded at b, for every adjacent pair; UB = 0 exactly on success at 0.
    Success at an off-grid right end M is taken as given."""
    outcome = dict(calls)
    grid = set(threshold_grid(M))
    if (ub == 0) != (outcome.get(0) is True):
        return False
    for a, b in grid_intervals(M):
        inside = a < ub <= b
        event = outcome.get(a) is False and (outcome.get(b) is True or b not in grid)
        if inside != event:
            return False
    return True


class MetaMin(Policy):
    """Binary search for the smallest threshold the solver can meet.

    ``solver(t)`` returns a sub-policy for the threshold problem at ``t``;
    each call runs as its own phase.  Success at ``t`` means
    f(phase selection) <= t, or f(everything so far) <= t with
    ``test_on_union``.
    """

    name = "metamin"

    def __init__(self, solver: Callable[[int], Policy], objective, value_bound: int, beta: int = 1,
                 test_on_union: bool = False, label: str = ""):
        self.solver = solver
        self.objective = objective
        self.value_bound = value_bound
        self.grid = threshold_grid(value_bound)
        self.test_on_union = test_on_union
        self.label = label
        self.max_feasible_sets = calls_bound(value_bound) * beta

    def _call(self, session: Session, t: int) -> bool:
        ph = session.begin_phase(f"{self.label}t={t}")
        self.solver(t).run(session)
        m = session.instance.m
        chosen = session.selection if self.test_on_union else ph.members
        ok = self.objective(chosen, session.weights, m) <= t
        session.call_log.append((t, ok))
        return ok

    def search(self, session: Session) -> MetaMinResult:
        calls = []
        tau = None
        ok = self._call(session, 0)
        calls.append((0, ok))
        if not ok:
            tau = 0
            R = self.grid[1:]
            while R:
                t = R[(len(R) - 1) // 2]
                ok = self._call(session, t)
                calls.append((t, ok))
                if ok:
                    R = [r for r in R if r < t]
                else:
                    tau = t
                    R = [r for r in R if r > t]
        value = self.objective(session.selection, session.weights, session.instance.m)
        ub = value if tau is None else max(value, tau + 1)
        return MetaMinResult(session.selection, value, tau, ub, calls, self.value_bound, self.label)

    def run(self, session: Session) -> MetaMinResult:
        result = self.search(session)
        session.ub = result.ub
        session.info["tau"] = result.tau
        return result


def sum_of_k_indices(k: int, mode: str = "reversed") -> list[int]:
    """Indices handled by the sum-of-k driver, in descending order.

    ``reversed`` takes k + 1 - 2^j, which suits order statistics that grow
    with the index; ``powers`` takes the powers 2^j themselves.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    pows = [1 << j for j in range(floor_log2(k) + 1)]
    if mode == "reversed":
        idx = [k + 1 - p for p in pows]
    elif mode == "powers":
        idx = pows
    else:
        raise ValueError(f"unknown index mode {mode!r}")
    return sorted(set(idx), reverse=True)


class SumOfK(Policy):
    """One binary search per selected index i on the component g_i; the
    selection is the union of everything probed."""

    name = "sum-of-k"

    def __init__(self, family: Callable[[int, int], Policy], objective, k: int, value_bound: int,
                 beta: Callable[[int], int] | int = 1, index_mode: str = "reversed",
                 test_on_union: bool = False):
        self.family = family
        self.objective = objective
        self.k = k
        self.value_bound = value_bound
        self.indices = sum_of_k_indices(k, index_mode)
        self.index_mode = index_mode
        self.test_on_union = test_on_union
        beta_of = beta if callable(beta) else (lambda i, b=beta: b)
        self._beta = beta_of
        self.max_feasible_sets = sum(calls_bound(value_bound) * beta_of(i) for i in self.indices)

    def run(self, session: Session) -> list[MetaMinResult]:
        results = []
        for i in self.indices:
            inner = MetaMin(lambda t, i=i: self.family(i, t), self.objective.component(i), self.value_bound,
                            beta=self._beta(i), test_on_union=self.test_on_union, label=f"i={i},")
            results.append(inner.search(session))
        session.info["runs"] = [r.to_json() for r in results]
        session.info["indices"] = list(self.indices)
        return results


# -- threshold solver registry --------------------------------------------------------

ALGORITHMS = ("density", "extgreedy", "bin", "rank-knapsack", "mgreedy", "adap-mgreedy", "exact")


@dataclass
class ThresholdSolver:
    """A family of sub-policies indexed by (target i, threshold t).

    ``beta(i)`` bounds how many feasible sets one sub-policy may use.
    """

    name: str
    build: Callable[[int, int], Policy]
    beta: Callable[[int], int]
    _cache: dict = field(default_factory=dict, repr=False)

    def __call__(self, i: int, t: int) -> Policy:
        key = (i, t)
        if key not in self._cache:
            self._cache[key] = self.build(i, t)
        return self._cache[key]

    def at(self, i: int) -> Callable[[int], Policy]:
        return lambda t: self(i, t)


def knapsack_view(instance: Instance) -> tuple[Instance, Number]:
    """The instance seen as a knapsack: cardinality budgets become unit costs."""
    c = instance.constraint
    if isinstance(c, Knapsack):
        return instance, c.budget
    if isinstance(c, Cardinality):
        unit = tuple(Element(el.id, 1, el.dist) for el in instance.elements)
        return instance.replace(elements=unit, constraint=Knapsack(c.budget)), c.budget
    raise ValueError(f"{type(c).__name__} constraint has no budget")


def _require_matroid_constraint(instance: Instance) -> Matroid:
    if not isinstance(instance.constraint, MatroidConstraint):
        raise ValueError("this solver needs a matroid constraint")
    return instance.constraint.matroid


def make_solver(name: str, instance: Instance, mode: str = "union") -> ThresholdSolver:
    """Threshold solver by CLI name; ``mode`` applies to rank-knapsack."""
    if name == "density":
        view, B = knapsack_view(instance)

        def build(i, t):
            if i != 1:
                raise ValueError("density greedy solves the single-element threshold problem only")
            return SetPolicy(density_greedy(view, B, t), name="density", max_feasible_sets=2)

        return ThresholdSolver(name, build, lambda i: 2)
    if name == "extgreedy":
        view, B = knapsack_view(instance)

        def build(i, t):
            sel = ext_greedy(view, low_cost_universe(view, B, i), B, i, t)
            return SetPolicy(sel.order, name="extgreedy", max_feasible_sets=7)

        return ThresholdSolver(name, build, lambda i: 7)
    if name == "bin":
        view, B = knapsack_view(instance)

        def bin_beta(i):
            return 4 * ceil_log2(i) + 1

        def build(i, t):
            return SetPolicy(bin_select(view, B, i, t).union, name="bin", max_feasible_sets=bin_beta(i))

        return ThresholdSolver(name, build, bin_beta)
    if name == "rank-knapsack":
        view, B = knapsack_view(instance)
        return ThresholdSolver(name, lambda i, t: RankKnapsackPolicy(view, B, i, t, mode), rank_knapsack_beta)
    if name == "mgreedy":
        matroid = _require_matroid_constraint(instance)
        return ThresholdSolver(name, lambda i, t: SetPolicy(mgreedy(instance, matroid, t), name="mgreedy"),
                               lambda i: 1)
    if name == "adap-mgreedy":
        if not isinstance(instance.constraint, Cardinality) or instance.inner_matroid is None:
            raise ValueError("adap-mgreedy needs a cardinality constraint and an inner matroid")
        inner, B = instance.inner_matroid, instance.constraint.budget
        return ThresholdSolver(name, lambda i, t: AdapMGreedy(instance, inner, B, t), lambda i: 1)
    if name == "exact":
        return exact_solver(instance)
    raise ValueError(f"unknown algorithm {name!r}; choose from {', '.join(ALGORITHMS)}")


def exact_solver(instance: Instance) -> ThresholdSolver:
    """Optimal adaptive threshold policies from the rank oracles."""
    tables: dict[int, object] = {}
    if isinstance(instance.objective, MinBasis):
        if not isinstance(instance.constraint, Cardinality):
            raise ValueError("exact min-basis solver needs a cardinality constraint")
        inner, B = instance.objective.matroid, instance.constraint.budget

        def build(i, t):
            if t not in tables:
                tables[t] = MtrankDP(instance.below_probs(t), inner, B)
            return MtrankDPPolicy(tables[t], i, t)

        return ThresholdSolver("exact", build, lambda i: 1)

    feasible_of = lambda: constraint_feasibility(instance.constraint, instance)

    def build(i, t):
        if t not in tables:
            tables[t] = RankDP(instance.below_probs(t), feasible_of())
        return RankDPPolicy(tables[t], i, t)

    return ThresholdSolver("exact", build, lambda i: 1)


def metamin_for(instance: Instance, solver: ThresholdSolver, test_on_union: bool = False,
                index_mode: str = "reversed") -> Policy:
    """MetaMin for a min objective, the sum-of-k driver for min_k / min_basis."""
    obj = instance.objective
    if isinstance(obj, MinElement):
        return MetaMin(solver.at(1), obj, instance.m, beta=solver.beta(1), test_on_union=test_on_union)
    if isinstance(obj, (MinK, MinBasis)):
        return SumOfK(solver, obj, obj.k, instance.m, beta=solver.beta, index_mode=index_mode,
                      test_on_union=test_on_union)
    raise ValueError(f"unsupported objective {obj!r}")
