"""Adaptive policies, their executor, exact evaluation and Monte Carlo.

A policy is an object with a ``run(session)`` method.  It learns weights
only through ``session.probe(e)``, so it cannot peek at anything the
realization has not revealed.  Composite policies split their work into
phases with ``session.begin_phase``; each phase's members are charged to
that phase's own feasibility ledger.
"""

from __future__ import annotations

import math
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Iterable, Iterator, Mapping, Sequence

from ._numeric import Number, number_json, number_repr
from .matroid import Matroid
from .model import (
    CapExceeded,
    ConstraintSpec,
    Instance,
    Realization,
    sample_realization,
    state_cap,
)
from .objective import ThresholdContext, mtrank, trank


class PolicyError(RuntimeError):
    """A policy broke the probing rules (duplicate probe, infeasible selection)."""


@dataclass
class Phase:
    label: str
    members: list[int] = field(default_factory=list)
    cost: Number = 0


class Session:
    """The probing interface a policy sees during one run."""

    def __init__(self, instance: Instance, reveal: Callable[[int], int]):
        self.instance = instance
        self._reveal = reveal
        self._weights: dict[int, int] = {}
        self.probe_order: list[int] = []
        self.phases: list[Phase] = []
        self.call_log: list[tuple[int, bool]] = []
        self.ub: Number | None = None
        self.info: dict = {}

    @property
    def weights(self) -> Mapping[int, int]:
        return MappingProxyType(self._weights)

    @property
    def history(self) -> tuple[tuple[int, int], ...]:
        return tuple((e, self._weights[e]) for e in self.probe_order)

    @property
    def phase(self) -> Phase:
        if not self.phases:
            self.begin_phase("main")
        return self.phases[-1]

    def begin_phase(self, label: str) -> Phase:
        ph = Phase(label)
        self.phases.append(ph)
        return ph

    def probe(self, e: int) -> int:
        """Select ``e`` in the current phase and return its weight.

        A weight revealed in an earlier phase is reused without a new probe.
        """
        if not 0 <= e < self.instance.n:
            raise PolicyError(f"no element with id {e}")
        ph = self.phase
        if e in ph.members:
            raise PolicyError(f"element {e} selected twice in phase {ph.label!r}")
        if e not in self._weights:
            self._weights[e] = self._reveal(e)
            self.probe_order.append(e)
        ph.members.append(e)
        ph.cost += self.instance.cost(e)
        return self._weights[e]

    def is_revealed(self, e: int) -> bool:
        return e in self._weights

    @property
    def selection(self) -> frozenset[int]:
        return frozenset(self.probe_order)

    def phase_selection(self) -> list[int]:
        return list(self.phase.members)


class Policy:
    """Base class; subclasses implement ``run``.

    ``max_feasible_sets`` is the declared feasibility mode: 1 is strict,
    larger values allow a union of that many feasible sets.  ``constraint``
    overrides the instance constraint for the ledger check.
    """

    name = "policy"
    max_feasible_sets: int | None = 1
    constraint: ConstraintSpec | None = None

    def run(self, session: Session):
        raise NotImplementedError


class SetPolicy(Policy):
    """Non-adaptive: probe a fixed list of elements."""

    def __init__(self, members: Iterable[int], name: str = "set", max_feasible_sets: int | None = 1,
                 constraint: ConstraintSpec | None = None):
        self.members = list(members)
        self.name = name
        self.max_feasible_sets = max_feasible_sets
        self.constraint = constraint

    def run(self, session: Session) -> list[int]:
        for e in self.members:
            session.probe(e)
        return list(self.members)

    def __repr__(self) -> str:
        return f"SetPolicy({self.members})"


class DecisionPolicy(Policy):
    """Policy given as ``decide(instance, history) -> id or None``."""

    def __init__(self, decide: Callable[[Instance, tuple], int | None], name: str = "decision",
                 max_feasible_sets: int | None = 1, constraint: ConstraintSpec | None = None):
        self.decide = decide
        self.name = name
        self.max_feasible_sets = max_feasible_sets
        self.constraint = constraint

    def run(self, session: Session) -> list[int]:
        chosen = []
        while True:
            e = self.decide(session.instance, session.history)
            if e is None:
                return chosen
            session.probe(e)
            chosen.append(e)


# -- ledger ---------------------------------------------------------------------


def count_feasible_chunks(members: Sequence[int], constraint: ConstraintSpec, instance: Instance) -> int:
    """Split ``members`` (in order) into consecutive feasible chunks, first-fit.

    Returns the number of chunks; raises if some element is infeasible alone.
    """
    costs = instance.costs
    chunks = 0
    cur = 0
    for e in members:
        bit = 1 << e
        if chunks and constraint.admits_mask(cur | bit, costs):
            cur |= bit
            continue
        if not constraint.admits_mask(bit, costs):
            raise PolicyError(f"element {e} is not feasible on its own")
        chunks += 1
        cur = bit
    return chunks


@dataclass
class RunReport:
    selection: frozenset[int]
    objective_value: Number
    ub_value: Number | None
    feasible_set_count: int
    cost_ledger: list[tuple[str, Number]]
    call_log: list[tuple[int, bool]]
    probes: list[int]
    weights: dict[int, int]
    info: dict = field(default_factory=dict)

    @property
    def cost(self) -> Number:
        return self.info.get("probe_cost", 0)

    def to_json(self) -> dict:
        out = {
            "selection": sorted(self.selection),
            "probes": list(self.probes),
            "weights": {str(e): w for e, w in sorted(self.weights.items())},
            "objective_value": self.objective_value,
            "ub_value": self.ub_value,
            "feasible_set_count": self.feasible_set_count,
            "cost_ledger": [{"phase": lbl, "cost": number_repr(c)} for lbl, c in self.cost_ledger],
            "call_log": [{"t": t, "success": ok} for t, ok in self.call_log],
        }
        return out


def _report(policy: Policy, session: Session, objective, check: bool = True) -> RunReport:
    instance = session.instance
    objective = instance.objective if objective is None else objective
    constraint = policy.constraint if policy.constraint is not None else instance.constraint
    count = sum(count_feasible_chunks(ph.members, constraint, instance) for ph in session.phases)
    if check and policy.max_feasible_sets is not None and count > policy.max_feasible_sets:
        raise PolicyError(
            f"{policy.name}: selection needs {count} feasible sets, declared at most {policy.max_feasible_sets}"
        )
    value = objective(session.selection, session.weights, instance.m)
    if session.ub is not None and value > session.ub:
        raise PolicyError(f"objective {value} exceeds the reported upper bound {session.ub}")
    weights = dict(session.weights)
    return RunReport(
        selection=session.selection,
        objective_value=value,
        ub_value=session.ub,
        feasible_set_count=count,
        cost_ledger=[(ph.label, ph.cost) for ph in session.phases],
        call_log=list(session.call_log),
        probes=list(session.probe_order),
        weights=weights,
        info={**session.info, "probe_cost": instance.cost_of(session.probe_order)},
    )


def execute(policy: Policy, instance: Instance, x: Realization | Sequence[int], objective=None) -> RunReport:
    """Run ``policy`` against a fixed realization."""
    session = Session(instance, lambda e: x[e])
    policy.run(session)
    return _report(policy, session, objective)


# -- exact evaluation ---------------------------------------------------------------


class _Unrevealed(BaseException):
    # BaseException so that policy code catching Exception cannot swallow it
    def __init__(self, e: int):
        self.e = e


def iter_outcomes(policy: Policy, instance: Instance, cap: int | None = None) -> Iterator[tuple[Number, Session]]:
    """Expand the policy's decision tree: every (probability, finished session).

    Only outcomes of probed elements branch, so the number of leaves is
    bounded by the product of support sizes but is usually far smaller.
    """
    cap = state_cap() if cap is None else cap
    stack: list[tuple[dict[int, int], Number]] = [({}, 1)]
    runs = 0
    while stack:
        known, prob = stack.pop()
        runs += 1
        if runs > cap:
            raise CapExceeded(f"policy tree expansion exceeded the cap {cap}")

        def reveal(e: int, known=known) -> int:
            if e in known:
                return known[e]
            raise _Unrevealed(e)

        session = Session(instance, reveal)
        try:
            policy.run(session)
        except _Unrevealed as need:
            e = need.e
            for v, p in reversed(instance.dist(e).support):
                if p:
                    stack.append(({**known, e: v}, prob * p))
            continue
        yield prob, session


@dataclass
class ExactEvaluation:
    expected: Number
    tail: tuple[Number, ...]
    expected_ub: Number | None
    outcomes: list[tuple[Number, RunReport]]
    value_bound: int

    @property
    def condensation(self) -> tuple[Number, Number, Number]:
        """(sum_t a_t, a_0 + sum_j a_{2^j} 2^j, 2 sum_t a_t) for the tail a."""
        return condensation_terms(self.tail)

    def to_json(self) -> dict:
        return {
            "expected_objective": number_json(self.expected),
            "expected_ub": number_json(self.expected_ub),
            "value_bound": self.value_bound,
            "tail": [number_repr(a) for a in self.tail],
            "outcomes": [
                {"probability": number_repr(p), **rep.to_json()} for p, rep in self.outcomes
            ],
        }


def condensation_terms(tail: Sequence[Number]) -> tuple[Number, Number, Number]:
    total = sum(tail, 0)
    M = len(tail) - 1
    mid = tail[0] if tail else 0
    j = 1
    while j <= M:
        mid += tail[j] * j
        j *= 2
    return total, mid, 2 * total


def exact_expected_objective(policy: Policy, instance: Instance, objective=None,
                             value_bound: int | None = None, cap: int | None = None) -> ExactEvaluation:
    """E[f(selection)] by enumerating the policy's outcome tree.

    Also returns the tail vector P(f > t), t = 0..M, and checks both the
    tail-sum identity and the power-of-two condensation sandwich on it.
    """
    objective = instance.objective if objective is None else objective
    M = value_bound
    if M is None:
        bound = getattr(objective, "value_bound", None)
        M = bound(instance.m) if bound else instance.m
    outcomes = [(p, _report(policy, s, objective)) for p, s in iter_outcomes(policy, instance, cap)]
    total_p = sum((p for p, _ in outcomes), 0)
    if abs(total_p - 1) > 1e-9:
        raise RuntimeError(f"outcome probabilities sum to {total_p}")
    expected = sum((p * r.objective_value for p, r in outcomes), 0)
    tail = [0] * (M + 1)
    for p, r in outcomes:
        v = r.objective_value
        if v > M or v < 0:
            raise ValueError(f"objective value {v} outside [0, {M}]")
        for t in range(int(math.ceil(v))):
            tail[t] += p
    if any(r.ub_value is not None for _, r in outcomes):
        expected_ub = sum((p * (r.ub_value if r.ub_value is not None else r.objective_value)
                           for p, r in outcomes), 0)
    else:
        expected_ub = None
    evaluation = ExactEvaluation(expected, tuple(tail), expected_ub, outcomes, M)
    _check_tail(evaluation)
    return evaluation


def _check_tail(ev: ExactEvaluation) -> None:
    if all(isinstance(r.objective_value, int) for _, r in ev.outcomes):
        total = sum(ev.tail, 0)
        if abs(total - ev.expected) > 1e-9:
            raise RuntimeError(f"tail sum {total} differs from expectation {ev.expected}")
        low, mid, high = ev.condensation
        if not (low <= mid + 1e-12 and mid <= high + 1e-12):
            raise RuntimeError(f"condensation sandwich violated: {low} <= {mid} <= {high}")


def exact_success_probability(policy: Policy, instance: Instance, ctx: ThresholdContext,
                              rank_kind: str = "trank", matroid: Matroid | None = None,
                              collapse: bool = False, cap: int | None = None) -> Number:
    """P(rank(selection) >= i) at threshold t over the policy's outcome tree.

    ``collapse`` first replaces each weight by its two-point below/above law.
    """
    if ctx.i <= 0:
        return 1
    if rank_kind == "mtrank":
        if matroid is None:
            matroid = instance.inner_matroid
        if matroid is None:
            raise ValueError("mtrank needs a matroid")
    elif rank_kind != "trank":
        raise ValueError(f"unknown rank kind {rank_kind!r}")
    inst = instance.collapsed(ctx.t) if collapse else instance
    total = 0
    for p, s in iter_outcomes(policy, inst, cap):
        sel = s.selection
        if rank_kind == "trank":
            r = trank(sel, s.weights, ctx.t)
        else:
            r = mtrank(matroid, sel, s.weights, ctx.t)
        if r >= ctx.i:
            total += p
    return total


# -- Monte Carlo --------------------------------------------------------------------


@dataclass
class TrialRow:
    trial: int
    objective: Number
    cost: Number
    feasible_set_count: int
    ub: Number | None = None
    calls: int = 0


@dataclass
class MCEstimate:
    mean: float
    half_width_95: float
    trials: int
    rows: list[TrialRow] = field(default_factory=list, repr=False)


_MC_STATE: dict = {}


def _run_trials(start: int, stop: int) -> list[TrialRow]:
    policy, instance, objective, seed = _MC_STATE["job"]
    rows = []
    for trial in range(start, stop):
        rep = execute(policy, instance, sample_realization(instance, seed, trial), objective)
        rows.append(TrialRow(trial, rep.objective_value, rep.cost, rep.feasible_set_count,
                             rep.ub_value, len(rep.call_log)))
    return rows


def run_trials(policy: Policy, instance: Instance, trials: int, seed: int, objective=None,
               jobs: int = 1) -> list[TrialRow]:
    """Per-trial rows in trial order, whatever the worker count."""
    if trials < 1:
        raise ValueError("need at least one trial")
    _MC_STATE["job"] = (policy, instance, objective, seed)
    try:
        if jobs <= 1 or trials < 2 * jobs:
            return _run_trials(0, trials)
        step = -(-trials // (jobs * 4))
        bounds = [(a, min(a + step, trials)) for a in range(0, trials, step)]
        ctx = multiprocessing.get_context("fork")
        with ProcessPoolExecutor(max_workers=jobs, mp_context=ctx) as pool:
            parts = pool.map(_run_trials, *zip(*bounds))
            return [row for part in parts for row in part]
    finally:
        _MC_STATE.pop("job", None)


def summarize(values: Sequence[Number]) -> tuple[float, float]:
    n = len(values)
    mean = math.fsum(float(v) for v in values) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((float(v) - mean) ** 2 for v in values) / (n - 1)
    return mean, 1.96 * math.sqrt(var / n)


def monte_carlo_estimate(policy: Policy, instance: Instance, objective=None, trials: int = 10_000,
                         seed: int = 0, jobs: int = 1) -> MCEstimate:
    """Sample mean of the objective and a normal-approximation 95% half-width."""
    rows = run_trials(policy, instance, trials, seed, objective, jobs)
    mean, hw = summarize([r.objective for r in rows])
    return MCEstimate(mean, hw, trials, rows)
