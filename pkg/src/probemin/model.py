"""Instances, discrete weight distributions, realizations and instance I/O."""

from __future__ import annotations

import itertools
import json
import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from ._numeric import Number, is_exact, number_repr, to_number
from .matroid import Matroid, MatroidError
from .objective import MinBasis, MinElement, MinK, ObjectiveSpec

DEFAULT_STATE_CAP = 1 << 22
FLOAT_TOL = 1e-12


class InstanceError(ValueError):
    """Malformed or invalid instance data."""


class CapExceeded(RuntimeError):
    """An enumeration would exceed the configured state cap."""


def state_cap(default: int = DEFAULT_STATE_CAP) -> int:
    """Enumeration cap, overridable through ``PROBEMIN_STATE_CAP``."""
    raw = os.environ.get("PROBEMIN_STATE_CAP")
    if raw:
        try:
            return int(raw)
        except ValueError:
            raise InstanceError(f"PROBEMIN_STATE_CAP must be an integer, got {raw!r}") from None
    return default


@dataclass(frozen=True)
class WeightDistribution:
    """Finite distribution on integer weights, support sorted by value."""

    support: tuple[tuple[int, Number], ...]

    def __post_init__(self):
        if not self.support:
            raise InstanceError("distribution has empty support")
        values = [v for v, _ in self.support]
        if any(not isinstance(v, int) or isinstance(v, bool) for v in values):
            raise InstanceError(f"weights must be integers: {values}")
        if values != sorted(values) or len(set(values)) != len(values):
            raise InstanceError(f"support values must be distinct and ascending: {values}")
        if values[0] < 0:
            raise InstanceError("weights must be non-negative")
        probs = [p for _, p in self.support]
        if any(p < 0 or p > 1 for p in probs):
            raise InstanceError(f"probabilities must lie in [0, 1]: {probs}")
        total = sum(probs)
        if all(is_exact(p) for p in probs):
            if total != 1:
                raise InstanceError(f"probabilities sum to {total}, not 1")
        elif abs(total - 1) > FLOAT_TOL:
            raise InstanceError(f"probabilities sum to {total}, not 1")

    @classmethod
    def of(cls, pairs: Iterable[tuple[int, Number]]) -> "WeightDistribution":
        """Build from unsorted (value, prob) pairs; zero-probability values are dropped."""
        merged: dict[int, Number] = {}
        for v, p in pairs:
            if p < 0:
                raise InstanceError(f"negative probability {p} for value {v}")
            merged[int(v)] = merged.get(int(v), 0) + p
        support = tuple((v, p) for v, p in sorted(merged.items()) if p != 0)
        return cls(support)

    @classmethod
    def point(cls, value: int) -> "WeightDistribution":
        return cls(((value, Fraction(1)),))

    @classmethod
    def two_point(cls, low: int, high: int, p_low: Number) -> "WeightDistribution":
        return cls.of([(low, p_low), (high, 1 - p_low)])

    @property
    def values(self) -> tuple[int, ...]:
        return tuple(v for v, _ in self.support)

    @property
    def max_value(self) -> int:
        return self.support[-1][0]

    @property
    def exact(self) -> bool:
        return all(is_exact(p) for _, p in self.support)

    def below_prob(self, t: int) -> Number:
        """P(X <= t)."""
        if t >= self.max_value:
            return self.support[0][1] * 0 + 1
        return sum((p for v, p in self.support if v <= t), 0)

    def above_prob(self, t: int) -> Number:
        """P(X > t)."""
        if t >= self.max_value:
            return self.support[0][1] * 0
        return sum((p for v, p in self.support if v > t), 0)

    def mean(self) -> Number:
        return sum((v * p for v, p in self.support), 0)

    def to_float(self) -> "WeightDistribution":
        return WeightDistribution(tuple((v, float(p)) for v, p in self.support))

    def to_json(self) -> list:
        return [[v, number_repr(p)] for v, p in self.support]


def below_prob(dist: WeightDistribution, t: int) -> Number:
    return dist.below_prob(t)


@dataclass(frozen=True)
class Element:
    id: int
    cost: Number
    dist: WeightDistribution


@dataclass(frozen=True)
class Knapsack:
    budget: Number

    def __post_init__(self):
        if self.budget < 0:
            raise InstanceError("knapsack budget must be non-negative")

    def admits_mask(self, mask: int, costs: Sequence[Number]) -> bool:
        return _mask_cost(mask, costs) <= self.budget

    def to_json(self) -> dict:
        return {"type": "knapsack", "budget": number_repr(self.budget)}


@dataclass(frozen=True)
class Cardinality:
    budget: int

    def __post_init__(self):
        if not isinstance(self.budget, int) or self.budget < 0:
            raise InstanceError("cardinality budget must be a non-negative integer")

    def admits_mask(self, mask: int, costs: Sequence[Number]) -> bool:
        return bin(mask).count("1") <= self.budget

    def to_json(self) -> dict:
        return {"type": "cardinality", "budget": self.budget}


@dataclass(frozen=True)
class MatroidConstraint:
    matroid: Matroid

    def admits_mask(self, mask: int, costs: Sequence[Number]) -> bool:
        if mask & ~self.matroid.ground_mask:
            return False
        return self.matroid.independent_mask(mask)

    def to_json(self) -> dict:
        return {"type": "matroid"}


ConstraintSpec = Knapsack | Cardinality | MatroidConstraint


def _mask_cost(mask: int, costs: Sequence[Number]) -> Number:
    total = 0
    e = 0
    while mask:
        if mask & 1:
            total += costs[e]
        mask >>= 1
        e += 1
    return total


@dataclass(frozen=True)
class Realization:
    """A full assignment of weights, indexed by element id."""

    weights: tuple[int, ...]

    def __getitem__(self, e: int) -> int:
        return self.weights[e]

    def __len__(self) -> int:
        return len(self.weights)


@dataclass(frozen=True)
class Instance:
    elements: tuple[Element, ...]
    m: int
    constraint: ConstraintSpec
    objective: ObjectiveSpec = field(default_factory=MinElement)
    k: int = 1
    inner_matroid: Matroid | None = None
    outer_matroid: Matroid | None = None

    def __post_init__(self):
        if self.m < 0:
            raise InstanceError("m must be non-negative")
        if self.k < 1:
            raise InstanceError("k must be at least 1")
        ids = [el.id for el in self.elements]
        if sorted(ids) != list(range(len(ids))):
            if len(set(ids)) != len(ids):
                raise InstanceError(f"duplicate element ids in {ids}")
            raise InstanceError(f"element ids must be contiguous from 0, got {sorted(ids)}")
        if ids != list(range(len(ids))):
            object.__setattr__(self, "elements", tuple(sorted(self.elements, key=lambda el: el.id)))
        for el in self.elements:
            if el.cost < 0:
                raise InstanceError(f"element {el.id} has negative cost")
            if el.dist.max_value > self.m:
                raise InstanceError(f"element {el.id} has weight {el.dist.max_value} > m={self.m}")

    @property
    def n(self) -> int:
        return len(self.elements)

    @property
    def ids(self) -> range:
        return range(len(self.elements))

    @property
    def costs(self) -> tuple[Number, ...]:
        return tuple(el.cost for el in self.elements)

    @property
    def budget(self) -> Number | None:
        if isinstance(self.constraint, (Knapsack, Cardinality)):
            return self.constraint.budget
        return None

    @property
    def exact(self) -> bool:
        return all(el.dist.exact and is_exact(el.cost) for el in self.elements)

    def dist(self, e: int) -> WeightDistribution:
        return self.elements[e].dist

    def cost(self, e: int) -> Number:
        return self.elements[e].cost

    def cost_of(self, S: Iterable[int]) -> Number:
        return sum((self.elements[e].cost for e in S), 0)

    def below_probs(self, t: int) -> tuple[Number, ...]:
        return tuple(el.dist.below_prob(t) for el in self.elements)

    def feasible(self, S: Iterable[int], constraint: ConstraintSpec | None = None) -> bool:
        c = self.constraint if constraint is None else constraint
        mask = 0
        for e in S:
            mask |= 1 << e
        return c.admits_mask(mask, self.costs)

    def replace(self, **changes) -> "Instance":
        from dataclasses import replace as _replace

        return _replace(self, **changes)

    def with_distributions(self, dists: Sequence[WeightDistribution]) -> "Instance":
        elements = tuple(Element(el.id, el.cost, d) for el, d in zip(self.elements, dists))
        return self.replace(elements=elements)

    def collapsed(self, t: int) -> "Instance":
        """Each weight replaced by the two-point {0 w.p. P(X<=t), m otherwise}.

        Rank events at threshold ``t`` have the same law before and after
        (for t < m).
        """
        return self.with_distributions(
            [WeightDistribution.two_point(0, self.m, el.dist.below_prob(t)) for el in self.elements]
        )

    def to_float(self) -> "Instance":
        elements = tuple(Element(el.id, float(el.cost), el.dist.to_float()) for el in self.elements)
        c = self.constraint
        if isinstance(c, Knapsack):
            c = Knapsack(float(c.budget))
        return self.replace(elements=elements, constraint=c)


# -- instance documents -------------------------------------------------------


def parse_instance(text: str, exact: bool = True) -> Instance:
    """Parse a JSON instance document and validate it.

    ``exact`` keeps probabilities and costs as Fractions (decimal literals
    are read exactly); otherwise they become floats.
    """
    try:
        doc = json.loads(text, parse_float=str)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"instance is not valid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise InstanceError("instance document must be a JSON object")
    return instance_from_json(doc, exact=exact)


def instance_from_json(doc: Mapping, exact: bool = True) -> Instance:
    try:
        m = int(doc["m"])
        raw_elements = doc["elements"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InstanceError(f"instance document needs integer 'm' and 'elements': {exc}") from None

    def num(v):
        try:
            return to_number(v, exact)
        except (TypeError, ValueError, ZeroDivisionError) as exc:
            raise InstanceError(str(exc)) from None

    elements = []
    for raw in raw_elements:
        try:
            eid = raw["id"]
            pairs = [(int(v), num(p)) for v, p in raw["dist"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise InstanceError(f"bad element entry {raw!r}: {exc}") from None
        if not isinstance(eid, int) or isinstance(eid, bool):
            raise InstanceError(f"element id must be an integer: {eid!r}")
        values = [v for v, _ in pairs]
        if len(set(values)) != len(values):
            raise InstanceError(f"element {eid} repeats a weight value")
        if any(v > m for v in values):
            raise InstanceError(f"element {eid} has a weight above m={m}")
        dist = WeightDistribution(tuple(sorted(pairs)))
        elements.append(Element(eid, num(raw.get("cost", 1)), dist))
    ids = [el.id for el in elements]
    if len(set(ids)) != len(ids):
        raise InstanceError(f"duplicate element ids in {ids}")

    try:
        inner = Matroid.from_json(doc["inner_matroid"]) if doc.get("inner_matroid") else None
        outer = Matroid.from_json(doc["outer_matroid"]) if doc.get("outer_matroid") else None
    except MatroidError as exc:
        raise InstanceError(f"bad matroid: {exc}") from None

    craw = doc.get("constraint") or {}
    ctype = craw.get("type")
    if ctype == "knapsack":
        constraint = Knapsack(num(craw["budget"]))
    elif ctype == "cardinality":
        b = craw["budget"]
        if not isinstance(b, int):
            raise InstanceError("cardinality budget must be an integer")
        constraint = Cardinality(b)
    elif ctype == "matroid":
        if craw.get("matroid"):
            outer = Matroid.from_json(craw["matroid"])
        if outer is None:
            raise InstanceError("matroid constraint needs an outer_matroid")
        constraint = MatroidConstraint(outer)
    else:
        raise InstanceError(f"unknown constraint type {ctype!r}")

    oraw = doc.get("objective") or {"type": "min"}
    otype = oraw.get("type")
    k = int(doc.get("k", oraw.get("k", 1)))
    if otype == "min":
        objective: ObjectiveSpec = MinElement()
    elif otype == "min_k":
        k = int(oraw.get("k", k))
        objective = MinK(k)
    elif otype == "min_basis":
        if inner is None:
            raise InstanceError("min_basis objective needs an inner_matroid")
        r = inner.rank()
        if "k" in doc or "k" in oraw:
            if k != r:
                raise InstanceError(f"k={k} does not match the inner matroid rank {r}")
        k = max(r, 1)
        objective = MinBasis(inner)
    else:
        raise InstanceError(f"unknown objective type {otype!r}")

    return Instance(
        elements=tuple(elements),
        m=m,
        constraint=constraint,
        objective=objective,
        k=k,
        inner_matroid=inner,
        outer_matroid=outer,
    )


def instance_to_json(instance: Instance) -> dict:
    doc: dict = {
        "m": instance.m,
        "k": instance.k,
        "constraint": instance.constraint.to_json(),
        "objective": instance.objective.to_json(),
        "elements": [
            {"id": el.id, "cost": number_repr(el.cost), "dist": el.dist.to_json()}
            for el in instance.elements
        ],
    }
    if instance.inner_matroid is not None:
        doc["inner_matroid"] = instance.inner_matroid.to_json()
    if instance.outer_matroid is not None:
        doc["outer_matroid"] = instance.outer_matroid.to_json()
    return doc


def dump_instance(instance: Instance) -> str:
    return json.dumps(instance_to_json(instance), indent=2)


def load_instance(path, exact: bool = True) -> Instance:
    with open(path, encoding="utf-8") as fh:
        return parse_instance(fh.read(), exact=exact)


# -- randomness and enumeration ---------------------------------------------------

_KEYS: dict[int, np.ndarray] = {}


def _philox_key(seed: int) -> np.ndarray:
    key = _KEYS.get(seed)
    if key is None:
        key = np.random.SeedSequence(seed).generate_state(2, dtype=np.uint64)
        _KEYS[seed] = key
    return key


def trial_uniforms(seed: int, trial: int, n: int) -> np.ndarray:
    """n uniforms for one trial; draw e of the trial's counter block feeds element e."""
    bitgen = np.random.Philox(key=_philox_key(seed), counter=[0, trial, 0, 0])
    return np.random.Generator(bitgen).random(n)


def _cumulative(dist: WeightDistribution) -> tuple[tuple[int, ...], tuple[float, ...]]:
    acc = 0.0
    cum = []
    for _, p in dist.support:
        acc += float(p)
        cum.append(acc)
    cum[-1] = math.inf
    return dist.values, tuple(cum)


def sample_realization(instance: Instance, seed: int, trial: int) -> Realization:
    """Deterministic in (seed, trial); elements use disjoint counter slots."""
    u = trial_uniforms(seed, trial, instance.n)
    weights = []
    for el, ue in zip(instance.elements, u):
        values, cum = _cumulative(el.dist)
        idx = 0
        while ue >= cum[idx]:
            idx += 1
        weights.append(values[idx])
    return Realization(tuple(weights))


def profile_count(instance: Instance) -> int:
    return math.prod(len(el.dist.support) for el in instance.elements)


def enumerate_realizations(instance: Instance, cap: int | None = None) -> Iterator[tuple[Realization, Number]]:
    """Every outcome profile with its product probability."""
    cap = state_cap() if cap is None else cap
    count = profile_count(instance)
    if count > cap:
        raise CapExceeded(f"{count} outcome profiles exceed the cap {cap}")
    supports = [el.dist.support for el in instance.elements]
    for combo in itertools.product(*supports):
        prob = 1
        for _, p in combo:
            prob = prob * p
        yield Realization(tuple(v for v, _ in combo)), prob
