"""Matroids given by independence oracles over integer element ids.

Sets are passed around as iterables of ids at the public surface and as
integer bitmasks (bit ``e`` set iff id ``e`` is a member) internally.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Iterable, Mapping, Sequence

EXPLICIT_GROUND_CAP = 16


class MatroidError(ValueError):
    pass


def to_mask(ids: Iterable[int]) -> int:
    mask = 0
    for e in ids:
        mask |= 1 << e
    return mask


def from_mask(mask: int) -> list[int]:
    out = []
    e = 0
    while mask:
        if mask & 1:
            out.append(e)
        mask >>= 1
        e += 1
    return out


def popcount(mask: int) -> int:
    return bin(mask).count("1")


@dataclass(frozen=True)
class UniformSpec:
    ground: tuple[int, ...]
    rank: int

    def to_json(self) -> dict:
        return {"type": "uniform", "rank": self.rank, "ground": list(self.ground)}


@dataclass(frozen=True)
class PartitionSpec:
    blocks: tuple[tuple[tuple[int, ...], int], ...]

    def to_json(self) -> dict:
        return {
            "type": "partition",
            "blocks": [{"ids": list(ids), "cap": cap} for ids, cap in self.blocks],
        }


@dataclass(frozen=True)
class ExplicitSpec:
    ground: tuple[int, ...]
    independent: tuple[frozenset[int], ...]

    def to_json(self) -> dict:
        fam = sorted((sorted(s) for s in self.independent), key=lambda s: (len(s), s))
        return {"type": "explicit", "ground": list(self.ground), "independent": fam}


MatroidSpec = UniformSpec | PartitionSpec | ExplicitSpec


class Matroid:
    """An independence oracle over ``ground``, possibly contracted.

    Contraction is lazy: the contracted matroid keeps the base oracle and
    the contracted mask ``C``, and accepts ``T`` iff ``T | C`` is
    independent in the base.
    """

    def __init__(
        self,
        ground: Iterable[int],
        oracle: Callable[[int], bool],
        spec: MatroidSpec | None = None,
        contracted: int = 0,
    ):
        self.ground = frozenset(ground)
        self.ground_mask = to_mask(self.ground)
        self._oracle = oracle
        self.spec = spec
        self.contracted_mask = contracted

    @property
    def contracted(self) -> frozenset[int]:
        return frozenset(from_mask(self.contracted_mask))

    def __repr__(self) -> str:
        kind = type(self.spec).__name__ if self.spec is not None else "oracle"
        extra = f", contracted={sorted(self.contracted)}" if self.contracted_mask else ""
        return f"Matroid({kind}, ground={sorted(self.ground)}{extra})"

    # -- oracle -------------------------------------------------------------

    def independent_mask(self, mask: int) -> bool:
        """Unchecked oracle on a mask already known to lie in the ground set."""
        return self._oracle(mask | self.contracted_mask)

    def is_independent(self, S: Iterable[int]) -> bool:
        mask = to_mask(S)
        if mask & ~self.ground_mask:
            raise MatroidError(f"set {sorted(from_mask(mask))} is not inside the ground set")
        return self.independent_mask(mask)

    def contract(self, S: Iterable[int]) -> "Matroid":
        mask = to_mask(S)
        if mask & ~self.ground_mask:
            raise MatroidError("contracted set is not inside the ground set")
        if not self.independent_mask(mask):
            raise MatroidError(f"cannot contract by dependent set {sorted(from_mask(mask))}")
        return Matroid(
            self.ground - set(from_mask(mask)),
            self._oracle,
            self.spec,
            self.contracted_mask | mask,
        )

    # -- rank and bases -----------------------------------------------------

    def rank_mask(self, mask: int) -> int:
        basis = 0
        size = 0
        for e in from_mask(mask & self.ground_mask):
            bit = 1 << e
            if self.independent_mask(basis | bit):
                basis |= bit
                size += 1
        return size

    def rank(self, S: Iterable[int] | None = None) -> int:
        """Size of a maximum independent subset of ``S`` (default: ground)."""
        if S is None:
            return self.rank_mask(self.ground_mask)
        mask = to_mask(S)
        if mask & ~self.ground_mask:
            raise MatroidError("rank query outside the ground set")
        return self.rank_mask(mask)

    def min_weight_basis(self, weights: Mapping[int, object] | Sequence, S: Iterable[int]) -> list[int]:
        """Greedy basis of ``S``: scan by ascending (weight, id), keep what stays independent.

        The list is in order of addition, so weights along it are non-decreasing.
        """
        members = sorted(set(S), key=lambda e: (weights[e], e))
        if to_mask(members) & ~self.ground_mask:
            raise MatroidError("basis query outside the ground set")
        basis: list[int] = []
        mask = 0
        for e in members:
            if self.independent_mask(mask | (1 << e)):
                mask |= 1 << e
                basis.append(e)
        return basis

    # -- constructors -------------------------------------------------------

    @classmethod
    def uniform(cls, ground: Iterable[int], rank: int) -> "Matroid":
        ground = tuple(sorted(set(ground)))
        if rank < 0:
            raise MatroidError("uniform rank must be non-negative")
        return cls(ground, lambda mask: popcount(mask) <= rank, UniformSpec(ground, rank))

    @classmethod
    def partition(cls, blocks: Iterable[tuple[Iterable[int], int]]) -> "Matroid":
        norm = tuple((tuple(sorted(set(ids))), int(cap)) for ids, cap in blocks)
        seen: set[int] = set()
        for ids, cap in norm:
            if cap < 0:
                raise MatroidError("partition capacity must be non-negative")
            if seen & set(ids):
                raise MatroidError("partition blocks overlap")
            seen |= set(ids)
        block_masks = [(to_mask(ids), cap) for ids, cap in norm]

        def oracle(mask: int) -> bool:
            return all(popcount(mask & bm) <= cap for bm, cap in block_masks)

        return cls(seen, oracle, PartitionSpec(norm))

    @classmethod
    def explicit(cls, ground: Iterable[int], independent: Iterable[Iterable[int]], close: bool = True) -> "Matroid":
        """Matroid from a listed family; ``close`` adds all subsets first.

        The (closed) family is validated with :func:`check_axioms`.
        """
        ground = tuple(sorted(set(ground)))
        if len(ground) > EXPLICIT_GROUND_CAP:
            raise MatroidError(f"explicit matroids are capped at {EXPLICIT_GROUND_CAP} elements")
        family = {frozenset(s) for s in independent}
        family.add(frozenset())
        for s in family:
            if not s <= set(ground):
                raise MatroidError(f"independent set {sorted(s)} leaves the ground set")
        if close:
            family = downward_closure(family)
        spec = ExplicitSpec(ground, tuple(sorted(family, key=lambda s: (len(s), sorted(s)))))
        if not check_axioms(spec):
            raise MatroidError("listed family does not satisfy the matroid axioms")
        table = frozenset(to_mask(s) for s in family)
        return cls(ground, table.__contains__, spec)

    @classmethod
    def from_spec(cls, spec: MatroidSpec) -> "Matroid":
        if isinstance(spec, UniformSpec):
            return cls.uniform(spec.ground, spec.rank)
        if isinstance(spec, PartitionSpec):
            return cls.partition(spec.blocks)
        if isinstance(spec, ExplicitSpec):
            return cls.explicit(spec.ground, spec.independent)
        raise TypeError(f"unknown matroid spec {spec!r}")

    @classmethod
    def from_json(cls, doc: Mapping) -> "Matroid":
        kind = doc.get("type")
        try:
            if kind == "uniform":
                return cls.uniform(doc["ground"], int(doc["rank"]))
            if kind == "partition":
                return cls.partition((b["ids"], b["cap"]) for b in doc["blocks"])
            if kind == "explicit":
                return cls.explicit(doc["ground"], doc["independent"])
        except KeyError as exc:
            raise MatroidError(f"matroid document missing field {exc}") from None
        raise MatroidError(f"unknown matroid type {kind!r}")

    def to_json(self) -> dict:
        if self.spec is None or self.contracted_mask:
            raise MatroidError("only uncontracted spec-backed matroids serialize")
        return self.spec.to_json()

    def family(self) -> list[frozenset[int]]:
        """All independent subsets of the ground set (small grounds only)."""
        ids = sorted(self.ground)
        if len(ids) > EXPLICIT_GROUND_CAP:
            raise MatroidError("ground set too large to enumerate")
        out = []
        for r in range(len(ids) + 1):
            for combo in combinations(ids, r):
                if self.independent_mask(to_mask(combo)):
                    out.append(frozenset(combo))
        return out


def downward_closure(family: Iterable[frozenset[int]]) -> set[frozenset[int]]:
    closed: set[frozenset[int]] = set()
    stack = list(family)
    while stack:
        s = stack.pop()
        if s in closed:
            continue
        closed.add(s)
        stack.extend(s - {e} for e in s)
    return closed


def check_axioms(spec: ExplicitSpec) -> bool:
    """True iff the listed family contains the empty set, is closed under
    subsets, and satisfies the exchange property."""
    if len(spec.ground) > EXPLICIT_GROUND_CAP:
        raise MatroidError(f"check_axioms is capped at {EXPLICIT_GROUND_CAP} ground elements")
    ground = set(spec.ground)
    family = {frozenset(s) for s in spec.independent}
    if frozenset() not in family:
        return False
    for s in family:
        if not s <= ground:
            return False
        if any(s - {e} not in family for e in s):
            return False
    # with downward closure, exchange between sizes r and r+1 implies the rest
    by_size: dict[int, list[int]] = {}
    for s in family:
        by_size.setdefault(len(s), []).append(to_mask(s))
    masks = set(by_size_mask for group in by_size.values() for by_size_mask in group)
    ground_mask = to_mask(ground)
    for r, smaller in by_size.items():
        larger = by_size.get(r + 1, [])
        if not larger:
            continue
        for a in smaller:
            ext = 0
            free = ground_mask & ~a
            for e in from_mask(free):
                if (a | (1 << e)) in masks:
                    ext |= 1 << e
            for b in larger:
                if not (b & ~a & ext):
                    return False
    return True
