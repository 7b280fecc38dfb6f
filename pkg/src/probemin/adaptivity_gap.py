"""Three-element instance whose adaptivity gap grows like N/2.

Element 0 is N^2 w.p. 1/N^2 and 1 otherwise, element 1 is N^2 w.p. 1/N
and 0 otherwise, element 2 is N surely; any two may be selected and the
objective is the minimum weight.  The adaptive policy probes 0 first and
then 1 if element 0 came out at 1, else 2.
"""

from __future__ import annotations

from fractions import Fraction

from .model import Cardinality, Element, Instance, WeightDistribution
from .objective import MinElement
from .policy import DecisionPolicy, Policy


def gap_instance(N: int) -> Instance:
    if N < 2:
        raise ValueError("the gap example needs N >= 2")
    big = N * N
    elements = (
        Element(0, 1, WeightDistribution.of([(1, 1 - Fraction(1, big)), (big, Fraction(1, big))])),
        Element(1, 1, WeightDistribution.of([(0, 1 - Fraction(1, N)), (big, Fraction(1, N))])),
        Element(2, 1, WeightDistribution.point(N)),
    )
    return Instance(elements=elements, m=big, constraint=Cardinality(2), objective=MinElement())


def _decide(instance: Instance, history: tuple) -> int | None:
    if not history:
        return 0
    if len(history) == 1:
        return 1 if history[0][1] == 1 else 2
    return None


def gap_policy() -> Policy:
    return DecisionPolicy(_decide, name="gap-adaptive")


def gap_adaptive_value(N: int) -> Fraction:
    """Closed form of the adaptive policy's expected minimum."""
    return (1 - Fraction(1, N * N)) * Fraction(1, N) + Fraction(1, N * N) * N
