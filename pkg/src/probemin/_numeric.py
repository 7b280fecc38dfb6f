"""Small numeric helpers shared across modules."""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational
from typing import Union

Number = Union[int, float, Fraction]


def ceil_log2(n: int) -> int:
    """Exact ceil(log2 n) for positive integers."""
    if n < 1:
        raise ValueError(f"ceil_log2 needs n >= 1, got {n}")
    return (n - 1).bit_length()


def floor_log2(n: int) -> int:
    """Exact floor(log2 n) for positive integers."""
    if n < 1:
        raise ValueError(f"floor_log2 needs n >= 1, got {n}")
    return n.bit_length() - 1


def to_number(value, exact: bool = True) -> Number:
    """Coerce a JSON scalar (int, float, Fraction, "a/b" string) to a number.

    With ``exact`` the result is an int or Fraction; decimal strings and
    floats are read through their decimal representation.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, str):
        q = Fraction(value.strip())
        return q if exact else float(q)
    if isinstance(value, int):
        return value if exact else float(value)
    if isinstance(value, Fraction):
        return value if exact else float(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite number {value!r}")
        return Fraction(repr(value)) if exact else value
    raise TypeError(f"cannot interpret {value!r} as a number")


def is_exact(value) -> bool:
    return isinstance(value, Rational)


def number_repr(value: Number) -> str:
    """Render a number the way instance files and reports write it."""
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return str(value.numerator)
        return f"{value.numerator}/{value.denominator}"
    if isinstance(value, int):
        return str(value)
    return repr(float(value))


def number_json(value: Number):
    """JSON payload for a value: exact string plus a float rendering."""
    if value is None:
        return None
    if value == math.inf:
        return {"exact": "inf", "float": "inf"}
    return {"exact": number_repr(value), "float": float(value)}


def log2_neg(q: Number) -> float:
    """-log2(q) with -log2(0) = +inf."""
    if q <= 0:
        return math.inf
    if q >= 1:
        return 0.0
    if isinstance(q, Fraction):
        # log2 of numerator/denominator separately keeps precision for tiny q
        return math.log2(q.denominator) - math.log2(q.numerator)
    return -math.log2(q)
