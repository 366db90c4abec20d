"""Exact money in half currency units.

Every price the repurchase mechanism produces is a midpoint ``(a + b) / 2`` of
two integer bids, possibly minus a half-unit discount, so counting half units
with plain ``int`` keeps all arithmetic exact.  Utilities are stored the same
way: ``units * price_in_half_units``.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Union

HalfUnits = int

HALF = 1  # one half currency unit


def from_units(amount: int) -> HalfUnits:
    return 2 * amount


def to_fraction(amount: Union[HalfUnits, Fraction]) -> Fraction:
    """Convert a half-unit quantity to currency units."""
    return Fraction(amount) / 2


def to_pair(amount: Union[HalfUnits, Fraction]) -> list[int]:
    """``[numerator, denominator]`` in currency units, for reports."""
    f = to_fraction(amount)
    return [f.numerator, f.denominator]


def fmt(amount: Union[HalfUnits, Fraction]) -> str:
    f = to_fraction(amount)
    if f.denominator == 1:
        return str(f.numerator)
    if f.denominator == 2:
        whole = Fraction(f.numerator, 2)
        return f"{float(whole):.1f}"
    return f"{f.numerator}/{f.denominator}"
