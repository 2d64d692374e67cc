"""Exact square roots and low-degree root solving over the rationals."""

from __future__ import annotations

from fractions import Fraction
import math
from math import isqrt

from .errors import IrrationalRootError


def rational_sqrt(q: Fraction) -> Fraction | None:
    """The exact square root of ``q`` when it is rational, else None."""
    if q < 0:
        return None
    num, den = q.numerator, q.denominator
    rn, rd = isqrt(num), isqrt(den)
    if rn * rn == num and rd * rd == den:
        return Fraction(rn, rd)
    return None


def roots_in(c2: Fraction, c1: Fraction, c0: Fraction, lo: Fraction, hi: Fraction):
    """Roots of ``c2 x^2 + c1 x + c0`` inside ``[lo, hi]``, ascending.

    Returns ``None`` when the polynomial vanishes identically.  Raises
    :class:`IrrationalRootError` if a root in range is irrational.
    """
    if c2 == 0:
        if c1 == 0:
            return None if c0 == 0 else []
        x = -c0 / c1
        return [x] if lo <= x <= hi else []
    disc = c1 * c1 - 4 * c2 * c0
    if disc < 0:
        return []
    r = rational_sqrt(disc)
    if r is None:
        # only complain when an irrational root actually lands in range
        s = math.sqrt(float(disc))
        approx = sorted(((-float(c1) - s) / (2 * float(c2)), (-float(c1) + s) / (2 * float(c2))))
        if any(float(lo) - 1e-12 <= x <= float(hi) + 1e-12 for x in approx):
            raise IrrationalRootError(
                f"root of {c2}x^2 + {c1}x + {c0} in [{lo}, {hi}] is irrational"
            )
        return []
    xs = sorted({(-c1 - r) / (2 * c2), (-c1 + r) / (2 * c2)})
    return [x for x in xs if lo <= x <= hi]
