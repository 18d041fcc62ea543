"""Exact rational parsing/formatting for the JSON and CLI surfaces.

All market arithmetic uses :class:`fractions.Fraction`.  On the wire,
rationals are strings of the form ``"num/den"`` or ``"int"`` so that
round-trips are bit-exact.  Decimal notation is rejected on purpose:
thresholds such as 1/11 have no finite decimal representation and silent
rounding would corrupt boundary comparisons.
"""

from __future__ import annotations

import re
from fractions import Fraction

_RATIONAL_RE = re.compile(r"^(-?\d+)(?:/([1-9]\d*))?$")


class RationalFormatError(ValueError):
    """Raised when a string is not an exact `p/q` or integer rational."""


def parse_rational(text: str) -> Fraction:
    """Parse ``"p/q"`` or ``"n"`` into a Fraction. Rejects decimals."""
    if not isinstance(text, str):
        raise RationalFormatError(f"expected rational string, got {text!r}")
    m = _RATIONAL_RE.match(text.strip())
    if m is None:
        raise RationalFormatError(
            f"not an exact rational (use 'p/q' or an integer): {text!r}"
        )
    num = int(m.group(1))
    den = int(m.group(2)) if m.group(2) else 1
    return Fraction(num, den)


def format_rational(value: Fraction) -> str:
    """Format a Fraction as ``"p/q"`` (or ``"n"`` for integers)."""
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"
