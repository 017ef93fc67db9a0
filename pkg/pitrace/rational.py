"""Canonical exact-rational strings: "p/q", or "p" when q == 1."""

import re
from fractions import Fraction
from typing import Union

from .errors import FormatError

_RATIONAL_RE = re.compile(r"^-?\d+(/\d+)?$")


def format_rational(value: Union[Fraction, int]) -> str:
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def parse_rational(text: Union[str, int]) -> Fraction:
    """Parse a rational string. Decimal and float notations are rejected."""
    if isinstance(text, bool):
        raise FormatError(f"Not a rational: {text!r}")
    if isinstance(text, int):
        return Fraction(text)
    if not isinstance(text, str) or not _RATIONAL_RE.match(text.strip()):
        raise FormatError(f"Not a rational: {text!r}")
    try:
        return Fraction(text.strip())
    except ZeroDivisionError:
        raise FormatError(f"Zero denominator in {text!r}")
