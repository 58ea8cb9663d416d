"""Scalar backends and conversions between them.

Two backends are supported throughout the package:

* ``exact``  -- arbitrary-precision rationals (``fractions.Fraction``),
  always in canonical reduced form, closed under +, -, *, / by nonzero.
* ``f64``    -- IEEE-754 binary64.  NaN and infinities are rejected at
  every module boundary.

Every finite double is itself a rational number p / 2^e, so conversion
from ``f64`` to ``exact`` is performed bit-exactly and never through a
decimal string.  A separate decimal parser exists for human-authored
input (tolerances, thresholds, file entries).
"""

import math
import re
from dataclasses import dataclass
from fractions import Fraction

from .errors import BudgetExceeded, FormatError, InvalidScalar, ScalarOverflow

# Public alias: the exact scalar type used across the package.
ExactRational = Fraction

EXACT = "exact"
F64 = "f64"

ZERO = Fraction(0)
ONE = Fraction(1)

_RATIONAL_RE = re.compile(r"^[+-]?[0-9]+(?:/[0-9]+)?$")


def rationalize(x):
    """Return the exact rational value of a finite double.

    The result is the stored binary64 datum as a fraction with a power
    of two denominator, in canonical form.  No decimal reinterpretation
    takes place: rationalize(0.1) is 3602879701896397 / 2**55, not 1/10.
    """
    x = float(x)
    if not math.isfinite(x):
        raise InvalidScalar("cannot rationalize %r" % x)
    return Fraction(x)


def demote(q):
    """Round an exact rational to the nearest binary64 (ties to even)."""
    try:
        return float(Fraction(q))
    except OverflowError:
        raise ScalarOverflow("%s does not fit in a double" % format_rational(q)) from None


def snap_zero(q, threshold):
    """Return 0/1 when |q| <= threshold, otherwise q unchanged."""
    if threshold < 0:
        raise ValueError("snap threshold must be nonnegative")
    if abs(q) <= threshold:
        return ZERO
    return q


def bit_size(q):
    """Larger of the numerator and denominator bit lengths."""
    return max(q.numerator.bit_length(), q.denominator.bit_length())


@dataclass(frozen=True)
class BitBudget:
    """Abort guard for runaway rational growth during a solver run.

    Exact arithmetic can grow numerators and denominators without bound;
    when any scalar in the solver state exceeds max_bits the run aborts
    with BudgetExceeded rather than thrash or return wrong results.
    """

    max_bits: int = 1_000_000

    def __post_init__(self):
        if self.max_bits < 64:
            raise ValueError("bit budget must be at least 64 bits")

    def check(self, q):
        if bit_size(q) > self.max_bits:
            raise BudgetExceeded(
                "scalar grew to %d bits (budget %d)" % (bit_size(q), self.max_bits)
            )


def parse_rational(text):
    """Parse a rational literal: optional sign, integer, optional /positive-integer.

    This is the strict grammar used by matrix and vector files
    (e.g. "-36/25", "7").  Decimal notation is rejected here.
    """
    text = text.strip()
    if not _RATIONAL_RE.match(text):
        raise FormatError("not a rational literal: %r" % text)
    if "/" in text:
        num, den = text.split("/")
        if int(den) == 0:
            raise FormatError("zero denominator in %r" % text)
        return Fraction(int(num), int(den))
    return Fraction(int(text))


def parse_decimal(text):
    """Parse a human-authored number into an exact rational.

    Accepts rational literals plus decimal and scientific notation;
    the decimal forms are read exactly ("1e-10" -> 1/10**10,
    "0.1" -> 1/10), so tolerances keep their intended value.
    """
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError):
        raise FormatError("not a number: %r" % text) from None


def format_rational(q):
    """Serialize an exact rational as num/den (denominator always shown)."""
    return "%d/%d" % (q.numerator, q.denominator)


def format_double(x):
    """Shortest round-trip decimal form of a double."""
    return repr(float(x))
