"""Precision-hardened accumulation: error-free transforms, double-double
values, Kahan compensation, and the accumulator policies the kernels accept.

Policy naming is two letters, inner-product precision then partial-sum
precision: DD is plain double for both, DQ keeps the partial sum in
double-double, QQ keeps both in double-double, KAHAN is plain double with
compensated accumulation of each product into the partial sum. Whatever the
policy, the final cross-worker reduction always runs in double-double.

No hardware fma is available on this interpreter, so error-free products go
through Dekker splitting.
"""

from __future__ import annotations

import math
from enum import Enum
from fractions import Fraction
from typing import NamedTuple, Union

_SPLITTER = 134217729.0  # 2**27 + 1, Dekker split constant for binary64


class DoubleDouble(NamedTuple):
    """Unevaluated sum hi + lo with |lo| <= ulp(hi)/2 (hi == fl(hi + lo))."""

    hi: float
    lo: float

    @classmethod
    def from_float(cls, x: float) -> "DoubleDouble":
        return cls(float(x), 0.0)

    def to_float(self) -> float:
        return self.hi

    def to_fraction(self) -> Fraction:
        return Fraction(self.hi) + Fraction(self.lo)


class KahanAccumulator(NamedTuple):
    """Compensated running sum; logical value is sum + compensation."""

    sum: float
    compensation: float

    def to_double_double(self) -> DoubleDouble:
        s, e = two_sum(self.sum, self.compensation)
        return DoubleDouble(s, e)


def two_sum(a: float, b: float) -> tuple[float, float]:
    """Error-free sum: returns (s, e) with s = fl(a+b) and s + e = a + b exactly."""
    s = a + b
    bb = s - a
    e = (a - (s - bb)) + (b - bb)
    return s, e


def quick_two_sum(a: float, b: float) -> tuple[float, float]:
    """two_sum under the promise |a| >= |b| (or a == 0)."""
    s = a + b
    e = b - (s - a)
    return s, e


def split(a: float) -> tuple[float, float]:
    """Dekker split of a into hi + lo halves with 26-bit significands."""
    t = _SPLITTER * a
    hi = t - (t - a)
    lo = a - hi
    return hi, lo


def two_prod(a: float, b: float) -> tuple[float, float]:
    """Error-free product: (p, e) with p = fl(a*b) and p + e = a*b exactly."""
    p = a * b
    ahi, alo = split(a)
    bhi, blo = split(b)
    e = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo
    return p, e


def dd_add(a: DoubleDouble, b: DoubleDouble) -> DoubleDouble:
    """Double-double addition, robust variant.

    The cheap single-two_sum folding fails the 2^-104 relative bound under
    near-cancellation, so both component pairs get an error-free sum.
    """
    s1, s2 = two_sum(a.hi, b.hi)
    t1, t2 = two_sum(a.lo, b.lo)
    s2 += t1
    s1, s2 = quick_two_sum(s1, s2)
    s2 += t2
    s1, s2 = quick_two_sum(s1, s2)
    return DoubleDouble(s1, s2)


def dd_add_double(a: DoubleDouble, b: float) -> DoubleDouble:
    """Add a plain double into a double-double (the 10-flop sequence)."""
    s, e = two_sum(a.hi, b)
    e += a.lo
    s, e = quick_two_sum(s, e)
    return DoubleDouble(s, e)


def dd_mul(a: DoubleDouble, b: DoubleDouble) -> DoubleDouble:
    """Double-double product, cheap variant (single cross-term folding)."""
    p, e = two_prod(a.hi, b.hi)
    e += a.hi * b.lo + a.lo * b.hi
    p, e = quick_two_sum(p, e)
    return DoubleDouble(p, e)


def dd_mul_double(a: DoubleDouble, b: float) -> DoubleDouble:
    """Multiply a double-double by a plain double."""
    p, e = two_prod(a.hi, b)
    e += a.lo * b
    p, e = quick_two_sum(p, e)
    return DoubleDouble(p, e)


def dd_neg(a: DoubleDouble) -> DoubleDouble:
    return DoubleDouble(-a.hi, -a.lo)


def kahan_add(acc: KahanAccumulator, term: float) -> KahanAccumulator:
    """One compensated-summation step.

    Sign convention: the compensation carries the low-order bits that the
    running sum dropped, so the logical value is always sum + compensation.
    """
    y = term + acc.compensation
    t = acc.sum + y
    c = (acc.sum - t) + y
    return KahanAccumulator(t, c)


class AccumulatorPolicy(Enum):
    """Inner-product / partial-sum precision pairing used by the kernels."""

    DD = "dd"
    KAHAN = "kahan"
    DQ = "dq"
    QQ = "qq"

    @classmethod
    def parse(cls, name: str) -> "AccumulatorPolicy":
        try:
            return cls(name.lower())
        except ValueError:
            raise ValueError(
                f"unknown policy {name!r}; expected one of "
                + ", ".join(p.value for p in cls)
            ) from None

    @property
    def inner_precision(self) -> str:
        return "double-double" if self is AccumulatorPolicy.QQ else "double"

    @property
    def partial_precision(self) -> str:
        if self in (AccumulatorPolicy.DQ, AccumulatorPolicy.QQ):
            return "double-double"
        return "double (compensated)" if self is AccumulatorPolicy.KAHAN else "double"


ExactLike = Union[int, float, complex, Fraction]


class ErrorMeasure(NamedTuple):
    """Relative error, or absolute error flagged when the exact value is zero."""

    value: float
    absolute_fallback: bool


def relative_error(computed: ExactLike, exact: ExactLike) -> ErrorMeasure:
    """|computed - exact| / |exact|, computed exactly where the types allow.

    For real inputs the difference and the ratio are evaluated in rational
    arithmetic (floats embed exactly), so the measure itself adds no rounding
    beyond the final float conversion. Complex values fall back to modulus
    arithmetic in floating point. exact == 0 reports the absolute error with
    a flag instead of dividing by zero.
    """
    if isinstance(computed, complex) or isinstance(exact, complex):
        diff = abs(complex(computed) - complex(exact))
        mag = abs(complex(exact))
        if mag == 0.0:
            return ErrorMeasure(diff, True)
        return ErrorMeasure(diff / mag, False)
    c = Fraction(computed)
    e = Fraction(exact)
    if e == 0:
        return ErrorMeasure(float(abs(c)), True)
    return ErrorMeasure(float(abs(c - e) / abs(e)), False)


def reference_permanent(n: int, a: ExactLike) -> ExactLike:
    """Exact permanent of the n x n matrix with every entry equal to a: n! * a^n.

    Float fills are converted to their exact dyadic rationals first, so the
    result is the true permanent of the matrix a kernel actually sees.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    fact = math.factorial(n)
    if isinstance(a, int):
        return fact * a**n
    if isinstance(a, complex):
        return fact * a**n
    return fact * Fraction(a) ** n


# Per-operation relative rounding bound for binary64 (half an ulp).
EPS_DOUBLE = 2.0**-53
