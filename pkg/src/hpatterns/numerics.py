"""Exact rationals, dyadics and rational intervals with certified enclosures.

Every endpoint is an exact ``Fraction``.  The only operations that introduce
slack are the root, logarithm, exponential and inverse enclosures, and each of
them takes an explicit tolerance.  Slack is always outward.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Union

from .errors import BracketError, CertificationError, DomainError

Rational = Fraction
RationalLike = Union[int, Fraction, str]

#: hard cap on iterations of any bisection or Newton loop
MAX_STEPS = 10**6


def to_rational(x: RationalLike) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return parse_rational(x)
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


_RATIONAL_RE = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*(\d+))?\s*$")


def parse_rational(text: str) -> Fraction:
    """Parse ``"p"`` or ``"p/q"``; floats are rejected on purpose."""
    m = _RATIONAL_RE.match(text)
    if not m:
        raise ValueError(f"not a rational literal: {text!r}")
    num = int(m.group(1))
    den = int(m.group(2)) if m.group(2) else 1
    if den == 0:
        raise ValueError("zero denominator")
    return Fraction(num, den)


def format_rational(x: Fraction) -> str:
    """Serialize as ``"numerator/denominator"`` (denominator always present)."""
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def ceil_log2_inverse(tol: Fraction) -> int:
    """Smallest k >= 0 with 2**-k <= tol."""
    tol = Fraction(tol)
    if tol <= 0:
        raise DomainError("tolerance must be positive")
    if tol >= 1:
        return 0
    k = max(0, tol.denominator.bit_length() - tol.numerator.bit_length() - 1)
    while (tol.numerator << k) < tol.denominator:
        k += 1
    return k


# --------------------------------------------------------------------------
# Dyadics


@dataclass(frozen=True)
class Dyadic:
    """mantissa * 2**exponent, canonical with an odd (or zero) mantissa."""

    mantissa: int
    exponent: int

    def __post_init__(self):
        m, e = self.mantissa, self.exponent
        if m == 0:
            e = 0
        else:
            tz = (m & -m).bit_length() - 1
            if tz:
                m >>= tz
                e += tz
        object.__setattr__(self, "mantissa", m)
        object.__setattr__(self, "exponent", e)

    @classmethod
    def pow2(cls, e: int) -> "Dyadic":
        return cls(1, e)

    @classmethod
    def from_fraction(cls, x: Fraction) -> "Dyadic":
        x = Fraction(x)
        d = x.denominator
        if d & (d - 1):
            raise DomainError(f"{x} is not dyadic")
        return cls(x.numerator, -(d.bit_length() - 1))

    def to_fraction(self) -> Fraction:
        if self.exponent >= 0:
            return Fraction(self.mantissa << self.exponent)
        return Fraction(self.mantissa, 1 << -self.exponent)

    def __str__(self) -> str:
        return f"{self.mantissa}*2^{self.exponent}"

    @classmethod
    def parse(cls, text: str) -> "Dyadic":
        m = re.match(r"^\s*([+-]?\d+)\s*\*\s*2\s*\^\s*([+-]?\d+)\s*$", text)
        if not m:
            raise ValueError(f"not a dyadic literal: {text!r}")
        return cls(int(m.group(1)), int(m.group(2)))

    def __lt__(self, other: "Dyadic") -> bool:
        return _dyadic_cmp(self, other) < 0

    def __le__(self, other: "Dyadic") -> bool:
        return _dyadic_cmp(self, other) <= 0


def _dyadic_cmp(a: Dyadic, b: Dyadic) -> int:
    # compares without materializing huge powers of two
    sa = (a.mantissa > 0) - (a.mantissa < 0)
    sb = (b.mantissa > 0) - (b.mantissa < 0)
    if sa != sb or sa == 0:
        return (sa > sb) - (sa < sb)
    top_a = a.exponent + abs(a.mantissa).bit_length()
    top_b = b.exponent + abs(b.mantissa).bit_length()
    if top_a != top_b:
        return sa if top_a > top_b else -sa
    e = min(a.exponent, b.exponent)
    x = a.mantissa << (a.exponent - e)
    y = b.mantissa << (b.exponent - e)
    return (x > y) - (x < y)


# --------------------------------------------------------------------------
# Intervals


@dataclass(frozen=True)
class RationalInterval:
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        lo, hi = to_rational(self.lo), to_rational(self.hi)
        if lo > hi:
            raise DomainError(f"empty interval [{lo}, {hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def point(cls, x: RationalLike) -> "RationalInterval":
        x = to_rational(x)
        return cls(x, x)

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains(self, x) -> bool:
        if isinstance(x, RationalInterval):
            return self.lo <= x.lo and x.hi <= self.hi
        return self.lo <= x <= self.hi

    def strictly_contains(self, other: "RationalInterval") -> bool:
        return self.lo < other.lo and other.hi < self.hi

    def intersects(self, other: "RationalInterval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def to_json(self) -> list:
        return [format_rational(self.lo), format_rational(self.hi)]

    @classmethod
    def from_json(cls, data) -> "RationalInterval":
        lo, hi = data
        return cls(parse_rational(lo), parse_rational(hi))

    def __str__(self) -> str:
        return f"[{self.lo}, {self.hi}]"


Interval = RationalInterval


def iv_add(a: RationalInterval, b: RationalInterval) -> RationalInterval:
    return RationalInterval(a.lo + b.lo, a.hi + b.hi)


def iv_sub(a: RationalInterval, b: RationalInterval) -> RationalInterval:
    return RationalInterval(a.lo - b.hi, a.hi - b.lo)


def iv_neg(a: RationalInterval) -> RationalInterval:
    return RationalInterval(-a.hi, -a.lo)


def iv_mul(a: RationalInterval, b: RationalInterval) -> RationalInterval:
    products = (a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi)
    return RationalInterval(min(products), max(products))


def iv_div(a: RationalInterval, b: RationalInterval) -> RationalInterval:
    if b.lo <= 0 <= b.hi:
        raise DomainError(f"division by an interval containing zero: {b}")
    return iv_mul(a, RationalInterval(1 / b.hi, 1 / b.lo))


def iv_scale(a: RationalInterval, c: Fraction) -> RationalInterval:
    c = to_rational(c)
    if c >= 0:
        return RationalInterval(a.lo * c, a.hi * c)
    return RationalInterval(a.hi * c, a.lo * c)


def iv_pow(a: RationalInterval, k: int) -> RationalInterval:
    """Integer power k >= 0, tight for even k across zero."""
    if k < 0:
        raise DomainError("negative exponent")
    if k == 0:
        return RationalInterval(1, 1)
    lo, hi = a.lo ** k, a.hi ** k
    if k % 2:
        return RationalInterval(lo, hi)
    if a.lo >= 0:
        return RationalInterval(lo, hi)
    if a.hi <= 0:
        return RationalInterval(hi, lo)
    return RationalInterval(0, max(lo, hi))


def iv_hull(*ivs: RationalInterval) -> RationalInterval:
    return RationalInterval(min(i.lo for i in ivs), max(i.hi for i in ivs))


def round_out(a: RationalInterval, bits: int) -> RationalInterval:
    """Widen to the dyadic grid 2**-bits (floor lo, ceil hi)."""
    scale = 1 << bits
    lo = (a.lo.numerator * scale) // a.lo.denominator
    hi = -((-a.hi.numerator * scale) // a.hi.denominator)
    return RationalInterval(Fraction(lo, scale), Fraction(hi, scale))


# --------------------------------------------------------------------------
# Roots


def iroot(y: int, n: int) -> int:
    """floor(y ** (1/n)) for an integer y >= 0, by integer Newton iteration."""
    if y < 0 or n < 1:
        raise DomainError("iroot needs y >= 0 and n >= 1")
    if y < 2 or n == 1:
        return y
    x = 1 << -(-y.bit_length() // n)  # an upper bound for the root
    for _ in range(MAX_STEPS):
        t = ((n - 1) * x + y // x ** (n - 1)) // n
        if t >= x:
            break
        x = t
    else:
        raise CertificationError("integer root iteration limit exceeded")
    if not (x ** n <= y < (x + 1) ** n):
        raise CertificationError("integer root failed its bracket check")
    return x


def _root_lower(x: Fraction, n: int, k: int) -> Fraction:
    y = (x.numerator << (k * n)) // x.denominator
    return Fraction(iroot(y, n), 1 << k)


def _root_upper(x: Fraction, n: int, k: int) -> Fraction:
    num = x.numerator << (k * n)
    y = num // x.denominator
    r = iroot(y, n)
    if r ** n * x.denominator != num:
        r += 1
    return Fraction(r, 1 << k)


def iv_nth_root(a: RationalInterval, n: int, tol: Fraction) -> RationalInterval:
    """Enclosure of {x**(1/n) : x in a} on the dyadic grid finer than tol/2.

    Endpoints are certified by exact integer bracketing r**n <= Y < (r+1)**n;
    perfect powers come back exact.
    """
    if n < 1:
        raise DomainError("root order must be >= 1")
    if a.lo < 0:
        raise DomainError(f"nth root of an interval with negative part: {a}")
    if n == 1:
        return a
    k = ceil_log2_inverse(Fraction(tol) / 2)
    return RationalInterval(_root_lower(a.lo, n, k), _root_upper(a.hi, n, k))


# --------------------------------------------------------------------------
# Logarithm and exponential enclosures (point arguments)


def _atanh_series(a: int, b: int, prec: int):
    """Integer bounds (lo, hi) on 2**prec * atanh(a/b) for 0 <= a/b <= 1/3."""
    if a == 0:
        return 0, 0
    scale = 1 << prec
    lo_pow = (a * scale) // b
    hi_pow = -((-a * scale) // b)
    a2, b2 = a * a, b * b
    lo = hi = 0
    j = 0
    while hi_pow > 1:
        if j > MAX_STEPS:
            raise CertificationError("atanh series did not converge")
        lo += lo_pow // (2 * j + 1)
        hi += -(-hi_pow // (2 * j + 1))
        lo_pow = (lo_pow * a2) // b2
        hi_pow = -((-hi_pow * a2) // b2)
        j += 1
    # remaining tail <= hi_pow * (1 + 1/9 + ...) <= 2 units
    return lo, hi + 2


_LN2_CACHE: dict = {}


def _ln2_bounds(prec: int):
    if prec not in _LN2_CACHE:
        lo, hi = _atanh_series(1, 3, prec)
        _LN2_CACHE[prec] = (2 * lo, 2 * hi)
    return _LN2_CACHE[prec]


def ln2_enclosure(tol: Fraction = Fraction(1, 1 << 64)) -> RationalInterval:
    prec = ceil_log2_inverse(Fraction(tol)) + 4
    lo, hi = _ln2_bounds(prec)
    return RationalInterval(Fraction(lo, 1 << prec), Fraction(hi, 1 << prec))


def iv_log(x: RationalLike, tol: Fraction = Fraction(1, 1 << 64)) -> RationalInterval:
    """Enclosure of ln(x) for a rational x > 0 with width <= tol."""
    x = to_rational(x)
    if x <= 0:
        raise DomainError(f"logarithm of non-positive {x}")
    k = x.numerator.bit_length() - x.denominator.bit_length()
    r = x / 2 ** k if k >= 0 else x * 2 ** -k
    if r > Fraction(4, 3):
        k += 1
        r /= 2
    elif r < Fraction(2, 3):
        k -= 1
        r *= 2
    z = (r - 1) / (r + 1)
    prec = ceil_log2_inverse(Fraction(tol)) + abs(k).bit_length() + 6
    l2lo, l2hi = _ln2_bounds(prec)
    slo, shi = _atanh_series(abs(z.numerator), z.denominator, prec)
    if z < 0:
        slo, shi = -shi, -slo
    if k >= 0:
        lo, hi = k * l2lo + 2 * slo, k * l2hi + 2 * shi
    else:
        lo, hi = k * l2hi + 2 * slo, k * l2lo + 2 * shi
    return RationalInterval(Fraction(lo, 1 << prec), Fraction(hi, 1 << prec))


def iv_log2(x: RationalLike, tol: Fraction = Fraction(1, 1 << 64)) -> RationalInterval:
    """Enclosure of log2(x); exact when x is a power of two."""
    x = to_rational(x)
    if x <= 0:
        raise DomainError(f"logarithm of non-positive {x}")
    num, den = x.numerator, x.denominator
    if num & (num - 1) == 0 and den & (den - 1) == 0:
        return RationalInterval.point(num.bit_length() - den.bit_length())
    tol = Fraction(tol)
    ln = iv_log(x, tol / 4)
    l2 = ln2_enclosure(tol / 64)
    return iv_div(ln, l2)


def iv_exp(x: RationalLike, tol: Fraction = Fraction(1, 1 << 64)) -> RationalInterval:
    """Enclosure of exp(x) for rational x (moderate magnitude) with width <= tol."""
    x = to_rational(x)
    neg = x < 0
    y = -x if neg else x
    s = 0
    while y > Fraction(1, 2):
        y /= 2
        s += 1
    # result magnitude can reach e**|x|; keep relative precision
    mag_bits = int(abs(x)) * 2 + 2
    prec = ceil_log2_inverse(Fraction(tol)) + s + mag_bits + 16
    scale = 1 << prec
    a, b = y.numerator, y.denominator
    term_lo = term_hi = scale
    lo = hi = 0
    j = 0
    while term_hi > 1:
        lo += term_lo
        hi += term_hi
        j += 1
        if j > MAX_STEPS:
            raise CertificationError("exp series did not converge")
        term_lo = (term_lo * a) // (b * j)
        term_hi = -((-term_hi * a) // (b * j))
    # terms shrink by at least half from here on
    hi += 2 * term_hi
    enc = RationalInterval(Fraction(lo, scale), Fraction(hi, scale))
    for _ in range(s):
        enc = round_out(iv_mul(enc, enc), prec)
    if neg:
        enc = round_out(RationalInterval(1 / enc.hi, 1 / enc.lo), prec)
    return enc


# --------------------------------------------------------------------------
# Monotone inverse


PointEnclosure = Callable[[Fraction], RationalInterval]


def _bracket(f: PointEnclosure, target: Fraction, a: Fraction, b: Fraction, tol: Fraction):
    """Shrink [a, b] with f(a) <= target <= f(b) (f increasing) to width <= tol."""
    steps = 0
    while b - a > tol:
        steps += 1
        if steps > MAX_STEPS:
            raise CertificationError("bisection step limit exceeded")
        mid = (a + b) / 2
        v = f(mid)
        if v.hi <= target:
            if v.lo >= target:
                return mid, mid
            a = mid
        elif v.lo >= target:
            b = mid
        else:
            raise CertificationError(
                f"enclosure {v} too wide to compare against {target}; raise evaluation precision"
            )
    return a, b


def _prepare(f, y, search, increasing):
    if not increasing:
        g = f
        f = lambda x: iv_neg(g(x))  # noqa: E731
        y = iv_neg(y)
    flo, fhi = f(search.lo), f(search.hi)
    if not (flo.hi <= y.lo and fhi.lo >= y.hi):
        raise BracketError(f"{y} is not bracketed by f over {search}")
    return f, y


def monotone_inverse(
    f: PointEnclosure,
    y: RationalInterval,
    search: RationalInterval,
    tol: Fraction,
    increasing: bool = True,
) -> RationalInterval:
    """Outer enclosure X of the preimage of y under a strictly monotone f.

    ``f`` maps a rational point to an enclosure of its image.  The result
    satisfies X >= exact preimage and f(X) >= y, with each endpoint within
    tol/2 of the exact one.
    """
    tol = Fraction(tol)
    f, y = _prepare(f, y, search, increasing)
    a, _ = _bracket(f, y.lo, search.lo, search.hi, tol / 2)
    _, d = _bracket(f, y.hi, search.lo, search.hi, tol / 2)
    return RationalInterval(a, d)


def monotone_inverse_inner(
    f: PointEnclosure,
    y: RationalInterval,
    search: RationalInterval,
    tol: Fraction,
    increasing: bool = True,
) -> RationalInterval:
    """Inner enclosure: every point of the result maps into y.

    Each endpoint lies within tol/2 of the exact preimage endpoint.
    """
    tol = Fraction(tol)
    f, y = _prepare(f, y, search, increasing)
    _, b = _bracket(f, y.lo, search.lo, search.hi, tol / 2)
    c, _ = _bracket(f, y.hi, search.lo, search.hi, tol / 2)
    if b > c:
        raise CertificationError("inner preimage enclosure is empty at this tolerance")
    return RationalInterval(b, c)
