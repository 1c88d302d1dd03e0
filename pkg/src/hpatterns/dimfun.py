"""Dimension functions h and their certified evaluation.

Three families are supported:

* ``pow:a``        h(x) = x**a
* ``loginv``       h(x) = 1/ln(1/x) near 0
* ``powlog:a:b``   h(x) = x**a * ln(1/x)**b near 0

The logarithmic families are only prescribed near 0.  Past the breakpoint
c = exp(-kappa) they continue linearly with slope 1 from h(c), which keeps
them non-decreasing and continuous on [0, inf).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .errors import ConfigError, DomainError
from .numerics import (
    RationalInterval,
    iv_div,
    iv_exp,
    iv_hull,
    iv_log,
    iv_log2,
    iv_mul,
    iv_nth_root,
    iv_pow,
    iv_scale,
    iv_sub,
    iv_add,
    parse_rational,
)

POW = "pow"
LOGINV = "loginv"
POWLOG = "powlog"


@dataclass(frozen=True)
class DimensionFunction:
    kind: str
    alpha: Fraction = Fraction(0)
    beta: int = 0

    def __post_init__(self):
        if self.kind not in (POW, LOGINV, POWLOG):
            raise ConfigError(f"unknown dimension function kind {self.kind!r}")
        object.__setattr__(self, "alpha", Fraction(self.alpha))
        if self.kind == LOGINV:
            object.__setattr__(self, "alpha", Fraction(0))
            object.__setattr__(self, "beta", -1)
        elif self.alpha <= 0:
            raise ConfigError("exponent must be a positive rational")
        if self.kind == POW:
            object.__setattr__(self, "beta", 0)

    @classmethod
    def power(cls, alpha) -> "DimensionFunction":
        return cls(POW, Fraction(alpha))

    @classmethod
    def log_inverse(cls) -> "DimensionFunction":
        return cls(LOGINV)

    @classmethod
    def power_log(cls, alpha, beta: int) -> "DimensionFunction":
        return cls(POWLOG, Fraction(alpha), int(beta))

    @property
    def label(self) -> str:
        if self.kind == POW:
            return f"pow:{_fmt(self.alpha)}"
        if self.kind == LOGINV:
            return "loginv"
        return f"powlog:{_fmt(self.alpha)}:{self.beta}"

    def __str__(self) -> str:
        return self.label

    @property
    def kappa(self) -> Optional[Fraction]:
        """Breakpoint exponent: the log formula holds on (0, exp(-kappa)]."""
        if self.kind == POW:
            return None
        if self.kind == POWLOG and self.beta > 0:
            return max(Fraction(1), self.beta / self.alpha)
        return Fraction(1)


def _fmt(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


_SPEC_RE = re.compile(r"^(pow):([^:]+)$|^(loginv)$|^(powlog):([^:]+):([+-]?\d+)$")


def parse_dimension_function(text: str) -> DimensionFunction:
    """Parse ``pow:1/2``, ``loginv`` or ``powlog:1/2:-1``."""
    m = _SPEC_RE.match(text.strip())
    if not m:
        raise ConfigError(f"bad dimension function spec {text!r}; expected pow:a, loginv or powlog:a:b")
    try:
        if m.group(1):
            return DimensionFunction.power(parse_rational(m.group(2)))
        if m.group(3):
            return DimensionFunction.log_inverse()
        return DimensionFunction.power_log(parse_rational(m.group(5)), int(m.group(6)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


# --------------------------------------------------------------------------
# point enclosures


def _pow_alpha(x: Fraction, alpha: Fraction, tol: Fraction) -> RationalInterval:
    p, q = alpha.numerator, alpha.denominator
    return iv_nth_root(RationalInterval.point(x ** p), q, tol)


def _log_branch(h: DimensionFunction, x: Fraction, lnx_inv: RationalInterval, tol: Fraction):
    """x**alpha * L**beta with L an enclosure of ln(1/x) > 0."""
    if h.beta >= 0:
        lpow = iv_pow(lnx_inv, h.beta)
    else:
        lpow = iv_div(RationalInterval(1, 1), iv_pow(lnx_inv, -h.beta))
    if h.alpha == 0:
        return lpow
    return iv_mul(_pow_alpha(x, h.alpha, tol), lpow)


def _linear_branch(h: DimensionFunction, x: Fraction, tol: Fraction) -> RationalInterval:
    kappa = h.kappa
    c = iv_exp(-kappa, tol)
    hc = iv_scale(iv_exp(-h.alpha * kappa, tol), kappa ** h.beta) if h.alpha else \
        RationalInterval.point(kappa ** h.beta)
    return iv_add(hc, iv_sub(RationalInterval.point(x), c))


def _enclose_once(h: DimensionFunction, x: Fraction, tol: Fraction) -> RationalInterval:
    if x == 0:
        return RationalInterval(0, 0)
    if h.kind == POW:
        return _pow_alpha(x, h.alpha, tol)
    if x >= 1:
        return _linear_branch(h, x, tol)
    lnx_inv = iv_log(1 / x, tol)
    if lnx_inv.lo >= h.kappa:
        return _log_branch(h, x, lnx_inv, tol)
    if lnx_inv.hi < h.kappa:
        return _linear_branch(h, x, tol)
    # straddles the breakpoint; h is continuous there so either formula is close
    return iv_hull(_log_branch(h, x, lnx_inv, tol), _linear_branch(h, x, tol))


def h_enclose(h: DimensionFunction, x, tol: Fraction = Fraction(1, 1 << 64)) -> RationalInterval:
    """Enclosure of h(x) for rational x >= 0 with width <= tol."""
    x = Fraction(x)
    tol = Fraction(tol)
    if x < 0:
        raise DomainError("dimension functions are evaluated on [0, inf)")
    inner = tol / 16
    for _ in range(64):
        enc = _enclose_once(h, x, inner)
        if enc.width <= tol:
            return enc
        inner = inner * min(Fraction(1, 16), tol / (enc.width * 4))
    raise DomainError(f"could not enclose {h.label} at {x} to width {tol}")


def h_upper(h: DimensionFunction, t: RationalInterval, tol: Fraction) -> Fraction:
    """Rational u with h(x) <= u on t and u <= h(t.hi) + tol; t must lie in [0, 1]."""
    if not (0 <= t.lo and t.hi <= 1):
        raise DomainError(f"{t} is not inside [0, 1]")
    return h_enclose(h, t.hi, tol).hi


def h_lower(h: DimensionFunction, t: RationalInterval, tol: Fraction) -> Fraction:
    if not (0 <= t.lo and t.hi <= 1):
        raise DomainError(f"{t} is not inside [0, 1]")
    return h_enclose(h, t.lo, tol).lo


# --------------------------------------------------------------------------
# log-domain evaluation at tiny dyadic arguments c * 2**-e


def log2_h_at_dyadic(h: DimensionFunction, c: int, e: int, tol: Fraction = Fraction(1, 1 << 48)) -> RationalInterval:
    """Enclosure of log2 h(c * 2**-e) without materializing 2**-e."""
    tol = Fraction(tol)
    if c <= 0:
        raise DomainError("argument must be positive")
    log2c = iv_log2(c, tol / 8)
    log2t = iv_sub(log2c, RationalInterval.point(e))  # log2 of the argument
    if h.kind == POW:
        return iv_scale(log2t, h.alpha)
    if log2t.hi >= -4:
        # not small: evaluate directly, the argument is at most 16 * c
        x = Fraction(c, 1 << e) if e >= 0 else Fraction(c << -e)
        enc = h_enclose(h, x, Fraction(1, 1 << 64))
        return RationalInterval(iv_log2(enc.lo, tol / 4).lo, iv_log2(enc.hi, tol / 4).hi)
    ln2 = iv_log(2, tol / (abs(e) + 8))
    lnc = iv_log(c, tol / 8)
    lnx_inv = iv_sub(iv_scale(ln2, e), lnc)
    if lnx_inv.lo < h.kappa:
        x = Fraction(c, 1 << e)
        enc = h_enclose(h, x, Fraction(1, 1 << 64))
        return RationalInterval(iv_log2(enc.lo, tol / 4).lo, iv_log2(enc.hi, tol / 4).hi)
    log2L = RationalInterval(iv_log2(lnx_inv.lo, tol / 8).lo, iv_log2(lnx_inv.hi, tol / 8).hi)
    return iv_add(iv_scale(log2t, h.alpha), iv_scale(log2L, h.beta))


# --------------------------------------------------------------------------
# ordering evidence


@dataclass(frozen=True)
class OrderingEvidence:
    probes: tuple
    ratios: tuple  # enclosures of h1(x)/h2(x)
    consistent: bool

    @property
    def verdict(self) -> str:
        return "consistent with h2 < h1" if self.consistent else "not consistent"


def h_compare(h1: DimensionFunction, h2: DimensionFunction, probes: Sequence,
              tol: Fraction = Fraction(1, 1 << 80),
              threshold: Fraction = Fraction(1, 1000)) -> OrderingEvidence:
    """Numerical evidence that h1(x)/h2(x) -> 0 along decreasing probes.

    Consistent iff ratio upper bounds strictly decrease and the last one is
    below ``threshold``.  This is evidence, not a proof of the limit.
    """
    probes = tuple(Fraction(p) for p in probes)
    if any(not (0 < p <= 1) for p in probes):
        raise DomainError("probes must lie in (0, 1]")
    if any(a <= b for a, b in zip(probes, probes[1:])):
        raise DomainError("probes must be strictly decreasing")
    ratios = []
    for x in probes:
        a = h_enclose(h1, x, tol)
        b = h_enclose(h2, x, tol)
        ratios.append(iv_div(a, b))
    uppers = [r.hi for r in ratios]
    decreasing = all(u > v for u, v in zip(uppers, uppers[1:]))
    consistent = bool(ratios) and decreasing and uppers[-1] < threshold
    return OrderingEvidence(probes, tuple(ratios), consistent)
