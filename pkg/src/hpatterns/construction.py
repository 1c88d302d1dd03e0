"""The delta sequence, grid levels, the interleaving schedule and K_j windows.

Scales are kept as dyadics ``2**-e``; the greedy construction works on the
integer exponents so levels whose scale has billions of bits never need to be
materialized.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, List, Optional, Sequence, Tuple

from .dimfun import POW, DimensionFunction, log2_h_at_dyadic, parse_dimension_function
from .errors import ConfigError, ConstructionLimitError
from .numerics import (
    Dyadic,
    RationalInterval,
    iv_add,
    iv_log2,
    iv_scale,
)

ENUMERATION = "cantor-diagonal"

#: exponents of delta_m must stay below this; larger scales are not representable
MAX_EXPONENT = 2 ** 63


# --------------------------------------------------------------------------
# pair enumeration


def pair_at(i: int) -> Tuple[int, int]:
    """i-th pair (1-based) of N x N in diagonal order (1,1),(1,2),(2,1),(1,3),..."""
    if i < 1:
        raise IndexError("pair enumeration is 1-based")
    s = 2
    while (s - 1) * s // 2 < i:
        s += 1
    a = i - (s - 2) * (s - 1) // 2
    return a, s - a


def pair_index(a: int, b: int) -> int:
    """Position of (a, b) in the enumeration (1-based)."""
    if a < 1 or b < 1:
        raise IndexError("pairs are of positive integers")
    s = a + b
    return (s - 2) * (s - 1) // 2 + a


# --------------------------------------------------------------------------
# sqrt(N) enclosure


def sqrt_bounds(N: int) -> Tuple[Fraction, Fraction]:
    """Rational lo <= sqrt(N) <= hi on the grid 2**-64; exact for perfect squares.

    The lower end fixes the grid gaps, so it is a canonical value that any
    replay can recompute as isqrt(N * 2**128) / 2**64.
    """
    r = math.isqrt(N)
    if r * r == N:
        return Fraction(r), Fraction(r)
    lo = Fraction(math.isqrt(N << 128), 1 << 64)
    return lo, lo + Fraction(1, 1 << 64)


# --------------------------------------------------------------------------
# DeltaSequence


@dataclass(frozen=True)
class DeltaSequence:
    L: int
    N: int
    deltas: Tuple[Dyadic, ...]
    enumeration: str = ENUMERATION
    h_label: Optional[str] = None
    transcript: Tuple[dict, ...] = field(default=(), compare=False)

    def __post_init__(self):
        if self.L < 2:
            raise ConfigError("L must be at least 2")
        if self.N < 1:
            raise ConfigError("N must be positive")
        if not self.deltas or self.deltas[0] != Dyadic(1, 0):
            raise ConfigError("a delta sequence starts with delta_0 = 1")
        object.__setattr__(self, "deltas", tuple(self.deltas))

    @property
    def depth(self) -> int:
        return len(self.deltas) - 1

    def delta(self, n: int) -> Fraction:
        if not 0 <= n < len(self.deltas):
            raise IndexError(f"level {n} outside 0..{self.depth}")
        return self.deltas[n].to_fraction()

    @property
    def h(self) -> Optional[DimensionFunction]:
        return parse_dimension_function(self.h_label) if self.h_label else None

    def to_json(self) -> dict:
        out = {
            "L": self.L,
            "N": self.N,
            "enumeration": self.enumeration,
            "h": self.h_label,
            "deltas": [str(d) for d in self.deltas],
        }
        if self.transcript:
            out["transcript"] = list(self.transcript)
        return out

    @classmethod
    def from_json(cls, data: dict) -> "DeltaSequence":
        try:
            return cls(
                L=int(data["L"]),
                N=int(data["N"]),
                deltas=tuple(Dyadic.parse(s) for s in data["deltas"]),
                enumeration=data.get("enumeration", ENUMERATION),
                h_label=data.get("h"),
                transcript=tuple(data.get("transcript", ())),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed delta sequence: {exc}") from None

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"


# --------------------------------------------------------------------------
# greedy construction


def geometric_ok(L: int, N: int, prev: Dyadic, cur: Dyadic) -> bool:
    """cur <= prev / (4 L sqrt N), decided exactly by squaring."""
    a, x = cur.mantissa, cur.exponent
    b, y = prev.mantissa, prev.exponent
    if a <= 0 or b <= 0:
        return False
    if y < x:
        return False
    lhs = 16 * L * L * N * a * a
    shift = 2 * (y - x)
    if lhs.bit_length() <= shift:
        return True
    return lhs <= (b * b) << shift


def _power_condition(alpha: Fraction, N: int, p1: int, p2: int, m: int, e_prev: int, e: int) -> bool:
    # (p1 2^e' + 1)^N (p2 2^-e)^(p/q) < 1/m  <=>  (p1 2^e' + 1)^(Nq) p2^p m^q < 2^(e p)
    p, q = alpha.numerator, alpha.denominator
    A = p1 ** (N * q) * p2 ** p * m ** q
    if e_prev * N * q <= 4096 or 2 * A * N * q >= (p1 << min(e_prev, 4096)):
        if e_prev * N * q > 1 << 24:
            raise ConstructionLimitError("exact power comparison too large")
        lhs = (p1 * (1 << e_prev) + 1) ** (N * q) * p2 ** p * m ** q
        rhs_bits = e * p
        if rhs_bits < 0:
            return False
        if lhs.bit_length() <= rhs_bits:
            return True
        return lhs < (1 << rhs_bits)
    # A (1 + 2^-e'/p1)^(Nq) lies strictly between A and A + 1 here,
    # so the comparison with an integer power of two is decided by A alone
    k = e * p - e_prev * N * q
    return k >= A.bit_length()


_LOG_TOL = Fraction(1, 1 << 48)


def _log2_factor(p1: int, e_prev: int) -> RationalInterval:
    """Enclosure of log2(p1 * 2**e' + 1) - e' = log2(p1 + 2**-e')."""
    if e_prev <= 256:
        return iv_log2(p1 + Fraction(1, 1 << e_prev), _LOG_TOL)
    base = iv_log2(p1, _LOG_TOL)
    return RationalInterval(base.lo, base.hi + Fraction(1, 1 << 255))


def covering_condition(h: DimensionFunction, N: int, p1: int, p2: int, m: int, e_prev: int, e: int) -> bool:
    """Certified (p1/delta_{m-1} + 1)^N h(p2 delta_m) < 1/m for delta = 2**-e."""
    if h.kind == POW:
        return _power_condition(h.alpha, N, p1, p2, m, e_prev, e)
    lhs = iv_add(
        iv_scale(_log2_factor(p1, e_prev), N),
        log2_h_at_dyadic(h, p2, e, _LOG_TOL),
    )
    lhs = iv_add(lhs, RationalInterval.point(N * e_prev))
    lhs = iv_add(lhs, iv_log2(m, _LOG_TOL))
    return lhs.hi < 0


def _least_exponent(pred, start: int) -> int:
    """Least e >= start with pred(e), assuming pred is monotone in e."""
    if pred(start):
        return start
    lo, step = start, 1
    while True:
        hi = lo + step
        if hi >= MAX_EXPONENT:
            if not pred(MAX_EXPONENT):
                raise ConstructionLimitError(
                    "the next scale needs an exponent beyond 2^63; "
                    "this dimension function outgrows dyadic representation at this depth"
                )
            hi = MAX_EXPONENT
            break
        if pred(hi):
            break
        lo, step = hi, step * 2
    # pred(lo) false, pred(hi) true
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi


def build_delta_sequence(h: DimensionFunction, L: int, N: int, depth: int) -> DeltaSequence:
    """Greedy construction: each delta_m is the largest 2**-e meeting the
    geometric decay constraint and the m indexed covering inequalities."""
    if depth < 0:
        raise ConfigError("depth must be non-negative")
    if L < 2 or N < 1:
        raise ConfigError("need L >= 2 and N >= 1")
    exps = [0]
    transcript = []
    for m in range(1, depth + 1):
        e_prev = exps[-1]
        one = Dyadic(1, -e_prev)
        e = _least_exponent(lambda e: geometric_ok(L, N, one, Dyadic(1, -e)), e_prev + 1)
        binding = "geometric"
        for i in range(1, m + 1):
            p1, p2 = pair_at(i)
            e_i = _least_exponent(lambda e: covering_condition(h, N, p1, p2, m, e_prev, e), e)
            if e_i > e:
                e, binding = e_i, f"pair {i} = ({p1},{p2})"
        # monotone in e, but re-check the final choice against every pair
        while not all(covering_condition(h, N, *pair_at(i), m, e_prev, e) for i in range(1, m + 1)):
            e += 1
        exps.append(e)
        transcript.append({"m": m, "exponent": -e, "binding": binding})
    return DeltaSequence(
        L=L,
        N=N,
        deltas=tuple(Dyadic(1, -e) for e in exps),
        h_label=h.label,
        transcript=tuple(transcript),
    )


# --------------------------------------------------------------------------
# grid levels


@dataclass(frozen=True)
class GridLevel:
    n: int
    delta: Fraction
    gap: Fraction
    period: Fraction
    offset: Fraction = Fraction(0)

    def interval(self, k: int) -> RationalInterval:
        if k < 0:
            raise IndexError("grid intervals are indexed from 0")
        start = self.offset + k * self.period
        return RationalInterval(start, start + self.delta)

    def first_index_above(self, x: Fraction) -> int:
        """Least k >= 0 whose interval starts strictly after x."""
        k = math.floor((x - self.offset) / self.period) + 1
        return max(k, 0)

    def first_index_meeting(self, x: Fraction) -> int:
        """Least k >= 0 whose interval ends at or after x."""
        k = math.ceil((x - self.offset - self.delta) / self.period)
        return max(k, 0)

    def intervals_meeting(self, window: RationalInterval) -> Iterator[Tuple[int, RationalInterval]]:
        if window.hi < self.offset:
            return
        k = self.first_index_meeting(window.lo)
        while True:
            iv = self.interval(k)
            if iv.lo > window.hi:
                return
            yield k, iv
            k += 1

    def count_meeting(self, window: RationalInterval) -> int:
        if window.hi < self.offset:
            return 0
        first = self.first_index_meeting(window.lo)
        last = math.floor((window.hi - self.offset) / self.period)
        return max(0, last - first + 1)


def grid_gap(seq: DeltaSequence, n: int) -> Fraction:
    """delta_{n-1} / (4 L sqrt(N)) rounded so it is never below the true value."""
    s_lo, _ = sqrt_bounds(seq.N)
    return seq.delta(n - 1) / (4 * seq.L * s_lo)


def grid_level(seq: DeltaSequence, n: int) -> GridLevel:
    if not 1 <= n <= seq.depth:
        raise IndexError(f"grid level {n} outside 1..{seq.depth}")
    delta = seq.delta(n)
    gap = grid_gap(seq, n)
    return GridLevel(n=n, delta=delta, gap=gap, period=delta + gap)


# --------------------------------------------------------------------------
# schedule


@dataclass(frozen=True)
class ScheduleEntry:
    m: int
    owner: int
    k: int


def owner_of(m: int) -> Tuple[int, int]:
    """Decompose m = (2k - 1) 2**(r - 1); returns (r, k)."""
    if m < 1:
        raise ValueError("levels start at 1")
    v = (m & -m).bit_length() - 1
    odd = m >> v
    return v + 1, (odd + 1) // 2


def schedule(owners: Sequence[int], depth: int) -> List[ScheduleEntry]:
    """First ``depth`` levels of the merged progressions (2k-1) 2**(r-1)."""
    owners = list(owners)
    if len(set(owners)) != len(owners):
        raise ConfigError(f"owner indices must be distinct: {owners}")
    if any(r < 1 for r in owners):
        raise ConfigError("owner indices are positive integers")
    if depth < 0:
        raise ConfigError("depth must be non-negative")
    wanted = set(owners)
    out: List[ScheduleEntry] = []
    m = 0
    while len(out) < depth:
        m += 1
        r, k = owner_of(m)
        if r in wanted:
            out.append(ScheduleEntry(m=m, owner=r, k=k))
    return out


def nesting_fit(seq: DeltaSequence, m: int, m_next: int) -> bool:
    """sqrt(N)_up (delta_{m'-1} / (4L sqrt(N)_lo) + delta_{m'}) <= delta_m / (2L).

    Decided in exact rational arithmetic after scaling by 2**e_m; terms below
    2**-4096 relative to delta_m are replaced by that upper bound.
    """
    if not 1 <= m < m_next <= seq.depth:
        raise IndexError("need 1 <= m < m' <= depth")
    s_lo, s_up = sqrt_bounds(seq.N)
    L = seq.L
    base = seq.deltas[m]

    def rel(d: Dyadic) -> Fraction:
        shift = d.exponent - base.exponent
        ratio = Fraction(d.mantissa, base.mantissa)
        if shift < -4096:
            return ratio * Fraction(1, 1 << 4096)
        return ratio * (Fraction(1 << shift) if shift >= 0 else Fraction(1, 1 << -shift))

    lhs = s_up * (rel(seq.deltas[m_next - 1]) / (4 * L * s_lo) + rel(seq.deltas[m_next]))
    return lhs <= Fraction(1, 2 * L)


def check_schedule_fit(seq: DeltaSequence, entries: Sequence[ScheduleEntry]) -> List[Tuple[int, int]]:
    """Consecutive (m, m') pairs of the schedule violating the nesting fit."""
    bad = []
    for a, b in zip(entries, entries[1:]):
        if not nesting_fit(seq, a.m, b.m):
            bad.append((a.m, b.m))
    return bad


# --------------------------------------------------------------------------
# K_j truncations


def kset_intervals(seq: DeltaSequence, j: int, truncation: int, window: RationalInterval,
                   max_intervals: int = 10 ** 6) -> List[RationalInterval]:
    """Components of the intersection of F_{(2k-1) 2^(j-1)}, k <= truncation, with window."""
    if truncation < 1:
        raise ConfigError("truncation must be at least 1")
    if j < 1:
        raise ConfigError("owner level j must be positive")
    levels = [(2 * k - 1) * 2 ** (j - 1) for k in range(1, truncation + 1)]
    if levels[-1] > seq.depth:
        raise IndexError(f"truncation needs level {levels[-1]} but the sequence stops at {seq.depth}")
    if window.hi < 0:
        return []
    current = [RationalInterval(max(window.lo, Fraction(0)), window.hi)]
    for n in levels:
        grid = grid_level(seq, n)
        nxt: List[RationalInterval] = []
        for piece in current:
            for _, iv in grid.intervals_meeting(piece):
                lo, hi = max(iv.lo, piece.lo), min(iv.hi, piece.hi)
                nxt.append(RationalInterval(lo, hi))
                if len(nxt) > max_intervals:
                    raise ConstructionLimitError("too many components; shrink the window")
        current = nxt
    return current
