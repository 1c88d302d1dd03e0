"""Per-level covering bounds M * h(N2 * delta_n) for the grid sets F_n.

M counts the level-n cubes meeting a window of side N1 / (4 L sqrt(N)_lo):
with gaps delta_{n-1} / (4 L sqrt(N)_lo) that count never exceeds
N1 / delta_{n-1} + 1 per axis, so the bound is dominated by the cruder
(N1 / delta_{n-1} + 1)**N h(N2 delta_n), which the delta sequence drives
below 1/n once (N1, N2) has been enumerated.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Tuple

from .construction import DeltaSequence, grid_level, pair_index, sqrt_bounds
from .dimfun import DimensionFunction, h_enclose
from .errors import ConfigError, ConstructionLimitError
from .numerics import RationalInterval

CERTIFIED = "certified"
ABOVE = "above"
UNCERTIFIED = "uncertified"

#: scales below 2**-MAX_COVER_BITS are not materialized
MAX_COVER_BITS = 1 << 20

CSV_COLUMNS = ("n", "M", "bound_exact_num", "bound_exact_den", "paper_bound", "status")


def decimal_up(x: Fraction, digits: int = 17) -> str:
    """Scientific notation rounded upward (for x >= 0)."""
    x = Fraction(x)
    if x < 0:
        raise ValueError("decimal_up expects a non-negative value")
    if x == 0:
        return "0"
    e = len(str(x.numerator)) - len(str(x.denominator))
    if Fraction(10) ** e > x:
        e -= 1
    scale = Fraction(10) ** (digits - 1 - e)
    m = math.ceil(x * scale)
    if m >= 10 ** digits:
        e += 1
        scale /= 10
        m = math.ceil(x * scale)
    s = str(m)
    mant = s[0] + ("." + s[1:].rstrip("0") if s[1:].rstrip("0") else "")
    return f"{mant}e{e}"


def _h_upper_relative(h: DimensionFunction, t: Fraction, bits: int = 80) -> Fraction:
    """Upper bound on h(t) within relative error 2**-bits."""
    lg = max(1, t.denominator.bit_length() - t.numerator.bit_length())
    est = math.ceil(h.alpha * lg) + (abs(h.beta) + 1) * lg.bit_length() + 8
    tol = Fraction(1, 1 << (bits + est))
    for _ in range(16):
        enc = h_enclose(h, t, tol)
        if enc.lo > 0 and enc.width <= enc.lo / (1 << bits):
            return enc.hi
        tol /= 1 << 32
    raise ConstructionLimitError(f"could not enclose h({t}) to relative precision 2^-{bits}")


@dataclass(frozen=True)
class CoverRow:
    n: int
    M: int
    bound: Optional[Fraction]
    paper_bound: Optional[Fraction]
    status: str

    def csv_fields(self) -> Tuple[str, ...]:
        if self.bound is None:
            return (str(self.n), str(self.M), "", "", "", self.status)
        return (str(self.n), str(self.M), str(self.bound.numerator), str(self.bound.denominator),
                decimal_up(self.paper_bound), self.status)


@dataclass(frozen=True)
class CoverCertificate:
    h: DimensionFunction
    L: int
    N: int
    N1: int
    N2: int
    window: RationalInterval
    entry: int
    rows: Tuple[CoverRow, ...]

    @property
    def ok(self) -> bool:
        """Every level at or past the entry of (N1, N2) has bound < 1/n."""
        return all(r.status == CERTIFIED for r in self.rows if r.n >= self.entry)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow(r.csv_fields())
        return buf.getvalue()

    def summary(self) -> str:
        lines = [f"h={self.h.label} L={self.L} N={self.N} N1={self.N1} N2={self.N2} "
                 f"window=[{self.window.lo}, {self.window.hi}] (N1,N2) enters at level {self.entry}"]
        for r in self.rows:
            b = "-" if r.bound is None else decimal_up(r.bound, 6)
            lines.append(f"  n={r.n:3d}  M={r.M}  bound<={b}  1/n={decimal_up(Fraction(1, r.n), 6)}  {r.status}")
        lines.append("all levels past entry certified" if self.ok else "NOT all levels past entry certified")
        return "\n".join(lines) + "\n"


def default_window(seq: DeltaSequence, N1: int) -> RationalInterval:
    s_lo, _ = sqrt_bounds(seq.N)
    return RationalInterval(Fraction(0), Fraction(N1) / (4 * seq.L * s_lo))


def certify_measure_decay(seq: DeltaSequence, h: DimensionFunction, N1: int, N2: int, up_to: int,
                          window: Optional[RationalInterval] = None) -> CoverCertificate:
    """Covering bound per level 1..up_to; levels with N2 delta_n > 1 are 'uncertified'."""
    if N1 < 1 or N2 < 1:
        raise ConfigError("N1 and N2 are positive integers")
    if up_to < 0:
        raise ConfigError("level range must be non-negative")
    if up_to > seq.depth:
        raise IndexError(f"level {up_to} beyond the delta sequence (depth {seq.depth})")
    if window is None:
        window = default_window(seq, N1)
    elif window.lo < 0:
        raise ConfigError("grids live on [0, inf); the window must too")
    rows: List[CoverRow] = []
    for n in range(1, up_to + 1):
        if max(-seq.deltas[n].exponent, -seq.deltas[n - 1].exponent) > MAX_COVER_BITS:
            raise ConstructionLimitError(f"level {n}: scale below 2^-{MAX_COVER_BITS} is not materialized")
        grid = grid_level(seq, n)
        M = grid.count_meeting(window) ** seq.N
        t = N2 * seq.delta(n)
        if t > 1:
            rows.append(CoverRow(n, M, None, None, UNCERTIFIED))
            continue
        hu = _h_upper_relative(h, t)
        bound = M * hu
        crude = (Fraction(N1) / seq.delta(n - 1) + 1) ** seq.N * hu
        status = CERTIFIED if bound < Fraction(1, n) else ABOVE
        rows.append(CoverRow(n, M, bound, crude, status))
    return CoverCertificate(h, seq.L, seq.N, N1, N2, window, pair_index(N1, N2), tuple(rows))
