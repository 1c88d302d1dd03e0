"""Independent replay of witness certificates and delta sequences.

Nothing here calls the search code.  Grids, schedules and polynomial values
are recomputed from scratch, thresholds are re-certified with Sturm
sequences instead of subdivision, and the covering inequalities are replayed in
mpmath interval arithmetic instead of the exact exponent test used by the
builder.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from mpmath import iv

from .construction import DeltaSequence
from .dimfun import LOGINV, POW, DimensionFunction
from .witness import PREIMAGE, WitnessCertificate


@dataclass(frozen=True)
class VerifyResult:
    ok: bool
    failed_step: Optional[int] = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok

    def __str__(self) -> str:
        if self.ok:
            return "verified"
        where = "spec" if self.failed_step == 0 else f"step {self.failed_step}"
        return f"rejected at {where}: {self.reason}"


# --------------------------------------------------------------------------
# small exact polynomial kit (deliberately separate from maps)


def _horner(coeffs: Sequence[Fraction], x: Fraction) -> Fraction:
    v = Fraction(0)
    for c in reversed(coeffs):
        v = v * x + c
    return v


def _strip(p):
    p = list(p)
    while p and p[-1] == 0:
        p.pop()
    return p


def _mul(a, b):
    if not a or not b:
        return []
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] += x * y
    return _strip(out)


def _lin(a, b, ca, cb):
    n = max(len(a), len(b))
    return _strip([ca * (a[i] if i < len(a) else 0) + cb * (b[i] if i < len(b) else 0) for i in range(n)])


def _power(a, k):
    out = [Fraction(1)]
    for _ in range(k):
        out = _mul(out, a)
    return out


def _rem(a, b):
    a = list(a)
    while len(a) >= len(b) and a:
        f = a[-1] / b[-1]
        shift = len(a) - len(b)
        for i, c in enumerate(b):
            a[shift + i] -= f * c
        a = _strip(a)
    return a


def _sturm_chain(p):
    chain = [p, _strip([k * p[k] for k in range(1, len(p))])]
    while chain[-1]:
        r = _rem(chain[-2], chain[-1])
        if not r:
            break
        chain.append([-c for c in r])
    return chain


def _sign_changes(values):
    signs = [v for v in values if v != 0]
    return sum(1 for a, b in zip(signs, signs[1:]) if (a > 0) != (b > 0))


def _positive_after(p, a: Fraction) -> bool:
    """p(x) > 0 for all x > a, via a Sturm root count on (a, inf)."""
    p = _strip(p)
    if not p:
        return False
    if len(p) == 1:
        return p[0] > 0
    if p[-1] < 0:
        return False
    # divide out roots sitting exactly at a
    while _horner(p, a) == 0:
        q, acc = [], Fraction(0)
        for c in reversed(p[1:]):
            acc = acc * a + c
            q.append(acc)
        p = _strip(list(reversed(q)))
        if len(p) == 1:
            return p[0] > 0
    chain = _sturm_chain(p)
    at_a = _sign_changes([_horner(s, a) for s in chain])
    at_inf = _sign_changes([s[-1] for s in chain])
    return at_a - at_inf == 0 and _horner(p, a) > 0


def _threshold_certified(coeffs, q: Fraction, n: int, sign: int, M: int) -> bool:
    Q = [sign * c for c in coeffs]
    dQ = _strip([k * Q[k] for k in range(1, len(Q))])
    dQn = _power(dQ, n)
    Qn1 = _power(Q, n - 1)
    G1 = _lin(dQn, Qn1, (4 * q) ** n, -(n ** n))
    G2 = _lin(Qn1, dQn, n ** n, -(q ** n))
    a = Fraction(M - 1)
    return all(_positive_after(p, a) for p in (Q, dQ, G1, G2))


# --------------------------------------------------------------------------
# independent grid and schedule


def _sqrt_lower(N: int) -> Fraction:
    r = math.isqrt(N)
    if r * r == N:
        return Fraction(r)
    return Fraction(math.isqrt(N << 128), 1 << 64)


def _delta(seq: DeltaSequence, n: int) -> Fraction:
    d = seq.deltas[n]
    return Fraction(d.mantissa) * (Fraction(2) ** d.exponent)


def _period(seq: DeltaSequence, m: int) -> Fraction:
    return _delta(seq, m) + _delta(seq, m - 1) / (4 * seq.L * _sqrt_lower(seq.N))


def _schedule(owners, depth):
    wanted = set(owners)
    out, m = [], 0
    while len(out) < depth:
        m += 1
        r = 1
        while m % (2 ** r) == 0:
            r += 1
        if r in wanted:
            out.append((m, r, (m // 2 ** (r - 1) + 1) // 2))
    return out


# --------------------------------------------------------------------------
# certificate replay


def _check_spec(cert: WitnessCertificate) -> Optional[str]:
    spec = cert.spec
    seq = spec.deltas
    if seq.deltas[0].mantissa != 1 or seq.deltas[0].exponent != 0:
        return "delta_0 is not 1"
    if len(cert.steps) != spec.depth:
        return f"{len(cert.steps)} steps recorded for depth {spec.depth}"
    if spec.mode == PREIMAGE:
        if seq.L < 4:
            return "preimage certificates need L >= 4"
        for g in spec.maps:
            a = g.P.coefficients
            n, q, sign = g.psi.n, g.psi.q.to_fraction(), g.psi.sign
            if n != len(a) - 1:
                return f"root order {n} does not match degree of {g.P}"
            if sign != (1 if a[-1] > 0 else -1):
                return f"conjugator side does not match the sign of {g.P}"
            lead = abs(a[-1])
            if not ((2 * q) ** n * lead >= 1 and (4 * q / 3) ** n * lead <= 1):
                return f"q = {q} is outside the admissible bracket for {g.P}"
            if g.M_P < 1 or not _threshold_certified(a, q, n, sign, g.M_P):
                return f"threshold M_P = {g.M_P} does not certify {g.P}"
    else:
        slopes = []
        for g in spec.maps:
            c = g.slope * g.lam.to_fraction()
            if not 1 <= abs(c) <= seq.L:
                return f"composite slope {c} outside [1, L]"
            slopes.append(c > 0)
        if len(set(slopes)) > 1:
            return "mixed slope signs"
    return None


def _check_step_preimage(cert, pos, step, g, M_max) -> Optional[str]:
    C, X, tol = step.C, step.X, cert.tolerance
    if X.lo < M_max:
        return f"X starts at {X.lo}, below the certified domain {M_max}"
    if C.lo < 0:
        return "grid interval below 0"
    a, q, n, s = g.P.coefficients, g.psi.q.to_fraction(), g.psi.n, g.psi.sign
    lo_level, hi_level = (C.lo / q) ** n, (C.hi / q) ** n
    if not s * _horner(a, X.lo) >= lo_level:
        return "left end of X maps below C"
    if not s * _horner(a, X.hi) <= hi_level:
        return "right end of X maps above C"
    if X.lo - tol < M_max - 1:
        return "tolerance reaches outside the monotone range"
    if not s * _horner(a, X.lo - tol) <= lo_level:
        return "X is not within tolerance of the exact preimage on the left"
    if not s * _horner(a, X.hi + tol) >= hi_level:
        return "X is not within tolerance of the exact preimage on the right"
    return None


def _check_step_image(step, g) -> Optional[str]:
    c = g.slope * g.lam.to_fraction()
    ends = sorted((c * step.C.lo + g.intercept, c * step.C.hi + g.intercept))
    if (step.X.lo, step.X.hi) != tuple(ends):
        return "X is not the exact image of C"
    return None


def verify_certificate(cert: WitnessCertificate) -> VerifyResult:
    """Replay every inclusion; the first failure is reported with its step (1-based)."""
    spec = cert.spec
    try:
        problem = _check_spec(cert)
    except Exception as exc:  # malformed data is a rejection, not a crash
        return VerifyResult(False, 0, f"spec replay failed: {exc}")
    if problem:
        return VerifyResult(False, 0, problem)
    seq = spec.deltas
    sched = _schedule(spec.owners, spec.depth)
    owner_map = dict(zip(spec.owners, spec.maps))
    M_max = max(g.M_P for g in spec.maps) if spec.mode == PREIMAGE else None
    prev = None
    for pos, (step, (m, r, k)) in enumerate(zip(cert.steps, sched), start=1):
        if (step.m, step.owner) != (m, r):
            return VerifyResult(False, pos, f"expected level {m} owned by map {r}, found ({step.m}, {step.owner})")
        if m > seq.depth:
            return VerifyResult(False, pos, f"level {m} beyond the delta sequence")
        if step.grid_index < 0:
            return VerifyResult(False, pos, "negative grid index")
        start = step.grid_index * _period(seq, m)
        if step.C.lo != start or step.C.hi != start + _delta(seq, m):
            return VerifyResult(False, pos, f"C is not interval {step.grid_index} of F_{m}")
        g = owner_map[r]
        if spec.mode == PREIMAGE:
            problem = _check_step_preimage(cert, pos, step, g, M_max)
        else:
            problem = _check_step_image(step, g)
        if problem:
            return VerifyResult(False, pos, problem)
        if prev is not None and not (prev.lo < step.X.lo and step.X.hi < prev.hi):
            return VerifyResult(False, pos, "X is not strictly nested in the previous X")
        prev = step.X
    last = len(cert.steps) + 1
    if cert.final != prev:
        return VerifyResult(False, last, "final interval differs from the last X")
    if cert.final.width > seq.L * _delta(seq, cert.steps[-1].m):
        return VerifyResult(False, last, "final interval wider than L * delta")
    if not cert.final.contains(cert.witness):
        return VerifyResult(False, last, "witness point outside the final interval")
    return VerifyResult(True)


# --------------------------------------------------------------------------
# covering-inequality replay for delta sequences


@dataclass(frozen=True)
class ReplayReport:
    ok: bool
    checked: int
    failures: Tuple[str, ...] = ()
    seconds: float = field(default=0.0, compare=False)


def _diagonal_pairs():
    s = 2
    while True:
        for a in range(1, s):
            yield a, s - a
        s += 1


def _iv_pow2(e: int):
    return iv.ldexp(iv.mpf(1), e)


def _iv_h(h: DimensionFunction, t):
    """Interval enclosure of h(t) for an interval t inside (0, 1]."""
    if h.kind == POW:
        return iv.exp(iv.mpf(h.alpha.numerator) / h.alpha.denominator * iv.log(t))
    alpha = iv.mpf(h.alpha.numerator) / h.alpha.denominator
    beta = -1 if h.kind == LOGINV else h.beta
    k = max(Fraction(1), Fraction(beta) / h.alpha) if beta > 0 else Fraction(1)
    kappa = iv.mpf(k.numerator) / k.denominator
    L = -iv.log(t)

    def log_branch():
        return iv.exp(alpha * iv.log(t)) * L ** beta if h.kind != LOGINV else 1 / L

    def linear_branch():
        c = iv.exp(-kappa)
        hc = (iv.exp(-alpha * kappa) if h.kind != LOGINV else iv.mpf(1)) * kappa ** beta
        return hc + t - c

    if L.a >= kappa.b:
        return log_branch()
    if L.b < kappa.a:
        return linear_branch()
    a, b = log_branch(), linear_branch()
    return iv.mpf([min(a.a, b.a), max(a.b, b.b)])


def _covering_lhs(h, N, p1, p2, prev, cur):
    inv_prev = iv.mpf(p1) / prev.mantissa * _iv_pow2(-prev.exponent)
    t = iv.mpf(p2) * cur.mantissa * _iv_pow2(cur.exponent)
    return (inv_prev + 1) ** N * _iv_h(h, t)


def _exact_covering(h, N, p1, p2, m, prev, cur) -> Optional[bool]:
    """Exact rational replay for power h when the numbers stay small."""
    if h.kind != POW or max(abs(prev.exponent), abs(cur.exponent)) > 20000:
        return None
    p, q = h.alpha.numerator, h.alpha.denominator
    dp = Fraction(prev.mantissa) * Fraction(2) ** prev.exponent
    dc = Fraction(cur.mantissa) * Fraction(2) ** cur.exponent
    # (p1/dp + 1)^(N q) (p2 dc)^p m^q < 1
    return (p1 / dp + 1) ** (N * q) * (p2 * dc) ** p * m ** q < 1


def _geometric(L: int, N: int, prev, cur) -> bool:
    # cur * 4 L sqrt(N) <= prev, squared: 16 L^2 N a^2 2^(2x) <= b^2 2^(2y)
    a, x, b, y = cur.mantissa, cur.exponent, prev.mantissa, prev.exponent
    if a <= 0 or b <= 0:
        return False
    left, right = 16 * L * L * N * a * a, b * b
    d = 2 * (y - x)
    if d < 0:
        return left << -d <= right
    if d > left.bit_length() + 1:
        return True
    return left <= right << d


def check_delta_sequence(seq: DeltaSequence, h: DimensionFunction, max_prec: int = 4096) -> ReplayReport:
    """Replay delta_0 = 1, the geometric decay and all indexed covering inequalities."""
    t0 = time.perf_counter()
    failures: List[str] = []
    checked = 0
    d0 = seq.deltas[0]
    checked += 1
    if (d0.mantissa, d0.exponent) != (1, 0):
        failures.append("delta_0 != 1")
    big = max((abs(d.exponent) for d in seq.deltas), default=0)
    base_prec = 128 + big.bit_length()
    saved = iv.prec
    try:
        for m in range(1, seq.depth + 1):
            prev, cur = seq.deltas[m - 1], seq.deltas[m]
            checked += 1
            if not _geometric(seq.L, seq.N, prev, cur):
                failures.append(f"m={m}: geometric decay violated")
            pairs = _diagonal_pairs()
            for i in range(1, m + 1):
                p1, p2 = next(pairs)
                checked += 1
                verdict = None
                prec = base_prec
                while verdict is None and prec <= max_prec:
                    iv.prec = prec
                    lhs = _covering_lhs(h, seq.N, p1, p2, prev, cur)
                    rhs = iv.mpf(1) / m
                    if lhs.b < rhs.a:
                        verdict = True
                    elif lhs.a >= rhs.b:
                        verdict = False
                    else:
                        prec *= 2
                if verdict is None:
                    verdict = _exact_covering(h, seq.N, p1, p2, m, prev, cur)
                if verdict is None:
                    failures.append(f"m={m}, pair {i}=({p1},{p2}): undecided at {max_prec} bits")
                elif not verdict:
                    failures.append(f"m={m}, pair {i}=({p1},{p2}): inequality fails")
    finally:
        iv.prec = saved
    return ReplayReport(not failures, checked, tuple(failures), time.perf_counter() - t0)
