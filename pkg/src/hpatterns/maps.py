"""Polynomials, root conjugators, certified thresholds and affine maps.

For a polynomial P of degree n with leading coefficient a_n the conjugated
map is g(t) = q * |P(t)|**(1/n) on [M_P, inf).  Writing Q = sign(a_n) P, the
threshold M_P is the least positive integer for which Q, Q' and the two
polynomials

    G1 = (4 q Q')**n - n**n Q**(n-1)      (g' >= 1/4)
    G2 = n**n Q**(n-1) - (q Q')**n        (g' <= 1)

are all positive on (M_P - 1, inf).  Positivity on a ray is certified
exactly: roots at the left end are divided out, a domination bound gives a
tail point T, and [M_P - 1, T] is covered by Taylor-shift lower bounds.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .errors import BracketError, CertificationError, ConfigError, DomainError, ParseError
from .numerics import (
    Dyadic,
    RationalInterval,
    format_rational,
    iv_nth_root,
    iv_scale,
    monotone_inverse,
    monotone_inverse_inner,
    parse_rational,
)

Coeffs = Tuple[Fraction, ...]

#: largest threshold tried before giving up
THRESHOLD_CAP = 2 ** 40
#: subdivision budget for one positivity certificate
SUBDIVISION_CAP = 200_000


# --------------------------------------------------------------------------
# coefficient-list arithmetic (ascending powers)


def _trim(c: Sequence[Fraction]) -> List[Fraction]:
    c = list(c)
    while len(c) > 1 and c[-1] == 0:
        c.pop()
    return c or [Fraction(0)]


def _padd(a, b):
    n = max(len(a), len(b))
    return _trim([(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)])


def _pscale(a, c):
    return _trim([Fraction(x) * c for x in a])


def _pmul(a, b):
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _trim(out)


def _ppow(a, k):
    out = [Fraction(1)]
    for _ in range(k):
        out = _pmul(out, a)
    return out


def _pderiv(a):
    return _trim([k * a[k] for k in range(1, len(a))]) if len(a) > 1 else [Fraction(0)]


def _peval(a, x):
    acc = Fraction(0)
    for c in reversed(a):
        acc = acc * x + c
    return acc


def _taylor_shift(a, u):
    """Coefficients of a(u + y) in y."""
    b = list(a)
    n = len(b)
    for i in range(n - 1):
        for j in range(n - 2, i - 1, -1):
            b[j] += u * b[j + 1]
    return b


def _deflate(a, r):
    """a / (x - r) by synthetic division; a(r) must be 0."""
    n = len(a) - 1
    out = [Fraction(0)] * n
    acc = Fraction(0)
    for k in range(n, 0, -1):
        acc = acc * r + a[k]
        out[k - 1] = acc
    return _trim(out)


# --------------------------------------------------------------------------
# exact positivity on rays


def _positive_on_closed(a, lo: Fraction, hi: Fraction) -> bool:
    stack = [(lo, hi)]
    budget = SUBDIVISION_CAP
    while stack:
        u, v = stack.pop()
        w = v - u
        b = _taylor_shift(a, u)
        lower = b[0] + sum(bk * w ** k for k, bk in enumerate(b) if k and bk < 0)
        if lower > 0:
            continue
        mid = (u + v) / 2
        # sampling both ends and the midpoint refutes quickly near simple roots
        if b[0] <= 0 or _peval(b, w) <= 0 or _peval(b, w / 2) <= 0:
            return False
        budget -= 1
        if budget < 0:
            raise CertificationError(f"positivity on [{lo}, {hi}] needs more than {SUBDIVISION_CAP} subdivisions")
        stack.append((mid, v))
        stack.append((u, mid))
    return True


def tail_point(a) -> Fraction:
    """Power of two T >= 1 with a_d x**d > sum_{k<d} |a_k| x**k for all x >= T."""
    d = len(a) - 1
    T = Fraction(1)
    while a[d] * T ** d <= sum(abs(a[k]) * T ** k for k in range(d)):
        T *= 2
    return T


def positive_on_ray(a, left: Fraction) -> bool:
    """Exact decision of a(x) > 0 for every x > left."""
    a = _trim([Fraction(c) for c in a])
    if len(a) == 1:
        return a[0] > 0
    if a[-1] < 0:
        return False
    while len(a) > 1 and _peval(a, left) == 0:
        a = _deflate(a, left)
    if _peval(a, left) < 0:
        return False
    if len(a) == 1:
        return True
    T = tail_point(a)
    if T <= left:
        return True
    return _positive_on_closed(a, left, T)


# --------------------------------------------------------------------------
# parsing


class _Tokens:
    def __init__(self, text: str, line: int = 1, col0: int = 1):
        self.items = []
        i, n = 0, len(text)
        while i < n:
            ch = text[i]
            col = col0 + i
            if ch.isspace():
                i += 1
            elif ch.isdigit():
                j = i
                while j < n and text[j].isdigit():
                    j += 1
                if j < n and text[j] == ".":
                    raise ParseError("decimal literals are not exact; write p/q", line, col0 + j)
                self.items.append(("num", int(text[i:j]), col))
                i = j
            elif ch.isalpha() or ch == "_":
                j = i
                while j < n and (text[j].isalnum() or text[j] == "_"):
                    j += 1
                self.items.append(("var", text[i:j], col))
                i = j
            elif text.startswith("**", i):
                self.items.append(("op", "^", col))
                i += 2
            elif ch in "+-*/^()":
                self.items.append(("op", ch, col))
                i += 1
            else:
                raise ParseError(f"unexpected character {ch!r}", line, col)
        self.end_col = col0 + n
        self.line = line
        self.pos = 0

    def peek(self):
        return self.items[self.pos] if self.pos < len(self.items) else ("end", None, self.end_col)

    def take(self):
        tok = self.peek()
        self.pos += 1
        return tok

    def error(self, message, tok=None):
        tok = tok or self.peek()
        return ParseError(message, self.line, tok[2])


# parsed polynomials are sparse dicts {((var, exp), ...): coefficient}


class _Parser:
    def __init__(self, toks: _Tokens, var_index):
        self.t = toks
        self.var_index = var_index

    def parse(self):
        expr = self.expr()
        tok = self.t.peek()
        if tok[0] != "end":
            raise self.t.error(f"unexpected {tok[1]!r}", tok)
        return expr

    def expr(self):
        acc = self.term()
        while self.t.peek()[:2] in (("op", "+"), ("op", "-")):
            op = self.t.take()[1]
            rhs = self.term()
            acc = _sadd(acc, rhs if op == "+" else _sscale(rhs, -1))
        return acc

    def term(self):
        acc = self.unary()
        while True:
            tok = self.t.peek()
            if tok[:2] == ("op", "*"):
                self.t.take()
                acc = _smul(acc, self.unary())
            elif tok[:2] == ("op", "/"):
                self.t.take()
                den_tok = self.t.peek()
                den = self.unary()
                if set(den) - {()} or not den.get((), 0):
                    raise self.t.error("division only by a nonzero constant", den_tok)
                acc = _sscale(acc, 1 / den[()])
            elif tok[0] in ("var", "num") or tok[:2] == ("op", "("):
                acc = _smul(acc, self.power())  # implicit product such as 2x
            else:
                return acc

    def unary(self):
        tok = self.t.peek()
        if tok[:2] == ("op", "-"):
            self.t.take()
            return _sscale(self.unary(), -1)
        if tok[:2] == ("op", "+"):
            self.t.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.t.peek()[:2] == ("op", "^"):
            self.t.take()
            tok = self.t.take()
            if tok[0] != "num":
                raise self.t.error("exponent must be a non-negative integer", tok)
            out = {(): Fraction(1)}
            for _ in range(tok[1]):
                out = _smul(out, base)
            return out
        return base

    def atom(self):
        tok = self.t.take()
        kind, val, col = tok
        if kind == "num":
            return {(): Fraction(val)}
        if kind == "var":
            idx = self.var_index(val)
            if idx is None:
                raise self.t.error(f"unknown variable {val!r}", tok)
            return {((idx, 1),): Fraction(1)}
        if tok[:2] == ("op", "("):
            inner = self.expr()
            close = self.t.take()
            if close[:2] != ("op", ")"):
                raise self.t.error("expected ')'", close)
            return inner
        if kind == "end":
            raise self.t.error("unexpected end of input", tok)
        raise self.t.error(f"unexpected {val!r}", tok)


def _norm(mono):
    acc: Dict[int, int] = {}
    for v, e in mono:
        acc[v] = acc.get(v, 0) + e
    return tuple(sorted((v, e) for v, e in acc.items() if e))


def _sadd(a, b):
    out = dict(a)
    for k, v in b.items():
        out[k] = out.get(k, 0) + v
    return {k: v for k, v in out.items() if v}


def _sscale(a, c):
    return {k: v * c for k, v in a.items() if v * c}


def _smul(a, b):
    out: Dict = {}
    for ka, va in a.items():
        for kb, vb in b.items():
            k = _norm(ka + kb)
            out[k] = out.get(k, 0) + va * vb
    return {k: v for k, v in out.items() if v}


def _univariate_index(name):
    return 0 if name in ("x", "t") else None


def _multivariate_index(name):
    if name.startswith("x") and name[1:].isdigit() and int(name[1:]) >= 1:
        return int(name[1:]) - 1
    return None


def _parse_sparse(text: str, index, line: int = 1, col0: int = 1):
    return _Parser(_Tokens(text, line, col0), index).parse()


def split_patterns(text: str) -> List[Tuple[str, int, int]]:
    """Split pattern text on ';' and newlines; '#' starts a comment.

    Returns (piece, line, column) triples for error reporting.
    """
    out = []
    for lineno, raw in enumerate(text.splitlines() or [""], start=1):
        body = raw.split("#", 1)[0]
        start = 0
        for piece in body.split(";"):
            if piece.strip():
                out.append((piece, lineno, start + 1))
            start += len(piece) + 1
    return out


# --------------------------------------------------------------------------
# univariate polynomials


@dataclass(frozen=True)
class Polynomial:
    """sum a_k x**k with exact rational coefficients, degree >= 1."""

    coefficients: Coeffs

    def __post_init__(self):
        c = tuple(_trim([Fraction(x) for x in self.coefficients]))
        if len(c) < 2:
            raise ConfigError("pattern polynomials must be non-constant")
        object.__setattr__(self, "coefficients", c)

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def leading(self) -> Fraction:
        return self.coefficients[-1]

    def __call__(self, x) -> Fraction:
        return _peval(self.coefficients, Fraction(x))

    def to_text(self) -> str:
        return format_polynomial(self.coefficients)

    def __str__(self) -> str:
        return self.to_text()

    def to_json(self) -> dict:
        return {"text": self.to_text(), "coefficients": [format_rational(c) for c in self.coefficients]}

    @classmethod
    def from_json(cls, data) -> "Polynomial":
        if isinstance(data, str):
            return parse_polynomial(data)
        return cls(tuple(parse_rational(c) for c in data["coefficients"]))


def _fmt_coeff(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def format_polynomial(coeffs: Sequence[Fraction], var: str = "x") -> str:
    parts = []
    for k, c in enumerate(coeffs):
        if c == 0:
            continue
        mag = abs(c)
        mono = "" if k == 0 else (var if k == 1 else f"{var}^{k}")
        if not mono:
            body = _fmt_coeff(mag)
        elif mag == 1:
            body = mono
        else:
            body = f"{_fmt_coeff(mag)}*{mono}"
        if not parts:
            parts.append(body if c > 0 else f"-{body}")
        else:
            parts.append(f" + {body}" if c > 0 else f" - {body}")
    return "".join(parts) or "0"


def parse_polynomial(text: str, line: int = 1, column: int = 1) -> Polynomial:
    """Parse a univariate polynomial in x such as ``"-100 + x^2"`` or ``"x^3-5x"``."""
    sparse = _parse_sparse(text, _univariate_index, line, column)
    deg = max((dict(k).get(0, 0) for k in sparse), default=0)
    coeffs = [Fraction(0)] * (deg + 1)
    for k, v in sparse.items():
        coeffs[dict(k).get(0, 0)] += v
    if deg < 1:
        raise ParseError("pattern polynomials must be non-constant", line, column)
    return Polynomial(tuple(coeffs))


def parse_pattern(text: str) -> List[Polynomial]:
    return [parse_polynomial(p, ln, col) for p, ln, col in split_patterns(text)]


# --------------------------------------------------------------------------
# conjugators


@dataclass(frozen=True)
class Conjugator:
    """psi(x) = q * (sign * x)**(1/n) on sign * x >= 0."""

    q: Dyadic
    n: int
    sign: int

    def __post_init__(self):
        if self.q.mantissa <= 0:
            raise ConfigError("q must be positive")
        if self.n < 1 or self.sign not in (1, -1):
            raise ConfigError("need n >= 1 and sign = +-1")

    @property
    def qf(self) -> Fraction:
        return self.q.to_fraction()

    def to_json(self) -> dict:
        return {"q": format_rational(self.qf), "n": self.n, "sign": self.sign}


def conjugator_bracket(P: Polynomial, tol: Fraction = Fraction(1, 1 << 64)) -> RationalInterval:
    """Certified sub-bracket of [1/(2 r), 3/(4 r)] with r = |a_n|**(1/n)."""
    r = iv_nth_root(RationalInterval.point(abs(P.leading)), P.degree, tol)
    lo, hi = 1 / (2 * r.lo), Fraction(3) / (4 * r.hi)
    if lo > hi:
        raise CertificationError("root enclosure too wide to separate the conjugator bracket")
    return RationalInterval(lo, hi)


def choose_conjugator(P: Polynomial) -> Conjugator:
    """Dyadic q with the fewest fractional bits in the bracket, nearest its midpoint."""
    br = conjugator_bracket(P)
    mid = br.mid
    k = 0
    while True:
        scale = 1 << k
        first = math.ceil(br.lo * scale)
        last = math.floor(br.hi * scale)
        if first <= last:
            j = min(range(first, last + 1), key=lambda j: (abs(Fraction(j, scale) - mid), j))
            q = Dyadic.from_fraction(Fraction(j, scale))
            break
        k += 1
    qf, n, a = q.to_fraction(), P.degree, abs(P.leading)
    if not ((2 * qf) ** n * a >= 1 and (4 * qf / 3) ** n * a <= 1):
        raise CertificationError("conjugator failed its exact bracket check")
    return Conjugator(q=q, n=n, sign=1 if P.leading > 0 else -1)


# --------------------------------------------------------------------------
# thresholds and the conjugated map


def threshold_polynomials(P: Polynomial, psi: Conjugator) -> Dict[str, List[Fraction]]:
    """Q, Q', G1, G2 whose positivity on (M - 1, inf) gives (M1) and (M2)."""
    n, q = psi.n, psi.qf
    Q = _pscale(P.coefficients, psi.sign)
    dQ = _pderiv(Q)
    dQn = _ppow(dQ, n)
    Qn1 = _pscale(_ppow(Q, n - 1), n ** n)
    return {
        "Q": Q,
        "dQ": dQ,
        "G1": _padd(_pscale(dQn, (4 * q) ** n), _pscale(Qn1, -1)),
        "G2": _padd(Qn1, _pscale(dQn, -(q ** n))),
    }


@dataclass(frozen=True)
class ConjugatedMap:
    """g = psi o P restricted to [M_P, inf); bilipschitz with constants (1/4, 1)."""

    P: Polynomial
    psi: Conjugator
    M_P: int
    tail: Fraction = field(default=Fraction(1), compare=False)

    derivative_bounds = (Fraction(1, 4), Fraction(1))

    @property
    def Q(self) -> List[Fraction]:
        return _pscale(self.P.coefficients, self.psi.sign)

    def level(self, x: Fraction) -> Fraction:
        """Q(x) = |P(x)| on the certified domain."""
        return self.psi.sign * self.P(x)

    def target(self, y: Fraction) -> Fraction:
        """(y / q)**n, the level value g**-1 has to reach."""
        if y < 0:
            raise BracketError("g takes non-negative values only")
        return (y / self.psi.qf) ** self.psi.n

    def to_json(self) -> dict:
        out = self.P.to_json()
        out.update(self.psi.to_json())
        out["M_P"] = self.M_P
        return out

    @classmethod
    def from_json(cls, data: dict) -> "ConjugatedMap":
        P = Polynomial.from_json(data)
        psi = Conjugator(Dyadic.from_fraction(parse_rational(data["q"])), int(data["n"]), int(data["sign"]))
        if psi.n != P.degree or psi.sign != (1 if P.leading > 0 else -1):
            raise ConfigError("conjugator does not match its polynomial")
        return cls(P, psi, int(data["M_P"]))


def _threshold_ok(polys, M: int) -> bool:
    return all(positive_on_ray(polys[k], Fraction(M - 1)) for k in ("Q", "dQ", "G1", "G2"))


def compute_threshold(P: Polynomial, psi: Optional[Conjugator] = None, cap: int = THRESHOLD_CAP) -> ConjugatedMap:
    """Least integer M_P >= 1 with (M1) and (M2) certified on (M_P - 1, inf)."""
    if psi is None:
        psi = choose_conjugator(P)
    if psi.n != P.degree:
        raise ConfigError("conjugator root order must equal the degree")
    polys = threshold_polynomials(P, psi)
    if _threshold_ok(polys, 1):
        M = 1
    else:
        lo, hi = 1, 2
        while not _threshold_ok(polys, hi):
            lo, hi = hi, hi * 2
            if hi > cap:
                raise CertificationError(f"no threshold certified below {cap} for {P}")
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if _threshold_ok(polys, mid):
                hi = mid
            else:
                lo = mid
        M = hi
    T = max(tail_point(polys[k]) if len(polys[k]) > 1 else Fraction(1) for k in polys)
    return ConjugatedMap(P=P, psi=psi, M_P=M, tail=T)


def conjugate_polynomial(P: Polynomial) -> ConjugatedMap:
    return compute_threshold(P, choose_conjugator(P))


def _root_tol(cm: ConjugatedMap, tol: Fraction) -> Fraction:
    q = cm.psi.qf
    return tol / q if q > 1 else tol


def g_point(cm: ConjugatedMap, x, tol: Fraction = Fraction(1, 1 << 64)) -> RationalInterval:
    x = Fraction(x)
    if x < cm.M_P:
        raise DomainError(f"{x} is below the certified domain [{cm.M_P}, inf)")
    r = iv_nth_root(RationalInterval.point(cm.level(x)), cm.psi.n, _root_tol(cm, tol))
    return iv_scale(r, cm.psi.qf)


def g_forward(cm: ConjugatedMap, x: RationalInterval, tol: Fraction = Fraction(1, 1 << 64)) -> RationalInterval:
    """Enclosure of g(x); g is increasing so the endpoints suffice."""
    if x.lo < cm.M_P:
        raise DomainError(f"{x} leaves the certified domain [{cm.M_P}, inf)")
    return RationalInterval(g_point(cm, x.lo, tol).lo, g_point(cm, x.hi, tol).hi)


def _search_range(cm: ConjugatedMap, y: RationalInterval) -> RationalInterval:
    lo_target = cm.target(y.lo)
    if cm.level(Fraction(cm.M_P)) > lo_target:
        raise BracketError(f"{y} reaches below g(M_P)")
    hi_target = cm.target(y.hi)
    b = Fraction(1 << max(1, cm.M_P.bit_length()))
    while cm.level(b) < hi_target:
        b *= 2
    return RationalInterval(Fraction(cm.M_P), b)


def _level_map(cm: ConjugatedMap):
    return lambda x: RationalInterval.point(cm.level(x))


def g_inverse(cm: ConjugatedMap, y: RationalInterval, tol: Fraction = Fraction(1, 1 << 64),
              search: Optional[RationalInterval] = None) -> RationalInterval:
    """Outer enclosure of g**-1(y); each endpoint within tol/2 of the exact one."""
    target = RationalInterval(cm.target(y.lo), cm.target(y.hi))
    return monotone_inverse(_level_map(cm), target, search or _search_range(cm, y), tol)


def g_inverse_inner(cm: ConjugatedMap, y: RationalInterval, tol: Fraction = Fraction(1, 1 << 64),
                    search: Optional[RationalInterval] = None) -> RationalInterval:
    """Inner enclosure: every point of the result maps into y."""
    target = RationalInterval(cm.target(y.lo), cm.target(y.hi))
    return monotone_inverse_inner(_level_map(cm), target, search or _search_range(cm, y), tol)


def derivative_enclosure(cm: ConjugatedMap, x, tol: Fraction = Fraction(1, 1 << 64)) -> RationalInterval:
    """Enclosure of g'(x) = q Q'(x) / (n Q(x)**((n-1)/n)) at a rational x > M_P - 1."""
    x = Fraction(x)
    n, q = cm.psi.n, cm.psi.qf
    Q = cm.level(x)
    dQ = _peval(_pderiv(cm.Q), x)
    if Q <= 0:
        raise DomainError(f"{x} is outside the certified domain")
    if n == 1:
        return RationalInterval.point(q * dQ)
    # g'(x)**n = (q Q')**n / (n**n Q**(n-1)) exactly; only the root adds slack
    lhs = (q * dQ) ** n / (n ** n * Q ** (n - 1))
    return iv_nth_root(RationalInterval.point(lhs), n, tol)


# --------------------------------------------------------------------------
# affine maps on the image side


@dataclass(frozen=True)
class AffineMap:
    """f(x) = slope * x + intercept, optionally paired with psi(x) = lam * x."""

    slope: Fraction
    intercept: Fraction = Fraction(0)
    lam: Optional[Dyadic] = None

    def __post_init__(self):
        object.__setattr__(self, "slope", Fraction(self.slope))
        object.__setattr__(self, "intercept", Fraction(self.intercept))
        if self.slope == 0:
            raise ConfigError("affine pattern maps need a non-zero slope")

    @property
    def composite_slope(self) -> Fraction:
        if self.lam is None:
            raise ConfigError("map has no conjugating scale yet")
        return self.slope * self.lam.to_fraction()

    def __call__(self, x) -> Fraction:
        return self.slope * Fraction(x) + self.intercept

    def g(self, x) -> Fraction:
        """(f o psi)(x) = slope * lam * x + intercept."""
        return self.composite_slope * Fraction(x) + self.intercept

    def g_image(self, x: RationalInterval) -> RationalInterval:
        a, b = self.g(x.lo), self.g(x.hi)
        return RationalInterval(min(a, b), max(a, b))

    def g_preimage(self, y) -> Fraction:
        return (Fraction(y) - self.intercept) / self.composite_slope

    def to_text(self) -> str:
        return format_polynomial((self.intercept, self.slope))

    def to_json(self) -> dict:
        out = {"text": self.to_text(), "slope": format_rational(self.slope),
               "intercept": format_rational(self.intercept)}
        if self.lam is not None:
            out["lambda"] = format_rational(self.lam.to_fraction())
        return out

    @classmethod
    def from_json(cls, data: dict) -> "AffineMap":
        lam = Dyadic.from_fraction(parse_rational(data["lambda"])) if "lambda" in data else None
        return cls(parse_rational(data["slope"]), parse_rational(data["intercept"]), lam)


def conjugate_bilipschitz(f: AffineMap, L: int) -> AffineMap:
    """Pair f with the least power of two lam making 1 <= |slope| lam <= L."""
    if L < 2:
        raise ConfigError("L must be at least 2")
    s = abs(f.slope)
    e = 0
    while s * Fraction(2) ** e < 1:
        e += 1
    while s * Fraction(2) ** (e - 1) >= 1:
        e -= 1
    lam = Dyadic(1, e)
    c = s * lam.to_fraction()
    if not (1 <= c <= L):
        raise ConfigError(f"no dyadic scale puts |slope| * lam inside [1, {L}]")
    return AffineMap(f.slope, f.intercept, lam)


def parse_affine(text: str, line: int = 1, column: int = 1) -> AffineMap:
    sparse = _parse_sparse(text, _univariate_index, line, column)
    if any(dict(k).get(0, 0) > 1 for k in sparse):
        raise ParseError("image-mode maps must be affine", line, column)
    slope = sparse.get(((0, 1),), Fraction(0))
    if slope == 0:
        raise ParseError("affine map needs a non-zero slope", line, column)
    return AffineMap(slope, sparse.get((), Fraction(0)))


def parse_affine_pattern(text: str) -> List[AffineMap]:
    return [parse_affine(p, ln, col) for p, ln, col in split_patterns(text)]


# --------------------------------------------------------------------------
# multivariate reduction


@dataclass(frozen=True)
class MultiPolynomial:
    """Sparse polynomial in x1..xN: terms maps exponent tuples to coefficients."""

    nvars: int
    terms: Tuple[Tuple[Tuple[int, ...], Fraction], ...]

    def __post_init__(self):
        clean = tuple(sorted((tuple(e), Fraction(c)) for e, c in self.terms if c != 0))
        if any(len(e) != self.nvars for e, _ in clean):
            raise ConfigError("exponent tuples must have one entry per variable")
        object.__setattr__(self, "terms", clean)
        if self.total_degree < 1:
            raise ConfigError("polynomials must be non-constant")

    @property
    def total_degree(self) -> int:
        return max((sum(e) for e, _ in self.terms), default=0)

    def top_form(self, lambdas: Sequence[Fraction]) -> Fraction:
        """Leading form evaluated at (1, lambda_2, ..., lambda_N)."""
        d = self.total_degree
        pt = (Fraction(1),) + tuple(Fraction(x) for x in lambdas)
        acc = Fraction(0)
        for e, c in self.terms:
            if sum(e) == d:
                v = c
                for xi, k in zip(pt, e):
                    v *= xi ** k
                acc += v
        return acc

    def substitute(self, lambdas: Sequence[Fraction]) -> List[Fraction]:
        """Coefficients of P(t, lambda_2 t, ..., lambda_N t)."""
        pt = (Fraction(1),) + tuple(Fraction(x) for x in lambdas)
        out = [Fraction(0)] * (self.total_degree + 1)
        for e, c in self.terms:
            v = c
            for xi, k in zip(pt, e):
                v *= xi ** k
            out[sum(e)] += v
        return _trim(out)

    def to_text(self) -> str:
        parts = []
        for e, c in sorted(self.terms, key=lambda t: (sum(t[0]), t[0])):
            mono = "*".join(f"x{i + 1}" + (f"^{k}" if k > 1 else "") for i, k in enumerate(e) if k)
            mag = abs(c)
            body = (_fmt_coeff(mag) if not mono else mono if mag == 1 else f"{_fmt_coeff(mag)}*{mono}")
            if not parts:
                parts.append(body if c > 0 else f"-{body}")
            else:
                parts.append(f" + {body}" if c > 0 else f" - {body}")
        return "".join(parts)


def parse_multivariate(text: str, nvars: Optional[int] = None, line: int = 1, column: int = 1) -> MultiPolynomial:
    sparse = _parse_sparse(text, _multivariate_index, line, column)
    used = max((v + 1 for k in sparse for v, _ in k), default=1)
    n = max(used, nvars or 1)
    terms = []
    for k, c in sparse.items():
        e = [0] * n
        for v, p in k:
            e[v] = p
        terms.append((tuple(e), c))
    try:
        return MultiPolynomial(n, tuple(terms))
    except ConfigError as exc:
        raise ParseError(str(exc), line, column) from None


def parse_multivariate_batch(text: str) -> List[MultiPolynomial]:
    pieces = split_patterns(text)
    polys = [parse_multivariate(p, None, ln, col) for p, ln, col in pieces]
    n = max((p.nvars for p in polys), default=1)
    return [parse_multivariate(p, n, ln, col) for p, ln, col in pieces]


def _lattice(dim: int) -> Iterable[Tuple[int, ...]]:
    """Positive integer tuples by growing box radius, lexicographic in each shell."""
    if dim == 0:
        yield ()
        return
    r = 1
    while True:
        for t in itertools.product(range(1, r + 1), repeat=dim):
            if max(t) == r:
                yield t
        r += 1


def reduce_multivariate(polys: Sequence[MultiPolynomial]) -> Tuple[Tuple[Fraction, ...], List[Polynomial]]:
    """Find lambda_2..lambda_N keeping every top-degree form non-zero."""
    if not polys:
        raise ConfigError("nothing to reduce")
    n = max(p.nvars for p in polys)
    polys = [p if p.nvars == n else MultiPolynomial(n, tuple((e + (0,) * (n - p.nvars), c) for e, c in p.terms))
             for p in polys]
    for lam in _lattice(n - 1):
        lams = tuple(Fraction(x) for x in lam)
        if all(p.top_form(lams) != 0 for p in polys):
            return lams, [Polynomial(tuple(p.substitute(lams))) for p in polys]
    raise AssertionError("unreachable: the lattice search is exhaustive")
