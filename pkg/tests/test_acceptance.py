"""Acceptance criteria; the terminal summary prints one PASS/FAIL line per criterion."""

import itertools
import math
import random
import time
from dataclasses import replace
from fractions import Fraction

import mpmath
import numpy as np
import pytest
import sympy

from helpers import greedy, image_spec, preimage_spec, seq_from_exponents
from hpatterns.construction import (
    build_delta_sequence,
    check_schedule_fit,
    grid_level,
    pair_index,
    schedule,
)
from hpatterns.cover import certify_measure_decay
from hpatterns.dimfun import DimensionFunction, parse_dimension_function
from hpatterns.maps import MultiPolynomial, Polynomial, compute_threshold, reduce_multivariate
from hpatterns.numerics import RationalInterval as I
from hpatterns.verify import check_delta_sequence, verify_certificate
from hpatterns.witness import WitnessCertificate, search_pattern

pytestmark = pytest.mark.acceptance

F = Fraction
CONFIGS = [(h, L, N) for h in ("pow:1/2", "pow:1/4", "loginv") for L in (2, 3) for N in (1, 2)]
CONFIG_IDS = [f"{h}-L{L}-N{N}" for h, L, N in CONFIGS]


# -- 1 ------------------------------------------------------------------------

@pytest.mark.criterion(1)
@pytest.mark.parametrize("h,L,N", CONFIGS, ids=CONFIG_IDS)
def test_delta_sequence_replay(h, L, N):
    start = time.perf_counter()
    hf = parse_dimension_function(h)
    seq = build_delta_sequence(hf, L, N, 12)
    report = check_delta_sequence(seq, hf)
    assert report.ok, report.failures
    assert report.checked == 1 + 12 + 12 * 13 // 2
    assert time.perf_counter() - start < 10


# -- 2 ------------------------------------------------------------------------

OWNER_SETS = [s for k in range(1, 5) for s in itertools.combinations((1, 2, 3, 4), k)]


@pytest.mark.criterion(2)
@pytest.mark.parametrize("h,L,N", CONFIGS, ids=CONFIG_IDS)
def test_nesting_fit_all_schedules(h, L, N):
    seq = build_delta_sequence(parse_dimension_function(h), L, N, 12)
    checked = 0
    for owners in OWNER_SETS:
        for depth in range(1, 9):
            entries = [e for e in schedule(owners, depth) if e.m <= seq.depth]
            assert check_schedule_fit(seq, entries) == [], (owners, depth)
            checked += max(0, len(entries) - 1)
    assert checked > 0


# -- 3 ------------------------------------------------------------------------

def _maps_into(cm, t, C):
    """g(t) in C decided exactly: (C.lo/q)^n <= |P(t)| <= (C.hi/q)^n."""
    q, n = cm.psi.qf, cm.psi.n
    v = cm.psi.sign * sum(c * t ** k for k, c in enumerate(cm.P.coefficients))
    return (C.lo / q) ** n <= v <= (C.hi / q) ** n


def _check_end_to_end(cert, L):
    seq = cert.spec.deltas
    steps = cert.steps
    for a, b in zip(steps, steps[1:]):
        assert a.X.lo < b.X.lo and b.X.hi < a.X.hi
    assert cert.final.width <= L * seq.delta(steps[-1].m)
    assert verify_certificate(cert).ok
    t = cert.final.mid
    for s in steps:
        assert _maps_into(cert.spec.map_for(s.owner), t, s.C)


@pytest.mark.criterion(3)
def test_polynomial_pattern_end_to_end():
    start = time.perf_counter()
    seq = greedy(4, 4)
    cert = search_pattern(preimage_spec(["x", "2*x+1", "x^2", "x^3 - 5*x"], seq, 4))
    _check_end_to_end(cert, 4)
    assert time.perf_counter() - start < 60


@pytest.mark.criterion(3)
def test_polynomial_pattern_all_owners_reached():
    # at depth 4 the schedule is m = 1, 2, 3, 4, so owner 4 (first level 8) is only reached deeper
    seq = greedy(4, 8)
    cert = search_pattern(preimage_spec(["x", "2*x+1", "x^2", "x^3 - 5*x"], seq, 8))
    assert {s.owner for s in cert.steps} == {1, 2, 3, 4}
    _check_end_to_end(cert, 4)


# -- 4 ------------------------------------------------------------------------

def _rasterize(seq, cert, lo, hi, bits=24):
    """Feasible mesh points t = k/2^bits for {x, x^2}: both conjugated maps equal t/2."""
    ks = np.arange(int(lo * 2**bits), int(hi * 2**bits) + 1, dtype=np.int64)
    ok = np.ones(ks.shape, dtype=bool)
    for s in cert.steps:
        g = grid_level(seq, s.m)
        p, d = g.period * 2 ** (bits + 1), g.delta * 2 ** (bits + 1)
        assert p.denominator == 1 and d.denominator == 1
        ok &= (ks % int(p)) <= int(d)  # t/2 = k/2^(bits+1) lies in F_m
    return ks, ok


@pytest.mark.criterion(4)
def test_rasterizer_agreement():
    start = time.perf_counter()
    seq = seq_from_exponents([0, 4, 8, 12], L=4)  # coarse: delta capped at 2^-12
    spec = preimage_spec(["x", "x^2"], seq, 2)
    assert all(cm.psi.qf == F(1, 2) and cm.M_P == 1 for cm in spec.maps)
    cert = search_pattern(spec)
    t0 = 4  # least t with |P_i(t)| >= max(R, L) = 4 for both maps
    ks, ok = _rasterize(seq, cert, F(t0), F(t0) + 1)
    assert ok.any()
    T = cert.final
    in_T = (ks >= math.ceil(T.lo * 2**24)) & (ks <= math.floor(T.hi * 2**24))
    assert (ok & in_T).any()
    assert ok[in_T].all()
    assert time.perf_counter() - start < 120


# -- 5 ------------------------------------------------------------------------

@pytest.mark.criterion(5)
def test_image_mode_affine_witness():
    seq = greedy(2, 5)
    cert = search_pattern(image_spec(["x", "x - 3/2"], seq, 4))
    assert verify_certificate(cert).ok
    y = cert.final.mid
    for s in cert.steps:
        f = cert.spec.map_for(s.owner)
        x = f.g_preimage(y)
        assert s.C.lo <= x <= s.C.hi
    # the witness y has y and y + 3/2 in the truncated image set
    assert cert.spec.maps[1](y + F(3, 2)) == y


# -- 6 ------------------------------------------------------------------------

@pytest.mark.criterion(6)
def test_measure_decay():
    seq = build_delta_sequence(DimensionFunction.power(F(1, 2)), 2, 1, 10)
    cov = certify_measure_decay(seq, DimensionFunction.power(F(1, 2)), 1, 1, 10)
    entry = pair_index(1, 1)
    assert cov.ok
    mpmath.mp.prec = 256
    ref = [r.M * mpmath.sqrt(mpmath.mpf(2) ** seq.deltas[r.n].exponent) for r in cov.rows]
    for r, v in zip(cov.rows, ref):
        if r.n >= entry:
            assert r.bound < F(1, r.n)
            assert v < mpmath.mpf(1) / r.n
        b = mpmath.mpf(r.bound.numerator) / r.bound.denominator
        assert 0 <= (b - v) / v <= mpmath.mpf(2) ** -64
    for i, j in itertools.combinations(range(len(ref)), 2):
        a, b = cov.rows[i].bound, cov.rows[j].bound
        if abs(ref[i] - ref[j]) > ref[i] * mpmath.mpf(2) ** -64:
            assert (a < b) == (ref[i] < ref[j])


# -- 7 ------------------------------------------------------------------------

def _random_polynomial(rng):
    deg = rng.randint(1, 4)
    coeffs = [F(rng.randint(-100, 100), 10) for _ in range(deg)]
    lead = F(0)
    while lead == 0:
        lead = F(rng.randint(-100, 100), 10)
    return Polynomial(tuple(coeffs) + (lead,))


@pytest.mark.criterion(7)
def test_derivative_certification():
    rng = random.Random(0)
    mpmath.mp.prec = 200
    slack = mpmath.mpf(2) ** -30
    for _ in range(20):
        P = _random_polynomial(rng)
        cm = compute_threshold(P)
        q = mpmath.mpf(cm.psi.qf.numerator) / cm.psi.qf.denominator
        n, s = cm.psi.n, cm.psi.sign
        a = [mpmath.mpf(c.numerator) / c.denominator for c in P.coefficients]
        for i in range(1, 1001):
            x = mpmath.mpf(cm.M_P - 1) + mpmath.mpf(i) * 1001 / 1000
            Q = s * mpmath.polyval(a[::-1], x)
            dQ = s * mpmath.polyval([k * a[k] for k in range(len(a) - 1, 0, -1)], x)
            assert Q > 0, (P, cm.M_P, x)
            d = q * dQ / (n * Q ** (mpmath.mpf(n - 1) / n))
            assert mpmath.mpf(1) / 4 - slack <= d <= 1 + slack, (P, cm.M_P, x, d)


# -- 8 ------------------------------------------------------------------------

def _random_bivariate(rng):
    while True:
        terms = {}
        for _ in range(rng.randint(1, 6)):
            i, j = rng.randint(0, 3), rng.randint(0, 3)
            if i + j <= 3:
                terms[(i, j)] = F(rng.randint(-9, 9), rng.randint(1, 5))
        terms = {e: c for e, c in terms.items() if c}
        if any(sum(e) > 0 for e in terms):
            return MultiPolynomial(2, tuple(terms.items()))


@pytest.mark.criterion(8)
def test_multivariate_reduction():
    rng = random.Random(0)
    polys = [_random_bivariate(rng) for _ in range(20)]
    lam, uni = reduce_multivariate(polys)
    x1, x2, t = sympy.symbols("x1 x2 t")
    l2 = sympy.Rational(lam[0].numerator, lam[0].denominator)
    for mp, up in zip(polys, uni):
        expr = sum(sympy.Rational(c.numerator, c.denominator) * x1 ** e[0] * x2 ** e[1] for e, c in mp.terms)
        sub = sympy.Poly(sympy.expand(expr.subs({x1: t, x2: l2 * t})), t)
        assert sub.degree() == sympy.Poly(expr, x1, x2).total_degree() == up.degree
        assert [F(int(c.p), int(c.q)) for c in reversed(sub.all_coeffs())] == list(up.coefficients)


# -- 9 ------------------------------------------------------------------------

def _certificates(rng, count):
    poly_pool = ["x", "2*x+1", "x^2", "x^3 - 5*x", "x^2 - 100", "-x^3 + 2", "1/3*x^2 + x", "-2*x"]
    affine_pool = ["x", "x - 3/2", "x + 1", "x/3", "5*x - 2", "2*x", "3/2*x + 7"]
    seq_p, seq_a = greedy(4, 6), greedy(2, 6)
    certs = []
    while len(certs) < count:
        k = rng.randint(1, 3)
        depth = rng.randint(1, 4)
        if rng.random() < 0.5:
            spec = preimage_spec(rng.sample(poly_pool, k), seq_p, depth)
        else:
            spec = image_spec(rng.sample(affine_pool, k), seq_a, depth)
        if max(e.m for e in spec.entries) > spec.deltas.depth:
            continue
        certs.append(search_pattern(spec))
    return certs


def _mutate(cert, rng):
    """Push one endpoint outward by 2^-60; returns (mutant, expected first-failure step)."""
    eps = F(1, 2**60)
    k = rng.randrange(len(cert.steps) + 1)
    side = rng.randint(0, 1)

    def out(iv):
        return I(iv.lo - eps, iv.hi) if side == 0 else I(iv.lo, iv.hi + eps)

    if k == len(cert.steps):
        mutant = WitnessCertificate(cert.spec, cert.steps, out(cert.final), cert.witness,
                                    cert.tolerance, cert.retries, cert.notes)
        return mutant, len(cert.steps) + 1
    field = rng.choice(["C", "X"])
    s = cert.steps[k]
    return cert.replace_step(k, replace(s, **{field: out(getattr(s, field))})), k + 1


@pytest.mark.criterion(9)
def test_mutation_soundness():
    rng = random.Random(0)
    certs = _certificates(rng, 100)
    assert all(verify_certificate(c).ok for c in certs)
    for c in certs:
        mutant, expected = _mutate(c, rng)
        res = verify_certificate(mutant)
        assert not res.ok
        assert res.failed_step == expected, (res, expected)
