import itertools
import json
import time
from fractions import Fraction

import mpmath
import numpy as np
import pytest

from hpatterns.construction import (
    DeltaSequence,
    build_delta_sequence,
    check_schedule_fit,
    geometric_ok,
    grid_level,
    kset_intervals,
    nesting_fit,
    owner_of,
    pair_at,
    pair_index,
    schedule,
    sqrt_bounds,
)
from hpatterns.dimfun import DimensionFunction, parse_dimension_function
from hpatterns.errors import ConfigError, ConstructionLimitError
from hpatterns.numerics import Dyadic, RationalInterval as I
from hpatterns.verify import check_delta_sequence

F = Fraction


def seq_from_exponents(exps, L=2, N=1):
    return DeltaSequence(L=L, N=N, deltas=tuple(Dyadic(1, -e) for e in exps))


def test_pair_enumeration_order():
    assert [pair_at(i) for i in range(1, 7)] == [(1, 1), (1, 2), (2, 1), (1, 3), (2, 2), (3, 1)]
    for i in range(1, 500):
        assert pair_index(*pair_at(i)) == i


def test_sqrt_bounds():
    assert sqrt_bounds(4) == (2, 2)
    lo, hi = sqrt_bounds(2)
    assert lo * lo < 2 < hi * hi


def test_depth_zero():
    for label in ("pow:1/2", "loginv"):
        seq = build_delta_sequence(parse_dimension_function(label), 2, 1, 0)
        assert seq.deltas == (Dyadic(1, 0),)


def test_power_one_geometric_constraint():
    seq = build_delta_sequence(DimensionFunction.power(1), 2, 1, 1)
    assert seq.delta(1) <= F(1, 8)


def test_known_greedy_exponents():
    seq = build_delta_sequence(DimensionFunction.power(F(1, 2)), 2, 1, 10)
    assert [-d.exponent for d in seq.deltas] == [0, 3, 10, 26, 59, 126, 261, 531, 1072, 2155, 4321]


def test_greedy_choice_is_largest():
    h = DimensionFunction.power(F(1, 2))
    seq = build_delta_sequence(h, 2, 1, 6)
    for m in range(1, 7):
        larger = DeltaSequence(2, 1, seq.deltas[:m] + (Dyadic(1, seq.deltas[m].exponent + 1),))
        rep = check_delta_sequence(larger, h)
        assert not rep.ok


@pytest.mark.parametrize("label", ["pow:1/2", "pow:1/4", "powlog:1/2:-1"])
@pytest.mark.parametrize("L,N", [(2, 1), (3, 2)])
def test_independent_checker_replays(label, L, N):
    h = parse_dimension_function(label)
    seq = build_delta_sequence(h, L, N, 6)
    rep = check_delta_sequence(seq, h)
    assert rep.ok, rep.failures
    assert rep.checked == 1 + 6 + 6 * 7 // 2  # delta_0, geometric, indexed pairs


def test_geometric_decay_property():
    seq = build_delta_sequence(DimensionFunction.power(F(1, 2)), 3, 2, 8)
    s_lo, s_up = sqrt_bounds(2)
    for m in range(1, 9):
        assert seq.delta(m) / seq.delta(m - 1) <= 1 / (4 * 3 * s_up)
        assert geometric_ok(3, 2, seq.deltas[m - 1], seq.deltas[m])


def test_checker_rejects_tampering():
    h = DimensionFunction.power(F(1, 2))
    seq = build_delta_sequence(h, 2, 1, 4)
    bad = DeltaSequence(2, 1, seq.deltas[:2] + (Dyadic(1, -5),) + seq.deltas[3:])
    assert not check_delta_sequence(bad, h).ok


def test_loginv_hits_construction_limit():
    with pytest.raises(ConstructionLimitError):
        build_delta_sequence(DimensionFunction.log_inverse(), 2, 1, 4)


def test_json_round_trip():
    seq = build_delta_sequence(DimensionFunction.power(F(1, 2)), 2, 1, 4)
    data = json.loads(seq.dumps())
    assert data["deltas"][0] == "1*2^0"
    back = DeltaSequence.from_json(data)
    assert back == seq
    assert back.dumps() == seq.dumps()


def test_json_rejects_bad_start():
    with pytest.raises(ConfigError):
        DeltaSequence.from_json({"L": 2, "N": 1, "deltas": ["1*2^-1"]})


def test_grid_level_plug_in():
    g = grid_level(seq_from_exponents([0, 3]), 1)
    assert (g.delta, g.gap, g.period) == (F(1, 8), F(1, 8), F(1, 4))
    assert g.interval(2) == I(F(1, 2), F(5, 8))


def test_grid_level_out_of_range():
    seq = seq_from_exponents([0, 3])
    with pytest.raises(IndexError):
        grid_level(seq, 2)
    with pytest.raises(IndexError):
        grid_level(seq, 0)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_count_in_unit_window(n):
    g = grid_level(seq_from_exponents([0, 3, 6, 9]), n)
    c = g.count_meeting(I(0, 1))
    assert c in (int(1 / g.period), int(1 / g.period) + 1)
    assert c == len(list(g.intervals_meeting(I(0, 1))))


def test_intervals_disjoint_and_nonnegative():
    g = grid_level(seq_from_exponents([0, 3, 6]), 2)
    ivs = [iv for _, iv in g.intervals_meeting(I(0, 1))]
    assert ivs[0].lo == 0
    assert all(a.hi < b.lo for a, b in zip(ivs, ivs[1:]))


def test_gap_for_n_two_uses_upper_rounded_sqrt():
    seq = build_delta_sequence(DimensionFunction.power(F(1, 2)), 2, 2, 3)
    mpmath.mp.prec = 300
    r2 = mpmath.sqrt(2)
    lo = F(int(mpmath.floor(r2 * 2**100)), 2**100)  # independent lower enclosure of sqrt(2)
    for n in (1, 2, 3):
        g = grid_level(seq, n)
        assert g.gap * (4 * 2 * lo) >= seq.delta(n - 1)


def test_schedule_examples():
    assert [(e.m, e.owner) for e in schedule([1, 2], 5)] == [(1, 1), (2, 2), (3, 1), (5, 1), (6, 2)]
    assert [e.m for e in schedule([1], 3)] == [1, 3, 5]
    assert [e.m for e in schedule([3], 3)] == [4, 12, 20]


def test_schedule_duplicate_owners():
    with pytest.raises(ConfigError):
        schedule([2, 2], 3)


def test_owner_decomposition():
    for m in range(1, 300):
        r, k = owner_of(m)
        assert m == (2 * k - 1) * 2 ** (r - 1)


def test_nesting_fit_on_all_small_schedules():
    seq = build_delta_sequence(DimensionFunction.power(F(1, 2)), 2, 1, 10)
    for size in range(1, 4):
        for owners in itertools.combinations(range(1, 4), size):
            entries = [e for e in schedule(owners, 8) if e.m <= 10]
            assert check_schedule_fit(seq, entries) == []


def test_nesting_fit_fails_without_decay():
    # an equally spaced sequence violates the fit inequality
    assert not nesting_fit(seq_from_exponents([0, 3, 4, 5]), 1, 2)


def _raster(seq, levels, hi_bits=20):
    """Boolean membership of mesh points k/2^20 in every level (numpy integer arithmetic)."""
    scale = 1 << hi_bits
    x = np.arange(scale + 1, dtype=np.int64)
    inside = np.ones_like(x, dtype=bool)
    for n in levels:
        g = grid_level(seq, n)
        assert (g.period * scale).denominator == 1 and (g.delta * scale).denominator == 1
        p, d = int(g.period * scale), int(g.delta * scale)
        inside &= (x % p) <= d
    return inside


def test_kset_matches_rasterizer():
    seq = seq_from_exponents([0, 3, 6, 9, 12])
    comps = kset_intervals(seq, 1, 2, I(0, 1))
    inside = _raster(seq, [1, 3])
    mask = np.zeros_like(inside)
    for c in comps:
        assert (c.lo * 2**20).denominator == 1
        mask[int(c.lo * 2**20):int(c.hi * 2**20) + 1] = True
    assert np.array_equal(mask, inside)


def test_kset_truncation_one_is_a_grid_level():
    seq = seq_from_exponents([0, 3, 6, 9, 12])
    comps = kset_intervals(seq, 2, 1, I(0, 1))
    grid = [iv for _, iv in grid_level(seq, 2).intervals_meeting(I(0, 1))]
    assert len(comps) == len(grid)
    assert all(c == I(g.lo, min(g.hi, 1)) for c, g in zip(comps, grid))


def test_kset_window_below_zero():
    assert kset_intervals(seq_from_exponents([0, 3, 6]), 1, 1, I(-2, -1)) == []


def test_kset_refinement():
    seq = seq_from_exponents([0, 3, 6, 9, 12, 15, 18])
    prev = kset_intervals(seq, 1, 1, I(0, F(1, 2)))
    for t in (2, 3):
        cur = kset_intervals(seq, 1, t, I(0, F(1, 2)))
        for c in cur:
            assert any(p.lo <= c.lo and c.hi <= p.hi for p in prev)
        prev = cur


def test_kset_truncation_beyond_sequence():
    with pytest.raises(IndexError):
        kset_intervals(seq_from_exponents([0, 3, 6]), 1, 3, I(0, 1))


def test_construction_is_fast():
    t = time.perf_counter()
    build_delta_sequence(DimensionFunction.power(F(1, 4)), 3, 2, 12)
    assert time.perf_counter() - t < 10
