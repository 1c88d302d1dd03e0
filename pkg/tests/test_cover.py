import csv
import io
from fractions import Fraction

import mpmath
import pytest

from helpers import greedy, seq_from_exponents
from hpatterns.construction import pair_index
from hpatterns.cover import (
    CERTIFIED,
    CSV_COLUMNS,
    UNCERTIFIED,
    certify_measure_decay,
    decimal_up,
)
from hpatterns.dimfun import DimensionFunction, parse_dimension_function
from hpatterns.errors import ConfigError
from hpatterns.numerics import RationalInterval as I

F = Fraction
HALF = DimensionFunction.power(F(1, 2))


@pytest.fixture(scope="module")
def seq10():
    return greedy(2, 10)


def test_unit_window_level_one_count():
    seq = seq_from_exponents([0, 3], L=2)
    cov = certify_measure_decay(seq, DimensionFunction.power(1), 1, 1, 1, window=I(0, 1))
    assert cov.rows[0].M in (4, 5)


def test_power_one_bound_is_plug_in():
    seq = seq_from_exponents([0, 3, 10], L=2)
    cov = certify_measure_decay(seq, DimensionFunction.power(1), 1, 2, 2)
    for r in cov.rows:
        assert r.bound == r.M * 2 * seq.delta(r.n)
        assert r.M <= 1 / seq.delta(r.n - 1) + 1


def test_decay_table_matches_256_bit_recompute(seq10):
    cov = certify_measure_decay(seq10, HALF, 1, 1, 10)
    assert cov.entry == pair_index(1, 1) == 1
    assert cov.ok
    mpmath.mp.prec = 256
    ref = []
    for r in cov.rows:
        d = mpmath.mpf(2) ** seq10.deltas[r.n].exponent
        ref.append(r.M * mpmath.sqrt(d))
        b = mpmath.mpf(r.bound.numerator) / r.bound.denominator
        assert b >= ref[-1]
        assert (b - ref[-1]) / ref[-1] <= mpmath.mpf(2) ** -64
        assert r.bound < F(1, r.n)
    bounds = [r.bound for r in cov.rows]
    for i in range(len(ref)):
        for j in range(len(ref)):
            # orderings agree wherever the high-precision values are separated
            if abs(ref[i] - ref[j]) > ref[i] * mpmath.mpf(2) ** -60:
                assert (bounds[i] < bounds[j]) == (ref[i] < ref[j])


def test_paper_bound_dominates(seq10):
    cov = certify_measure_decay(seq10, HALF, 1, 1, 10)
    for r in cov.rows:
        assert r.paper_bound >= r.bound


def test_uncertified_when_argument_exceeds_one():
    seq = seq_from_exponents([0, 3, 10], L=2)
    cov = certify_measure_decay(seq, HALF, 1, 16, 2)
    assert cov.rows[0].status == UNCERTIFIED and cov.rows[0].bound is None
    assert cov.rows[1].status != UNCERTIFIED


def test_entry_gates_the_verdict(seq10):
    cov = certify_measure_decay(seq10, HALF, 2, 3, 10)
    assert cov.entry == pair_index(2, 3)
    assert all(r.status == CERTIFIED for r in cov.rows if r.n >= cov.entry)
    assert cov.ok


def test_empty_range_header_only(seq10):
    cov = certify_measure_decay(seq10, HALF, 1, 1, 0)
    assert cov.rows == () and cov.to_csv().strip() == ",".join(CSV_COLUMNS)


def test_csv_columns(seq10):
    rows = list(csv.reader(io.StringIO(certify_measure_decay(seq10, HALF, 1, 1, 8).to_csv())))
    assert tuple(rows[0]) == CSV_COLUMNS and len(rows) == 9
    n, M, num, den, paper, status = rows[1]
    assert F(int(num), int(den)) > 0 and float(paper) > 0 and status == CERTIFIED


def test_powlog_sequence_certifies():
    h = parse_dimension_function("powlog:1/2:-1")
    from hpatterns.construction import build_delta_sequence
    seq = build_delta_sequence(h, 2, 1, 6)
    assert certify_measure_decay(seq, h, 1, 1, 6).ok


def test_bad_arguments(seq10):
    with pytest.raises(ConfigError):
        certify_measure_decay(seq10, HALF, 0, 1, 3)
    with pytest.raises(IndexError):
        certify_measure_decay(seq10, HALF, 1, 1, 11)


def test_decimal_up():
    assert decimal_up(F(1, 3), 3) == "3.34e-1"
    assert decimal_up(F(1)) == "1e0"
    assert float(decimal_up(F(2, 7))) >= 2 / 7
