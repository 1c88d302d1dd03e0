"""Shared builders for the test suite."""

from fractions import Fraction

from hpatterns.construction import DeltaSequence, build_delta_sequence
from hpatterns.dimfun import DimensionFunction
from hpatterns.maps import conjugate_bilipschitz, conjugate_polynomial, parse_affine, parse_polynomial
from hpatterns.numerics import Dyadic
from hpatterns.witness import IMAGE, PREIMAGE, PatternSpec


def seq_from_exponents(exps, L=4, N=1):
    return DeltaSequence(L=L, N=N, deltas=tuple(Dyadic(1, -e) for e in exps))


def greedy(L, depth, alpha=Fraction(1, 2)):
    return build_delta_sequence(DimensionFunction.power(alpha), L, 1, depth)


def preimage_spec(texts, seq, depth, owners=None):
    maps = tuple(conjugate_polynomial(parse_polynomial(t)) for t in texts)
    owners = owners or tuple(range(1, len(maps) + 1))
    return PatternSpec(PREIMAGE, maps, owners, seq, depth)


def image_spec(texts, seq, depth, owners=None):
    maps = tuple(conjugate_bilipschitz(parse_affine(t), seq.L) for t in texts)
    owners = owners or tuple(range(1, len(maps) + 1))
    return PatternSpec(IMAGE, maps, owners, seq, depth)
