"""Certified finite-depth constructions of H^h-null sets containing patterns.

The pipeline is: build a delta sequence for a dimension function h, lay out
the grid levels F_n, and search nested grid intervals that realize a finite
polynomial (or affine) pattern.  Every result is a replayable certificate.
"""

from .construction import (
    DeltaSequence,
    GridLevel,
    ScheduleEntry,
    build_delta_sequence,
    grid_level,
    kset_intervals,
    nesting_fit,
    pair_at,
    pair_index,
    schedule,
)
from .cover import CoverCertificate, certify_measure_decay
from .dimfun import DimensionFunction, h_compare, h_enclose, h_upper, parse_dimension_function
from .errors import (
    BracketError,
    CertificationError,
    ConfigError,
    ConstructionLimitError,
    DomainError,
    InfeasibleError,
    ParseError,
    PatternError,
)
from .maps import (
    AffineMap,
    ConjugatedMap,
    Conjugator,
    MultiPolynomial,
    Polynomial,
    choose_conjugator,
    compute_threshold,
    conjugate_bilipschitz,
    g_forward,
    g_inverse,
    parse_multivariate,
    parse_polynomial,
    reduce_multivariate,
)
from .numerics import (
    Dyadic,
    Rational,
    RationalInterval,
    iv_add,
    iv_div,
    iv_mul,
    iv_nth_root,
    iv_sub,
    monotone_inverse,
)
from .verify import ReplayReport, VerifyResult, check_delta_sequence, verify_certificate
from .witness import (
    IMAGE,
    PREIMAGE,
    PatternSpec,
    WitnessCertificate,
    WitnessStep,
    search_image_pattern,
    search_preimage_pattern,
)

__version__ = "0.1.0"

__all__ = [
    "AffineMap",
    "BracketError",
    "CertificationError",
    "ConfigError",
    "ConjugatedMap",
    "Conjugator",
    "ConstructionLimitError",
    "CoverCertificate",
    "DeltaSequence",
    "DimensionFunction",
    "DomainError",
    "Dyadic",
    "GridLevel",
    "IMAGE",
    "InfeasibleError",
    "MultiPolynomial",
    "PREIMAGE",
    "ParseError",
    "PatternError",
    "PatternSpec",
    "Polynomial",
    "Rational",
    "RationalInterval",
    "ReplayReport",
    "ScheduleEntry",
    "VerifyResult",
    "WitnessCertificate",
    "WitnessStep",
    "build_delta_sequence",
    "certify_measure_decay",
    "check_delta_sequence",
    "choose_conjugator",
    "compute_threshold",
    "conjugate_bilipschitz",
    "g_forward",
    "g_inverse",
    "grid_level",
    "h_compare",
    "h_enclose",
    "h_upper",
    "iv_add",
    "iv_div",
    "iv_mul",
    "iv_nth_root",
    "iv_sub",
    "kset_intervals",
    "monotone_inverse",
    "nesting_fit",
    "pair_at",
    "pair_index",
    "parse_dimension_function",
    "parse_multivariate",
    "parse_polynomial",
    "reduce_multivariate",
    "schedule",
    "search_image_pattern",
    "search_preimage_pattern",
    "verify_certificate",
]
