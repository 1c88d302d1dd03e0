"""Nested-interval witness search and witness certificates.

Preimage mode (polynomial patterns): each map g = psi o P is increasing and
bilipschitz (1/4, 1) on its domain.  Step k picks a grid interval C_k of
F_{m_k} and records X_k, an inner enclosure of g_{m_k}^{-1}(C_k); every X_k
lies strictly inside the previous one, so any t in the last X maps into
every recorded C_m.

Image mode (affine patterns): g = f o psi is affine and non-contractive; X_k
is the exact image g_{m_k}(C_k) and the images are strictly nested, so any y
in the last X lies in every g_m(F_m).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple, Union

from .construction import DeltaSequence, GridLevel, ScheduleEntry, check_schedule_fit, grid_level, schedule
from .errors import CertificationError, ConfigError, InfeasibleError
from .maps import AffineMap, ConjugatedMap, g_inverse_inner, g_point
from .numerics import RationalInterval, format_rational, parse_rational

PREIMAGE = "preimage"
IMAGE = "image"

PatternMap = Union[ConjugatedMap, AffineMap]

#: retries of the tolerance ladder after the first attempt
LADDER_RETRIES = 8


@dataclass(frozen=True)
class PatternSpec:
    mode: str
    maps: Tuple[PatternMap, ...]
    owners: Tuple[int, ...]
    deltas: DeltaSequence
    depth: int

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))
        object.__setattr__(self, "owners", tuple(int(r) for r in self.owners))
        if self.mode not in (PREIMAGE, IMAGE):
            raise ConfigError(f"unknown mode {self.mode!r}")
        if not self.maps:
            raise ConfigError("a pattern needs at least one map")
        if len(self.owners) != len(self.maps):
            raise ConfigError("one owner index per map is required")
        if len(set(self.owners)) != len(self.owners) or min(self.owners) < 1:
            raise ConfigError("owner indices must be distinct positive integers")
        if self.depth < 1:
            raise ConfigError("depth must be at least 1")
        if self.mode == PREIMAGE:
            if not all(isinstance(g, ConjugatedMap) for g in self.maps):
                raise ConfigError("preimage mode takes polynomial maps")
            if self.deltas.L < 4:
                raise ConfigError("preimage mode needs L >= 4: the conjugated maps are bilipschitz (1/4, 1)")
        else:
            if not all(isinstance(g, AffineMap) and g.lam is not None for g in self.maps):
                raise ConfigError("image mode takes affine maps paired with a scale")
            for g in self.maps:
                if not 1 <= abs(g.composite_slope) <= self.deltas.L:
                    raise ConfigError(f"{g.to_text()}: |slope * lambda| must lie in [1, L]")
            signs = {g.composite_slope > 0 for g in self.maps}
            if len(signs) > 1:
                raise ConfigError("image-mode maps must all increase or all decrease; "
                                  "otherwise their images do not meet near infinity")
        if self.deltas.N != 1:
            raise ConfigError("witness search is implemented for N = 1 only")

    @property
    def entries(self) -> List[ScheduleEntry]:
        return schedule(self.owners, self.depth)

    def map_for(self, owner: int) -> PatternMap:
        return self.maps[self.owners.index(owner)]

    def to_json(self) -> dict:
        seq = self.deltas.to_json()
        seq.pop("transcript", None)
        return {
            "mode": self.mode,
            "L": self.deltas.L,
            "N": self.deltas.N,
            "depth": self.depth,
            "owners": list(self.owners),
            "maps": [g.to_json() for g in self.maps],
            "deltas": seq,
        }

    @classmethod
    def from_json(cls, data: dict) -> "PatternSpec":
        try:
            mode = data["mode"]
            load = ConjugatedMap.from_json if mode == PREIMAGE else AffineMap.from_json
            return cls(
                mode=mode,
                maps=tuple(load(m) for m in data["maps"]),
                owners=tuple(data["owners"]),
                deltas=DeltaSequence.from_json(data["deltas"]),
                depth=int(data["depth"]),
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed pattern spec: {exc}") from None


@dataclass(frozen=True)
class WitnessStep:
    m: int
    owner: int
    k: int
    grid_index: int
    C: RationalInterval
    X: RationalInterval

    def to_json(self) -> dict:
        return {"m": self.m, "owner": self.owner, "k": self.k, "grid_index": self.grid_index,
                "C": self.C.to_json(), "X": self.X.to_json()}

    @classmethod
    def from_json(cls, d: dict) -> "WitnessStep":
        return cls(int(d["m"]), int(d["owner"]), int(d.get("k", 0)), int(d["grid_index"]),
                   RationalInterval.from_json(d["C"]), RationalInterval.from_json(d["X"]))


@dataclass(frozen=True)
class WitnessCertificate:
    spec: PatternSpec
    steps: Tuple[WitnessStep, ...]
    final: RationalInterval
    witness: Fraction
    tolerance: Fraction = Fraction(0)
    retries: int = 0
    notes: Tuple[str, ...] = field(default=(), compare=False)

    def to_json(self) -> dict:
        return {
            "spec": self.spec.to_json(),
            "steps": [s.to_json() for s in self.steps],
            "final": self.final.to_json(),
            "witness": format_rational(self.witness),
            "tolerances": {"inverse": format_rational(self.tolerance), "retries": self.retries},
            "notes": list(self.notes),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2) + "\n"

    @classmethod
    def from_json(cls, data: dict) -> "WitnessCertificate":
        try:
            tol = data.get("tolerances", {})
            return cls(
                spec=PatternSpec.from_json(data["spec"]),
                steps=tuple(WitnessStep.from_json(s) for s in data["steps"]),
                final=RationalInterval.from_json(data["final"]),
                witness=parse_rational(data["witness"]),
                tolerance=parse_rational(tol.get("inverse", "0")),
                retries=int(tol.get("retries", 0)),
                notes=tuple(data.get("notes", ())),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed certificate: {exc}") from None

    def replace_step(self, index: int, step: WitnessStep) -> "WitnessCertificate":
        steps = list(self.steps)
        steps[index] = step
        return WitnessCertificate(self.spec, tuple(steps), self.final, self.witness,
                                  self.tolerance, self.retries, self.notes)


# --------------------------------------------------------------------------
# shared helpers


_NOTES = (
    "finite truncation: the schedule is followed to the stated depth only",
    "isolated points of the set are irrelevant at finite depth (perfecting step not materialized)",
)


def _grids(spec: PatternSpec, entries: Sequence[ScheduleEntry]) -> List[GridLevel]:
    top = entries[-1].m
    if top > spec.deltas.depth:
        raise ConfigError(f"the schedule reaches level {top} but the delta sequence stops at {spec.deltas.depth}")
    bad = check_schedule_fit(spec.deltas, entries)
    if bad:
        raise ConfigError(f"nesting fit fails between levels {bad[0][0]} and {bad[0][1]}")
    return [grid_level(spec.deltas, e.m) for e in entries]


def _domain_bound(spec: PatternSpec) -> int:
    """max(R, L): the maps' ranges are cut to values at least this large."""
    return max(max(spec.owners), spec.deltas.L)


# --------------------------------------------------------------------------
# preimage mode


def _start_point(maps: Sequence[ConjugatedMap], bound: int) -> int:
    """Least integer t >= max M_P with |P_i(t)| >= bound for every map."""
    lo = max(cm.M_P for cm in maps)

    def ok(t):
        return all(cm.level(Fraction(t)) >= bound for cm in maps)

    if ok(lo):
        return lo
    hi = lo + 1
    while not ok(hi):
        lo, hi = hi, hi + 2 * (hi - lo)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _upper_search(cm: ConjugatedMap, t0: int, C: RationalInterval) -> Fraction:
    target = cm.target(C.hi)
    b = Fraction(1 << max(1, t0.bit_length()))
    while cm.level(b) < target:
        b *= 2
    return b


def _exceeds(cm: ConjugatedMap, y: Fraction, x: Fraction) -> bool:
    """y > g(x), decided exactly."""
    return y > 0 and cm.target(y) > cm.level(x)


def _below(cm: ConjugatedMap, y: Fraction, x: Fraction) -> bool:
    """y < g(x), decided exactly."""
    return y < 0 or cm.target(y) < cm.level(x)


def _first_above(cm: ConjugatedMap, grid: GridLevel, x: Fraction, tol: Fraction) -> int:
    """Least grid index whose interval starts strictly above g(x)."""
    enc = g_point(cm, x, tol)
    k = grid.first_index_above(enc.lo)
    k_max = grid.first_index_above(enc.hi)
    while k < k_max and not _exceeds(cm, grid.interval(k).lo, x):
        k += 1
    return k


def _preimage_run(spec: PatternSpec, entries, grids, tol: Fraction) -> List[WitnessStep]:
    t0 = _start_point(spec.maps, _domain_bound(spec))
    steps: List[WitnessStep] = []
    X: Optional[RationalInterval] = None
    for pos, (entry, grid) in enumerate(zip(entries, grids), start=1):
        cm = spec.map_for(entry.owner)
        if X is None:
            idx = _first_above(cm, grid, Fraction(t0), tol)
            C = grid.interval(idx)
            search = RationalInterval(Fraction(t0), _upper_search(cm, t0, C))
        else:
            idx = _first_above(cm, grid, X.lo, tol)
            C = grid.interval(idx)
            if not _below(cm, C.hi, X.hi):
                raise InfeasibleError(
                    f"no interval of F_{entry.m} pulls back strictly inside X_{entries[pos - 2].m}", step=pos)
            search = X
        try:
            X_new = g_inverse_inner(cm, C, tol, search=search)
        except CertificationError as exc:
            raise CertificationError(str(exc), step=pos) from None
        if X is not None and not (X.lo < X_new.lo and X_new.hi < X.hi):
            raise CertificationError(f"strict nesting not certified at step {pos}", step=pos)
        X = X_new
        steps.append(WitnessStep(entry.m, entry.owner, entry.k, idx, C, X))
    return steps


def search_preimage_pattern(spec: PatternSpec, tol: Optional[Fraction] = None,
                            retries: int = LADDER_RETRIES) -> WitnessCertificate:
    """Find t with g_m(t) in a grid interval of F_m for every scheduled m."""
    if spec.mode != PREIMAGE:
        raise ConfigError("spec is not in preimage mode")
    entries = spec.entries
    grids = _grids(spec, entries)
    if tol is None:
        tol = min(spec.deltas.delta(entries[-1].m) / 1024, Fraction(1, 1 << 64))
    last: Optional[CertificationError] = None
    for attempt in range(retries + 1):
        try:
            steps = _preimage_run(spec, entries, grids, tol)
        except CertificationError as exc:
            last = exc
            tol /= 2
            continue
        final = steps[-1].X
        return WitnessCertificate(spec, tuple(steps), final, final.mid, tol, attempt, _NOTES)
    raise last


# --------------------------------------------------------------------------
# image mode


def search_image_pattern(spec: PatternSpec) -> WitnessCertificate:
    """Find y lying in g_m(F_m) for every scheduled m; all arithmetic is exact."""
    if spec.mode != IMAGE:
        raise ConfigError("spec is not in image mode")
    entries = spec.entries
    grids = _grids(spec, entries)
    bound = _domain_bound(spec)
    cuts = [g.g(Fraction(bound) / g.lam.to_fraction()) for g in spec.maps]
    increasing = spec.maps[0].composite_slope > 0
    y_start = max(cuts) if increasing else min(cuts)
    steps: List[WitnessStep] = []
    Y: Optional[RationalInterval] = None
    for pos, (entry, grid) in enumerate(zip(entries, grids), start=1):
        g = spec.map_for(entry.owner)
        if Y is None:
            idx = grid.first_index_above(g.g_preimage(y_start))
            C = grid.interval(idx)
        else:
            u, v = sorted((g.g_preimage(Y.lo), g.g_preimage(Y.hi)))
            idx = grid.first_index_above(u)
            C = grid.interval(idx)
            if not C.hi < v:
                raise InfeasibleError(
                    f"no interval of F_{entry.m} maps strictly inside the image at step {pos - 1}", step=pos)
        Y_new = g.g_image(C)
        if Y is not None and not (Y.lo < Y_new.lo and Y_new.hi < Y.hi):
            raise InfeasibleError(f"images not strictly nested at step {pos}", step=pos)
        Y = Y_new
        steps.append(WitnessStep(entry.m, entry.owner, entry.k, idx, C, Y))
    return WitnessCertificate(spec, tuple(steps), Y, Y.mid, Fraction(0), 0, _NOTES)


def search_pattern(spec: PatternSpec) -> WitnessCertificate:
    return search_preimage_pattern(spec) if spec.mode == PREIMAGE else search_image_pattern(spec)
