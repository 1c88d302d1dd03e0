"""Command line: deltas, witness, certify-measure, reduce, verify.

Exit codes: 0 verified, 2 certification failure, 3 configuration or
validation failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from typing import Dict, Optional, Sequence

from .construction import DeltaSequence, build_delta_sequence
from .cover import certify_measure_decay, decimal_up
from .dimfun import parse_dimension_function
from .errors import (
    BracketError,
    CertificationError,
    ConfigError,
    ConstructionLimitError,
    DomainError,
    InfeasibleError,
    ParseError,
)
from .maps import (
    compute_threshold,
    conjugate_bilipschitz,
    parse_affine_pattern,
    parse_multivariate_batch,
    parse_pattern,
    reduce_multivariate,
)
from .numerics import RationalInterval, format_rational, parse_rational
from .verify import check_delta_sequence, verify_certificate
from .witness import IMAGE, PREIMAGE, PatternSpec, WitnessCertificate, search_pattern

EXIT_OK = 0
EXIT_CERT = 2
EXIT_CONFIG = 3


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


# --------------------------------------------------------------------------
# configuration


def read_config(path: str) -> Dict[str, str]:
    """key = value lines; '#' comments; values may be quoted."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    out: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if "=" not in line:
            col = len(raw) - len(raw.lstrip()) + 1
            raise ParseError("expected key = value", lineno, col)
        key, value = line.split("=", 1)
        key = key.strip().replace("-", "_")
        if not key.replace("_", "").isalnum():
            raise ParseError(f"bad key {key!r}", lineno, 1)
        value = value.strip()
        if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
            value = value[1:-1]
        out[key] = value
    return out


def _setting(args, cfg: Dict[str, str], name: str, default=None, conv=str):
    v = getattr(args, name, None)
    if v is not None:
        return v
    if name in cfg:
        try:
            return conv(cfg[name])
        except ValueError:
            raise ConfigError(f"config value {name} = {cfg[name]!r} is invalid") from None
    return default


def _require(value, name: str):
    if value is None:
        raise ConfigError(f"missing required setting --{name.replace('_', '-')}")
    return value


# --------------------------------------------------------------------------
# output


def write_atomic(path: str, text: str) -> None:
    """Write via a temporary file in the same directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_json(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON in {path}: {exc.msg}", exc.lineno, exc.colno) from None


def _load_deltas(path: str) -> DeltaSequence:
    return DeltaSequence.from_json(_load_json(path))


# --------------------------------------------------------------------------
# commands


def cmd_deltas(args, cfg) -> int:
    h = parse_dimension_function(_require(_setting(args, cfg, "h"), "h"))
    L = _require(_setting(args, cfg, "L", conv=int), "L")
    N = _setting(args, cfg, "N", 1, int)
    depth = _require(_setting(args, cfg, "depth", conv=int), "depth")
    out = _setting(args, cfg, "out", "deltas.json")
    try:
        seq = build_delta_sequence(h, L, N, depth)
    except ConstructionLimitError as exc:
        raise CliError(f"construction stopped: {exc}", EXIT_CERT) from None
    report = check_delta_sequence(seq, h)
    data = seq.to_json()
    data["verification"] = {
        "checker": "independent interval replay",
        "ok": report.ok,
        "checked": report.checked,
        "failures": list(report.failures),
    }
    write_atomic(out, json.dumps(data, indent=2, sort_keys=True) + "\n")
    print(f"wrote {out}: {len(seq.deltas)} scales for {h.label}, L={L}, N={N}")
    for row in seq.transcript:
        print(f"  delta_{row['m']} = 2^{row['exponent']}  (binding: {row['binding']})")
    print(f"replay: {report.checked} inequalities, {'all hold' if report.ok else 'FAILURES'}")
    for f in report.failures:
        print(f"  {f}")
    return EXIT_OK if report.ok else EXIT_CERT


def _pattern_text(args, cfg) -> str:
    path = _setting(args, cfg, "pattern_file")
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                return fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return _require(_setting(args, cfg, "pattern"), "pattern")


def _parse_owners(text: Optional[str], count: int) -> tuple:
    if not text:
        return tuple(range(1, count + 1))
    try:
        owners = tuple(int(x) for x in str(text).replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"owners must be integers: {text!r}") from None
    if len(owners) != count:
        raise ConfigError(f"{count} maps need {count} owners, got {len(owners)}")
    return owners


def _steps_csv(cert: WitnessCertificate) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("step", "m", "owner", "k", "grid_index", "C_lo", "C_hi", "X_lo", "X_hi", "X_mid_approx"))
    for i, s in enumerate(cert.steps, start=1):
        w.writerow((i, s.m, s.owner, s.k, s.grid_index, format_rational(s.C.lo), format_rational(s.C.hi),
                    format_rational(s.X.lo), format_rational(s.X.hi), decimal_up(s.X.mid)
                    if s.X.mid >= 0 else "-" + decimal_up(-s.X.mid)))
    return buf.getvalue()


def cmd_witness(args, cfg) -> int:
    seq = _load_deltas(_require(_setting(args, cfg, "deltas"), "deltas"))
    L = _setting(args, cfg, "L", conv=int)
    N = _setting(args, cfg, "N", conv=int)
    if L is not None and L != seq.L:
        raise ConfigError(f"L={L} does not match the delta sequence (L={seq.L})")
    if N is not None and N != seq.N:
        raise ConfigError(f"N={N} does not match the delta sequence (N={seq.N})")
    h = _setting(args, cfg, "h")
    if h is not None and seq.h_label and parse_dimension_function(h).label != seq.h_label:
        raise ConfigError(f"h={h} does not match the delta sequence (h={seq.h_label})")
    mode = _setting(args, cfg, "mode", PREIMAGE)
    if mode not in (PREIMAGE, IMAGE):
        raise ConfigError(f"mode must be {PREIMAGE} or {IMAGE}")
    depth = _require(_setting(args, cfg, "depth", conv=int), "depth")
    text = _pattern_text(args, cfg)
    if mode == PREIMAGE:
        maps = tuple(compute_threshold(P) for P in parse_pattern(text))
    else:
        maps = tuple(conjugate_bilipschitz(f, seq.L) for f in parse_affine_pattern(text))
    if not maps:
        raise ConfigError("empty pattern")
    owners = _parse_owners(_setting(args, cfg, "owners"), len(maps))
    spec = PatternSpec(mode, maps, owners, seq, depth)
    out = _setting(args, cfg, "out", "certificate.json")
    try:
        cert = search_pattern(spec)
    except (CertificationError, InfeasibleError) as exc:
        step = f" at step {exc.step}" if exc.step else ""
        raise CliError(f"search failed{step}: {exc}", EXIT_CERT) from None
    result = verify_certificate(cert)
    write_atomic(out, cert.dumps())
    steps_csv = _setting(args, cfg, "steps_csv")
    if steps_csv:
        write_atomic(steps_csv, _steps_csv(cert))
    print(f"wrote {out}: {mode} witness, {len(cert.steps)} steps, L={seq.L}")
    for g, r in zip(maps, owners):
        extra = f"M_P={g.M_P}, q={format_rational(g.psi.qf)}" if mode == PREIMAGE else \
            f"lambda={format_rational(g.lam.to_fraction())}"
        print(f"  map {r}: {g.P if mode == PREIMAGE else g.to_text()}  ({extra})")
    for s in cert.steps:
        print(f"  m={s.m:3d} owner={s.owner} grid_index={s.grid_index}")
    w = cert.witness
    print(f"witness ~ {decimal_up(w) if w >= 0 else '-' + decimal_up(-w)}  (exact {format_rational(w)})")
    print(f"verification: {result}")
    return EXIT_OK if result.ok else EXIT_CERT


def cmd_certify_measure(args, cfg) -> int:
    seq = _load_deltas(_require(_setting(args, cfg, "deltas"), "deltas"))
    h_text = _setting(args, cfg, "h") or seq.h_label
    h = parse_dimension_function(_require(h_text, "h"))
    N1 = _setting(args, cfg, "N1", 1, int)
    N2 = _setting(args, cfg, "N2", 1, int)
    levels = _setting(args, cfg, "levels", seq.depth, int)
    win = _setting(args, cfg, "window")
    window = None
    if win:
        parts = str(win).replace(",", " ").split()
        try:
            window = RationalInterval(parse_rational(parts[0]), parse_rational(parts[1]))
        except (IndexError, ValueError, DomainError):
            raise ConfigError(f"window must be 'lo,hi' with rational ends: {win!r}") from None
    out = _setting(args, cfg, "out", "cover.csv")
    try:
        cert = certify_measure_decay(seq, h, N1, N2, levels, window)
    except IndexError as exc:
        raise ConfigError(str(exc)) from None
    except ConstructionLimitError as exc:
        raise CliError(str(exc), EXIT_CERT) from None
    write_atomic(out, cert.to_csv())
    print(f"wrote {out}")
    print(cert.summary(), end="")
    return EXIT_OK if cert.ok else EXIT_CERT


def cmd_reduce(args, cfg) -> int:
    path = _setting(args, cfg, "input")
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    else:
        text = _require(_setting(args, cfg, "poly"), "poly")
    polys = parse_multivariate_batch(text)
    if not polys:
        raise ConfigError("no polynomials to reduce")
    lams, univariate = reduce_multivariate(polys)
    lam_text = ", ".join(str(x) if x.denominator == 1 else format_rational(x) for x in lams)
    lines = [f"# lambdas: ({lam_text})"]
    for src, P in zip(polys, univariate):
        lines.append(f"{P.to_text()}  # from {src.to_text()}")
    body = "\n".join(lines) + "\n"
    out = _setting(args, cfg, "out")
    if out:
        write_atomic(out, body)
        print(f"wrote {out}")
    print(f"lambda = ({lam_text})")
    for P in univariate:
        print(P.to_text())
    return EXIT_OK


def cmd_verify(args, cfg) -> int:
    path = _require(_setting(args, cfg, "cert"), "cert")
    cert = WitnessCertificate.from_json(_load_json(path))
    result = verify_certificate(cert)
    print(f"{path}: {result}")
    return EXIT_OK if result.ok else EXIT_CERT


# --------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    """Usage errors are configuration failures (exit 3), not argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="hpatterns", description=(
        "Certified finite-depth constructions of measure-zero sets containing polynomial patterns."))
    p.add_argument("--config", help="key = value file; command-line flags take precedence")
    p.add_argument("--seed", type=int, default=None, help="seed for randomized checks (default 0)")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("deltas", help="build and replay a delta sequence")
    d.add_argument("--h", help="dimension function: pow:a, loginv or powlog:a:b")
    d.add_argument("--L", type=int)
    d.add_argument("--N", type=int)
    d.add_argument("--depth", type=int)
    d.add_argument("--out")

    w = sub.add_parser("witness", help="search and verify a pattern witness")
    w.add_argument("--deltas", help="delta sequence JSON from the deltas command")
    w.add_argument("--pattern", help="maps separated by ';', e.g. 'x; 2*x+1; x^2'")
    w.add_argument("--pattern-file", dest="pattern_file")
    w.add_argument("--mode", choices=(PREIMAGE, IMAGE))
    w.add_argument("--owners", help="distinct owner indices, one per map (default 1..n)")
    w.add_argument("--depth", type=int)
    w.add_argument("--h")
    w.add_argument("--L", type=int)
    w.add_argument("--N", type=int)
    w.add_argument("--out")
    w.add_argument("--steps-csv", dest="steps_csv", help="also write the steps as CSV")

    c = sub.add_parser("certify-measure", help="per-level covering bounds as CSV")
    c.add_argument("--deltas")
    c.add_argument("--h")
    c.add_argument("--N1", type=int)
    c.add_argument("--N2", type=int)
    c.add_argument("--levels", type=int, help="certify levels 1..levels (default: all)")
    c.add_argument("--window", help="override the counting window, 'lo,hi'")
    c.add_argument("--out")

    r = sub.add_parser("reduce", help="reduce multivariate polynomials to one variable")
    r.add_argument("--input", help="file with one polynomial in x1..xN per line")
    r.add_argument("--poly", help="polynomials separated by ';'")
    r.add_argument("--out")

    v = sub.add_parser("verify", help="re-check a certificate file")
    v.add_argument("--cert")
    return p


COMMANDS = {
    "deltas": cmd_deltas,
    "witness": cmd_witness,
    "certify-measure": cmd_certify_measure,
    "reduce": cmd_reduce,
    "verify": cmd_verify,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = read_config(args.config) if args.config else {}
        args.seed = _setting(args, cfg, "seed", 0, int)
        return COMMANDS[args.command](args, cfg)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ConfigError, BracketError, DomainError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CertificationError, InfeasibleError, ConstructionLimitError) as exc:
        print(f"certification failed: {exc}", file=sys.stderr)
        return EXIT_CERT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
