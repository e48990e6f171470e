"""Command-line front end.

Exit codes: 0 success, 2 configuration error, 3 infeasible (cut certificate
written), 4 size guard, 5 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

from . import serialize
from .coupling import CutCertificate, construct_coupling, sample_coupled_pairs, verify_coupling
from .errors import (
    CouplingForgeError,
    CouplingViolationError,
    ParameterError,
    SearchExhaustedError,
    SizeLimitError,
)
from .pivot import find_threshold_x, pivot_mass_closed_form, probe_sequence
from .processes import ProcessFamily, verify_conditioning
from .rowclasses import DEFAULT_CLASS_LIMIT
from .structures import PRESETS, StructureSpec, count_structures, enumerate_column_labels

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_CUT = 3
EXIT_SIZE = 4
EXIT_VERIFY = 5

DEFAULT_SEED = 24301


class ConfigError(Exception):
    pass


class VerificationFailed(Exception):
    pass


@dataclass
class RunConfig:
    spec: StructureSpec | None
    x: object  # float, list of floats or "auto"
    tol: float
    seed: int
    fmt: str
    output: Path | None


def _parse_x(values):
    if values is None:
        return None
    if len(values) == 1 and values[0] == "auto":
        return "auto"
    try:
        return [float(v) for v in values]
    except ValueError:
        raise ConfigError(f"--x expects numbers or 'auto', got {' '.join(values)}") from None


def _load_spec(args) -> StructureSpec | None:
    if getattr(args, "spec", None):
        try:
            data = serialize.read_json(args.spec)
        except OSError as exc:
            raise ConfigError(f"cannot read structure spec: {exc}") from None
        return StructureSpec.from_dict(data)
    if getattr(args, "preset", None):
        if args.n is None:
            raise ConfigError("--preset needs --n")
        return StructureSpec.from_preset(args.preset, args.n)
    return None


def _config(args) -> RunConfig:
    spec = _load_spec(args)
    tol = args.tol
    if tol is None:
        tol = 1e-9 if args.func is cmd_conditioning else 1e-8
    if not tol > 0:
        raise ConfigError(f"--tol must be positive, got {tol}")
    return RunConfig(
        spec=spec,
        x=_parse_x(getattr(args, "x", None)),
        tol=tol,
        seed=args.seed,
        fmt=args.format,
        output=Path(args.output) if args.output else None,
    )


def _require_spec(cfg):
    if cfg.spec is None:
        raise ConfigError("give a structure with --preset NAME --n N or --spec FILE")
    return cfg.spec


def _emit(cfg: RunConfig, text: str):
    if cfg.output is None:
        sys.stdout.write(text)
    else:
        cfg.output.parent.mkdir(parents=True, exist_ok=True)
        cfg.output.write_text(text)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _figure_path(args, cfg):
    if getattr(args, "no_figure", False):
        return None
    if getattr(args, "figure", None):
        return Path(args.figure)
    if cfg.output is not None:
        return cfg.output.with_suffix(".png")
    return None


def _json_only(cfg, name):
    if cfg.fmt != "json":
        raise ConfigError(f"{name} writes JSON only")


def cmd_count(args, cfg):
    spec = _require_spec(cfg)
    k_n = count_structures(spec)
    if cfg.fmt == "csv":
        _emit(cfg, _csv(["n", "k_n"], [[spec.n, k_n]]))
    else:
        _emit(cfg, serialize.dumps({"structure": spec.to_dict(), "k_n": k_n}))
    return EXIT_OK


def cmd_labels(args, cfg):
    spec = _require_spec(cfg)
    k_n = count_structures(spec)
    labels = enumerate_column_labels(spec)
    if cfg.fmt == "csv":
        rows = [[str(lab), lab.multiplicity, repr(lab.multiplicity / k_n)] for lab in labels]
        _emit(cfg, _csv(["label", "multiplicity", "probability"], rows))
    else:
        items = [
            {"a": list(lab.a), "multiplicity": lab.multiplicity, "probability": lab.multiplicity / k_n}
            for lab in labels
        ]
        _emit(cfg, serialize.dumps({"structure": spec.to_dict(), "k_n": k_n, "labels": items}))
    return EXIT_OK


def cmd_pivot_mass(args, cfg):
    spec = _require_spec(cfg)
    if args.probe is not None:
        grid = probe_sequence(spec.kind, args.probe)
    elif cfg.x == "auto":
        grid = [find_threshold_x(spec).x]
    elif cfg.x:
        grid = cfg.x
    else:
        raise ConfigError("pivot-mass needs --x VALUES, --x auto or --probe T")
    labels = enumerate_column_labels(spec)
    rows = []
    for x in grid:
        fam = ProcessFamily(spec, x)
        for lab in labels:
            rows.append((fam.x, lab, pivot_mass_closed_form(fam, lab)))
    k_n = count_structures(spec)
    if cfg.fmt == "csv":
        text = _csv(
            ["x", "label", "multiplicity", "pivot_mass"],
            [[repr(x), str(lab), lab.multiplicity, repr(m)] for x, lab, m in rows],
        )
    else:
        text = serialize.dumps({
            "structure": spec.to_dict(),
            "k_n": k_n,
            "rows": [
                {"x": x, "label": list(lab.a), "multiplicity": lab.multiplicity, "pivot_mass": m}
                for x, lab, m in rows
            ],
        })
    _emit(cfg, text)
    fig = _figure_path(args, cfg)
    if fig is not None:
        from .plotting import plot_pivot_sweep

        plot_pivot_sweep(
            [(x, str(lab), lab.multiplicity, m) for x, lab, m in rows],
            spec.kind, k_n, fig, title=f"{spec.preset or spec.kind}, n = {spec.n}",
        )
    return EXIT_OK


def cmd_threshold(args, cfg):
    spec = _require_spec(cfg)
    result = find_threshold_x(spec, args.target)
    if cfg.fmt == "csv":
        _emit(cfg, _csv(["x", "max_mass", "target"], [[repr(result.x), repr(result.max_mass), repr(result.target)]]))
    else:
        _emit(cfg, serialize.dumps(result.to_dict()))
    return EXIT_OK


def _single_x(cfg, spec):
    if cfg.x in (None, "auto"):
        return find_threshold_x(spec).x
    if len(cfg.x) != 1:
        raise ConfigError("this command takes a single --x value")
    return cfg.x[0]


def cmd_conditioning(args, cfg):
    spec = _require_spec(cfg)
    fam = ProcessFamily(spec, _single_x(cfg, spec))
    report = verify_conditioning(fam, cfg.tol)
    if cfg.fmt == "csv":
        rows = [[str(lab), repr(e), repr(c), repr(r)] for lab, e, c, r in report.residuals]
        _emit(cfg, _csv(["label", "exact", "conditioned", "residual"], rows))
    else:
        _emit(cfg, serialize.dumps(report.to_dict()))
    return EXIT_OK if report.passed else EXIT_VERIFY


def cmd_couple(args, cfg):
    _json_only(cfg, "couple")
    spec = _require_spec(cfg)
    started = time.perf_counter()
    x = _single_x(cfg, spec)
    fam = ProcessFamily(spec, x)
    use_cache = not args.no_cache and serialize.cache_dir() is not None
    result = serialize.load_table_cache(spec, fam.x) if use_cache else None
    cached = result is not None
    if result is None:
        result = construct_coupling(fam, limit=args.limit)

    if isinstance(result, CutCertificate):
        _emit(cfg, serialize.dumps(serialize.cut_to_dict(result)))
        print(
            f"infeasible at x={fam.x!r}: flow {result.flow_value:.12g}, "
            f"nu(L)={result.nu_L:.6g} > mu={result.mu_reachable:.6g} over {len(result.labels)} labels "
            f"[{time.perf_counter() - started:.2f}s]",
            file=sys.stderr,
        )
        return EXIT_CUT

    report = verify_coupling(result, fam, cfg.tol)
    if not report.passed:
        print("coupling failed verification: " + "; ".join(report.problems), file=sys.stderr)
        return EXIT_VERIFY
    if use_cache and not cached:
        serialize.save_table_cache(result)
    _emit(cfg, serialize.dumps(serialize.table_to_dict(result)))
    fig = _figure_path(args, cfg)
    if fig is not None:
        from .plotting import plot_coupling

        plot_coupling(result, fig, title=f"{spec.preset or spec.kind}, n = {spec.n}, x = {fam.x:.4g}")
    print(
        f"coupled at x={fam.x!r}: {len(result)} entries, flow {result.flow_value:.15g}, "
        f"row residual {report.max_row_residual:.2e}, column residual {report.max_col_residual:.2e}"
        f"{' (cached)' if cached else ''} [{time.perf_counter() - started:.2f}s]",
        file=sys.stderr,
    )
    return EXIT_OK


def _read_table_checked(path, tol):
    """Load and verify a table; raise VerificationFailed naming the problem."""
    if not Path(path).exists():
        raise ConfigError(f"no such table file: {path}")
    try:
        table = serialize.read_table(path)
        fam = ProcessFamily(table.spec, table.x)
    except CouplingForgeError as exc:
        raise VerificationFailed(f"{path}: {exc}") from None
    return table, fam, verify_coupling(table, fam, tol)


def cmd_verify(args, cfg):
    _json_only(cfg, "verify")
    try:
        table, fam, report = _read_table_checked(args.table, cfg.tol)
    except VerificationFailed as exc:
        _emit(cfg, serialize.dumps({
            "passed": False, "tol": cfg.tol, "max_row_residual": None, "max_col_residual": None,
            "total_mass_residual": None, "negative_entries": None, "pivot_violations": [],
            "problems": [str(exc)],
        }))
        print(f"verification failed: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    _emit(cfg, serialize.dumps(report.to_dict()))
    if not report.passed:
        print("verification failed: " + "; ".join(report.problems), file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_sample(args, cfg):
    _json_only(cfg, "sample")
    if args.count < 1:
        raise ConfigError("--count must be positive")
    try:
        table, fam, report = _read_table_checked(args.table, cfg.tol)
    except VerificationFailed as exc:
        print(f"refusing to sample: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    if not report.passed:
        print("refusing to sample an unverified table: " + "; ".join(report.problems), file=sys.stderr)
        return EXIT_VERIFY
    try:
        z, cols = sample_coupled_pairs(table, fam, args.count, cfg.seed)
    except CouplingViolationError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_VERIFY
    label_vecs = [list(lab.a) for lab in table.labels]
    lines = [
        json.dumps({"label": label_vecs[c], "z": [int(v) for v in row]}, separators=(",", ":"))
        for row, c in zip(z.tolist(), cols.tolist())
    ]
    _emit(cfg, "\n".join(lines) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "csv"), default="json")
    common.add_argument("--output", "-o", help="output file (default: stdout)")
    common.add_argument("--tol", type=float, help="verification tolerance (default 1e-8; 1e-9 for conditioning)")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)

    structure = argparse.ArgumentParser(add_help=False)
    src = structure.add_argument_group("structure")
    src.add_argument("--preset", choices=sorted(PRESETS))
    src.add_argument("--n", type=int)
    src.add_argument("--spec", help="structure-spec JSON file")

    figures = argparse.ArgumentParser(add_help=False)
    figures.add_argument("--figure", help="figure path (default: OUTPUT with .png suffix)")
    figures.add_argument("--no-figure", action="store_true")

    parser = argparse.ArgumentParser(
        prog="coupling-forge",
        description="Component counts, pivot masses and no-pivot couplings.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count", parents=[common, structure], help="number of structures k_n")
    p.set_defaults(func=cmd_count)
    p = sub.add_parser("labels", parents=[common, structure], help="column labels with multiplicities")
    p.set_defaults(func=cmd_labels)

    p = sub.add_parser("pivot-mass", parents=[common, structure, figures], help="pivot masses over an x grid")
    p.add_argument("--x", nargs="+", help="x values, or 'auto'")
    p.add_argument("--probe", type=int, metavar="T", help="use the probe sequence t = 1..T")
    p.set_defaults(func=cmd_pivot_mass)

    p = sub.add_parser("threshold", parents=[common, structure], help="search x with small pivot mass")
    p.add_argument("--target", type=float, help="pivot-mass target (default 1/k_n)")
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("conditioning", parents=[common, structure], help="check the conditioning relation")
    p.add_argument("--x", nargs="+", help="x value or 'auto'")
    p.set_defaults(func=cmd_conditioning)

    p = sub.add_parser("couple", parents=[common, structure, figures], help="construct a coupling")
    p.add_argument("--x", nargs="+", default=["auto"], help="x value or 'auto' (default)")
    p.add_argument("--limit", type=int, default=DEFAULT_CLASS_LIMIT, help="row-class count guard")
    p.add_argument("--no-cache", action="store_true", help="ignore $COUPLING_FORGE_CACHE")
    p.set_defaults(func=cmd_couple)

    p = sub.add_parser("verify", parents=[common], help="verify a coupling table file")
    p.add_argument("--table", required=True)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sample", parents=[common], help="sample coupled pairs as JSON lines")
    p.add_argument("--table", required=True)
    p.add_argument("--count", type=int, default=1000)
    p.set_defaults(func=cmd_sample)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config(args)
        return args.func(args, cfg)
    except (ConfigError, ParameterError, SearchExhaustedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SizeLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SIZE


if __name__ == "__main__":
    sys.exit(main())
