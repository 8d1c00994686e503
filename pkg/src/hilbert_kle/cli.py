"""Command-line driver: ``hilbert-kle {decompose,truncate,compare,synth,image-embed}``.

Exit codes: 0 success, 2 bad input, 3 numerical failure, 4 infeasible
truncation level. Every run writes ``run.json`` with the settings needed to
reproduce it; outputs contain no timestamps or absolute paths, so identical
invocations give byte-identical files.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .data_io import (
    MORTALITY_HEADER,
    PRNG_ID,
    load_grid_image,
    parse_mortality_csv,
    synth_ensemble,
    table_to_ensemble,
)
from .ensemble import bochner_norm_sq, ensemble_from_csv, ensemble_to_csv, make_ensemble
from .errors import InfeasibleError, InputError, KleError, NumericError
from .kle import DEFAULT_RANK_TOL, decompose, kle_to_dict, reconstruct, truncate
from .space import grid_l2_space, load_space, make_space, space_to_dict
from .vector_field import compare, report_to_csv, report_to_dict

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_INFEASIBLE = 0, 2, 3, 4


# argument parsing ------------------------------------------------------------
def _int_pair(text, sep=":"):
    try:
        a, b = text.split(sep)
        return int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A{sep}B, got {text!r}") from None


def _r0_list(text):
    try:
        vals = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad R0 list {text!r}") from None
    if not vals or vals[0] < 1 or any(b <= a for a, b in zip(vals, vals[1:])):
        raise argparse.ArgumentTypeError("R0 list must be strictly increasing positive integers")
    return vals


def _float_list(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hilbert-kle",
        description="Karhunen-Loeve expansions of empirical ensembles in weighted Hilbert spaces.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--input", required=True, help="ensemble CSV or mortality CSV (year,age,region,value)")
    data.add_argument("--space", help="SpaceSpec JSON for an ensemble CSV (default: <input>.space.json if present)")
    data.add_argument("--gram", default="identity",
                      help="'identity' or 'diag:w0,w1,...' when no --space is given")
    data.add_argument("--blocks", type=_int_pair, help="vector-field layout Q:BASE")
    data.add_argument("--transform", choices=("identity", "log1p"), default="identity",
                      help="mortality values transform (default identity)")
    data.add_argument("--years", type=_int_pair, help="inclusive mortality year range A:B")
    data.add_argument("--regions", help="comma-separated mortality regions, in stacking order")
    data.add_argument("--rank-tol", type=float, default=DEFAULT_RANK_TOL)
    data.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("decompose", parents=[data], help="KL decomposition and spectrum")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("truncate", parents=[data], help="M-term reconstruction and residual")
    p.add_argument("--m", type=int, required=True)
    p.set_defaults(func=cmd_truncate)

    p = sub.add_parser("compare", parents=[data], help="component-wise vs vector-field truncation")
    p.add_argument("--r0", type=_r0_list, default=[1, 2, 3, 4, 5, 6])
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("synth", help="seeded synthetic blocked ensemble")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, required=True, help="number of samples")
    p.add_argument("--blocks", type=_int_pair, required=True, help="Q:BASE")
    p.add_argument("--spectrum", type=_float_list, required=True, help="mode scales, nonincreasing")
    p.add_argument("--coupling", type=float, default=0.0, help="cross-component coupling in [0, 1]")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("image-embed", help="embed P2/P3 images as an ensemble in a grid L2 space")
    p.add_argument("--input", nargs="+", required=True)
    p.add_argument("--grid", type=lambda t: _int_pair(t, ":"), required=True, help="ROWS:COLS")
    p.add_argument("--channels", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_image_embed)
    return parser


# helpers ---------------------------------------------------------------------
def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _dump_json(path, obj):
    _write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _fmt(x):
    return format(float(x), ".17g")


def _metadata(args, **extra):
    meta = {
        "tool": "hilbert-kle",
        "version": __version__,
        "command": args.command,
        "prng": PRNG_ID,
    }
    for key in ("rank_tol", "transform", "seed", "m", "r0", "years", "regions", "coupling", "format"):
        if hasattr(args, key):
            val = getattr(args, key)
            meta[key] = list(val) if isinstance(val, tuple) else val
    inputs = args.input if isinstance(getattr(args, "input", None), list) else [getattr(args, "input", None)]
    meta["inputs"] = [
        {"name": Path(p).name, "sha256": hashlib.sha256(Path(p).read_bytes()).hexdigest()}
        for p in inputs if p
    ]
    meta.update(extra)
    return meta


def _is_mortality(text):
    for line in text.splitlines():
        s = line.strip()
        if s and not s.startswith("#"):
            return [f.strip() for f in s.split(",")] == MORTALITY_HEADER
    return False


def _infer_dim(text):
    for line in text.splitlines():
        s = line.strip()
        if s and not s.startswith("#"):
            return len(s.split(",")) - 2
    raise InputError("empty ensemble file")


def _gram_option(text):
    if text == "identity":
        return "identity"
    if text.startswith("diag:"):
        return ("diagonal", _float_list(text[5:]))
    raise InputError(f"--gram must be 'identity' or 'diag:...', got {text!r}; use --space for dense Grams")


def load_input(args):
    """Ensemble described by the data options of ``args``."""
    path = Path(args.input)
    text = path.read_text(encoding="utf-8")
    if _is_mortality(text):
        regions = args.regions.split(",") if args.regions else None
        table = parse_mortality_csv(text, region_filter=regions, transform=args.transform, years=args.years)
        return table_to_ensemble(table)

    sidecar = path.with_suffix(".space.json")
    if args.space:
        space = load_space(args.space)
    elif sidecar.exists():
        space = load_space(sidecar)
    else:
        dim = _infer_dim(text)
        if dim < 1:
            raise InputError("ensemble CSV has no coefficient columns")
        space = make_space(dim, _gram_option(args.gram))
    if args.blocks is not None:
        gram = "identity" if space.gram_kind == "identity" else (space.gram_kind, space.gram_values)
        space = make_space(space.dim, gram, args.blocks)
    return ensemble_from_csv(text, space)


def _save_ensemble(out, stem, ens):
    _write(out / f"{stem}.csv", ensemble_to_csv(ens))
    _dump_json(out / f"{stem}.space.json", space_to_dict(ens.space))


# subcommands -----------------------------------------------------------------
def cmd_decompose(args):
    ens = load_input(args)
    kle = decompose(ens, args.rank_tol)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if kle.rank == 0:
        print("warning: ensemble is constant; the expansion has rank 0", file=sys.stderr)

    total = kle.total_variance
    lines = ["r,lambda,cumulative_fraction"]
    cum = 0.0
    for r, lam in enumerate(kle.lambdas, start=1):
        cum += lam
        lines.append(f"{r},{_fmt(lam)},{_fmt(min(cum / total, 1.0))}")
    _write(out / "spectrum.csv", "\n".join(lines) + "\n")
    _dump_json(out / "kle.json", kle_to_dict(kle))
    _dump_json(out / "run.json", _metadata(args, rank=kle.rank))
    return EXIT_OK


def cmd_truncate(args):
    ens = load_input(args)
    kle = decompose(ens, args.rank_tol)
    _, tail = truncate(kle, args.m)
    recon = reconstruct(kle, args.m)
    residual_sq = bochner_norm_sq(make_ensemble(ens.space, ens.samples - recon.samples, ens.weights))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _save_ensemble(out, "reconstruction", recon)
    summary = {
        "m": args.m,
        "rank": kle.rank,
        "residual_sq": residual_sq,
        "tail": tail,
        "total_variance": kle.total_variance,
    }
    _dump_json(out / "truncation.json", summary)
    _dump_json(out / "run.json", _metadata(args))
    print(f"M={args.m} rank={kle.rank} residual^2={residual_sq:.12g} tail={tail:.12g}")
    return EXIT_OK


def format_report_table(report):
    head = f"{'r0':>4} {'terms':>6} {'componentwise':>16} {'vectorfield':>16}"
    rows = [head, "-" * len(head)]
    for r0, tot, cw, vf in zip(report.r0_values, report.total_terms,
                               report.componentwise_rel_err, report.vectorfield_rel_err):
        rows.append(f"{r0:>4d} {tot:>6d} {cw:>16.8e} {vf:>16.8e}")
    eq = report.equivalent_componentwise_terms()
    if eq is not None:
        rows.append(f"component-wise needs {eq[1]} terms to match a {eq[0]}-term vector-field truncation")
    return "\n".join(rows)


def cmd_compare(args):
    ens = load_input(args)
    report = compare(ens, args.r0, args.rank_tol)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.format == "csv":
        _write(out / "report.csv", report_to_csv(report))
    else:
        _dump_json(out / "report.json", report_to_dict(report))
    _dump_json(out / "run.json", _metadata(args, q=report.q))
    print(format_report_table(report))
    for note in report.notes:
        print(f"note: {note}", file=sys.stderr)
    return EXIT_OK


def cmd_synth(args):
    q, base = args.blocks
    ens = synth_ensemble(args.seed, args.n, q, base, args.spectrum, args.coupling)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _save_ensemble(out, "ensemble", ens)
    _dump_json(out / "run.json", _metadata(args, n=args.n, blocks=[q, base], spectrum=args.spectrum))
    return EXIT_OK


def cmd_image_embed(args):
    m, n = args.grid
    points = [load_grid_image(p, m, n, args.channels) for p in args.input]
    ens = make_ensemble(grid_l2_space(m, n, args.channels), np.vstack(points))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _save_ensemble(out, "ensemble", ens)
    _dump_json(out / "run.json", _metadata(args, grid=[m, n], channels=args.channels))
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, KleError, OSError, ValueError) as exc:
        # ValueError also covers UnicodeDecodeError and bad option values
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
