"""Command-line front end.

Exit codes: 0 success (an empty confidence set is a success), 1 I/O or data
parse error, 2 usage or configuration error, 3 estimation failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from collections.abc import Sequence
from importlib import resources
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .bands import BandKind, BandSpec, compute_band, write_band_csv
from .baselines import (
    BootstrapSpec,
    EstimationError,
    bootstrap_ci,
    bootstrap_shape_region,
    csw_point_estimates,
    lmoment_estimate_tl,
    quantile_match_estimate_tl,
)
from .gld import parse_pairs, qr_ci, quantile_ci, shape_region, write_region_csv
from .intervals import encode_float
from .simharness import ConfigError, ExperimentConfig, emit_csv, run
from .tukey import TukeySample, tl_ci

EXIT_OK, EXIT_IO, EXIT_USAGE, EXIT_ESTIMATION = 0, 1, 2, 3
SCHEMA = 1


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


# ---------------------------------------------------------------------------
# input and output helpers


def read_data(path: str, column: str | None = None) -> np.ndarray:
    """Plain text (one number per line) or, with ``column``, a CSV column by name or index."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from None
    if column is None:
        raw = [
            (k, line.strip())
            for k, line in enumerate(text.splitlines(), 1)
            if line.strip()
        ]
    else:
        rows = list(csv.reader(io.StringIO(text)))
        if not rows:
            raise DataError(f"{path} is empty")
        header = [h.strip() for h in rows[0]]
        if column in header:
            idx, body, first = header.index(column), rows[1:], 2
        elif column.isdigit():
            idx, body, first = int(column), rows, 1
        else:
            raise DataError(f"no column {column!r} in {path}")
        raw = []
        for k, row in enumerate(body, first):
            if not any(cell.strip() for cell in row):
                continue
            if idx >= len(row):
                raise DataError(f"{path}:{k}: missing column {column!r}")
            raw.append((k, row[idx].strip()))
    values = []
    for k, cell in raw:
        try:
            v = float(cell)
        except ValueError:
            raise DataError(f"{path}:{k}: not a number: {cell!r}") from None
        if not math.isfinite(v):
            raise DataError(f"{path}:{k}: non-finite value {cell!r}")
        values.append(v)
    if not values:
        raise DataError(f"{path} holds no values")
    return np.asarray(values)


def _encode(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {k: _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return encode_float(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def emit_json(obj: dict[str, Any], stream=None) -> None:
    stream = stream or sys.stdout
    json.dump(_encode({"schema": SCHEMA, **obj}), stream, indent=2)
    stream.write("\n")


def _alpha(text: str) -> float:
    try:
        a = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0 < a < 1:
        raise argparse.ArgumentTypeError("alpha must lie in (0, 1)")
    return a


def _positive_int(text: str) -> int:
    try:
        k = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if k < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return k


def _band_kind(text: str) -> BandKind:
    try:
        return BandKind.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_band_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=_alpha, default=0.05)
    p.add_argument(
        "--kind", type=_band_kind, default=BandKind.DW, help="dw or dkw (default dw)"
    )
    p.add_argument(
        "--nu", type=float, default=1.0, help="DW penalty weight (default 1)"
    )
    p.add_argument(
        "--mc",
        type=_positive_int,
        default=10_000,
        help="Monte Carlo draws for the DW critical value",
    )
    p.add_argument("--seed", type=int, default=0, help="seed for the DW critical value")


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--data", required=True, help="plain text file, or CSV with --column"
    )
    p.add_argument("--column", help="CSV column name or 0-based index")


def _band_for(args, n: int):
    try:
        return compute_band(
            BandSpec(n, args.alpha, args.kind, args.nu, args.mc, args.seed)
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _band_meta(band) -> dict[str, Any]:
    meta = {"n": band.n, "alpha": band.alpha, "band": band.kind.value}
    if band.critical_value is not None:
        meta["critical_value"] = band.critical_value
    return meta


# ---------------------------------------------------------------------------
# commands


def cmd_band(args) -> int:
    band = _band_for(args, args.n)
    write_band_csv(band, args.out or sys.stdout)
    return EXIT_OK


def cmd_tl_ci(args) -> int:
    x = read_data(args.data, args.column)
    band = _band_for(args, x.size)
    ci = tl_ci(TukeySample.from_values(x), band, args.transform)
    emit_json(
        {
            "command": "tl-ci",
            **_band_meta(band),
            "transform": args.transform,
            "lambda": ci.to_json(),
        }
    )
    return EXIT_OK


def cmd_gld_ci(args) -> int:
    x = np.sort(read_data(args.data, args.column))
    targets = [t.strip() for t in args.targets.split(",") if t.strip()]
    bad = set(targets) - {"mu", "sigma", "shape"}
    if bad or not targets:
        raise UsageError(
            f"targets must be a subset of mu,sigma,shape; got {args.targets!r}"
        )
    band = _band_for(args, x.size)
    out: dict[str, Any] = {"command": "gld-ci", **_band_meta(band)}
    if "mu" in targets:
        out["mu"] = quantile_ci(x, band, 0.5).to_json()
    if "sigma" in targets:
        out["sigma"] = qr_ci(x, band, 0.75, 0.25).to_json()
    if "shape" in targets:
        try:
            pairs = parse_pairs(args.pairs, x.size)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        region = shape_region(x, band, pairs, args.grid, args.grid)
        out["shape"] = {
            "pairs": args.pairs,
            "n_pairs": len(pairs),
            "grid": args.grid,
            "cells_inside": int(np.count_nonzero(region.mask)),
            "area": region.area,
        }
        if args.region_out:
            write_region_csv(region, args.region_out)
            out["shape"]["region_csv"] = str(args.region_out)
    emit_json(out)
    return EXIT_OK


_TL_ESTIMATORS = {"lmom": lmoment_estimate_tl, "qmatch": quantile_match_estimate_tl}


def cmd_estimate(args) -> int:
    x = read_data(args.data, args.column)
    out: dict[str, Any] = {
        "command": "estimate",
        "method": args.method,
        "n": int(x.size),
    }
    spec = None
    if args.bootstrap:
        try:
            spec = BootstrapSpec(args.B, args.bootstrap, args.alpha, args.seed)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    try:
        if args.method == "csw":
            if x.size < 8:
                raise UsageError("csw estimates need at least eight observations")
            est = csw_point_estimates(x)
            out.update(est.to_dict())
            out["converged"] = est.converged
            if spec is not None:
                hull = bootstrap_shape_region(x, spec)
                out["bootstrap"] = {
                    "kind": spec.kind.value,
                    "B": spec.B,
                    "alpha": spec.alpha,
                    "seed": spec.seed,
                }
                out["region"] = [[c, s] for c, s in hull]
            status = EXIT_OK if est.converged else EXIT_ESTIMATION
        else:
            if x.size < 2:
                raise UsageError("need at least two observations")
            estimator = _TL_ESTIMATORS[args.method]
            out["lambda"] = estimator(x)
            if spec is not None:
                out["bootstrap"] = {
                    "kind": spec.kind.value,
                    "B": spec.B,
                    "alpha": spec.alpha,
                    "seed": spec.seed,
                }
                out["ci"] = bootstrap_ci(x, estimator, spec).to_json()
            status = EXIT_OK
    except EstimationError as exc:
        emit_json({**out, "error": "estimation_failure", "message": str(exc)})
        return EXIT_ESTIMATION
    emit_json(out)
    return status


def _load_config(ref: str) -> ExperimentConfig:
    path = Path(ref)
    if not path.exists():
        name = ref if ref.endswith(".json") else f"{ref}.json"
        bundled = resources.files("lambdaci") / "configs" / name
        if bundled.is_file():
            return ExperimentConfig.from_dict(_parse_json(bundled.read_text()))
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataError(f"cannot read {ref}: {exc.strerror or exc}") from None
    return ExperimentConfig.from_dict(_parse_json(text))


def _parse_json(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc}") from None


def cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    results = run(cfg, workers=args.threads, timing=args.timing)
    emit_csv(results, args.out or sys.stdout)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lambdaci", description=__doc__.splitlines()[0]
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("band", help="write a CDF confidence band as CSV")
    p.add_argument("--n", type=_positive_int, required=True)
    _add_band_args(p)
    p.add_argument("--out", help="output CSV (default stdout)")
    p.set_defaults(func=cmd_band)

    p = sub.add_parser("tl-ci", help="confidence set for the Tukey Lambda shape")
    _add_data_args(p)
    _add_band_args(p)
    p.add_argument("--transform", choices=("raw", "abs"), default="abs")
    p.set_defaults(func=cmd_tl_ci)

    p = sub.add_parser("gld-ci", help="GLD median, IQR and shape-region inference")
    _add_data_args(p)
    _add_band_args(p)
    p.add_argument(
        "--targets", default="mu,sigma", help="comma-separated subset of mu,sigma,shape"
    )
    p.add_argument(
        "--pairs", default="edge:17", help="rw, grid:K or edge:K (default edge:17)"
    )
    p.add_argument(
        "--grid",
        type=_positive_int,
        default=200,
        help="cells per axis of the shape grid",
    )
    p.add_argument("--region-out", help="write the shape region as chi,xi,inside CSV")
    p.set_defaults(func=cmd_gld_ci)

    p = sub.add_parser("estimate", help="point estimates with optional bootstrap")
    _add_data_args(p)
    p.add_argument("--method", choices=("lmom", "qmatch", "csw"), required=True)
    p.add_argument("--bootstrap", choices=("parametric", "nonparametric"))
    p.add_argument("--B", type=int, default=1000, help="bootstrap replicates (>= 100)")
    p.add_argument("--alpha", type=_alpha, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("simulate", help="run a coverage study and write CSV")
    p.add_argument(
        "config",
        help="JSON config path or bundled name (fig3, fig5, fig6_7, fig8_9, fig10)",
    )
    p.add_argument("--out", help="output CSV (default stdout)")
    p.add_argument("--threads", type=_positive_int, default=1)
    p.add_argument(
        "--timing",
        action="store_true",
        help="fill wall_time_seconds (output no longer byte-stable)",
    )
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"lambdaci: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"lambdaci: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"lambdaci: error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
