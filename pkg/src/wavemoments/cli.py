"""Command-line front end.

Thin client over the shared operations layer: parses flags, reads CSV
inputs, writes JSON/SVG/CSV artifacts and a short text summary. Exit codes:
0 success, 1 usage error, 2 data error, 3 numerical failure.

The default seed is 1337; the WAVEMOMENTS_SEED environment variable
overrides that default and an explicit --seed flag wins over both.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, ops
from .errors import DataError, ModelError, NumericalError, WaveMomentsError
from .svgplot import PALETTE, wv_figure

DEFAULT_SEED = 1337


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


# ---------------------------------------------------------------------------
# CSV handling
# ---------------------------------------------------------------------------

def _is_float(text):
    try:
        float(text)
        return True
    except ValueError:
        return False


def read_series(path, column=None):
    """One numeric column from a CSV file; a non-numeric first row is a
    header. ``column`` selects by header name or zero-based index
    (default: first column)."""
    try:
        with open(path, newline="") as fh:
            rows = [row for row in csv.reader(fh) if row]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    if not rows:
        raise DataError(f"{path} is empty")
    header = None
    if not all(_is_float(cell) for cell in rows[0]):
        header = [cell.strip() for cell in rows[0]]
        rows = rows[1:]
    index = 0
    if column is not None:
        if _is_float(column):
            index = int(float(column))
        elif header and column in header:
            index = header.index(column)
        else:
            raise DataError(f"column {column!r} not found in {path}")
    values = []
    for line_no, row in enumerate(rows, start=2 if header else 1):
        if index >= len(row):
            raise DataError(f"{path}:{line_no}: missing column {index}")
        cell = row[index].strip()
        if not _is_float(cell):
            raise DataError(f"{path}:{line_no}: {cell!r} is not a number")
        values.append(float(cell))
    if len(values) < 2:
        raise DataError(f"{path}: need at least 2 values")
    return np.asarray(values)


def _write_csv(out, names, columns):
    """Full-precision CSV (repr round-trips every float exactly)."""
    lines = [",".join(names)]
    for row in zip(*columns):
        lines.append(",".join(repr(float(v)) for v in row))
    text = "\n".join(lines) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _write_json(path, payload):
    if path:
        Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def _write_svg(path, text):
    if path:
        Path(path).write_text(text)


# ---------------------------------------------------------------------------
# Argument plumbing
# ---------------------------------------------------------------------------

def _default_seed():
    env = os.environ.get("WAVEMOMENTS_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise DataError(
                f"WAVEMOMENTS_SEED={env!r} is not an integer") from None
    return DEFAULT_SEED


def _add_common(parser, *, seed=True, estimator=True, boot=False):
    if seed:
        parser.add_argument("--seed", type=int, default=None,
                            help="random seed (default 1337 or "
                                 "WAVEMOMENTS_SEED)")
    if estimator:
        parser.add_argument("--robust", action="store_true",
                            help="use the robust wavelet-variance estimator")
        parser.add_argument("--eff", type=float, default=0.6,
                            help="target efficiency of the robust estimator")
        parser.add_argument("--alpha", type=float, default=0.05,
                            help="confidence level for intervals")
        parser.add_argument("--max-scales", type=int, default=None,
                            dest="n_levels", help="cap the number of scales")
    if boot:
        parser.add_argument("-B", "--boot", type=int, default=100,
                            dest="n_boot", help="bootstrap replicates")
        parser.add_argument("--threads", type=int, default=1,
                            help="worker cap for bootstrap replicates")


def build_parser():
    parser = _Parser(prog="wavemoments",
                     description="Wavelet-variance modeling toolkit")
    parser.add_argument("--version", action="version",
                        version=f"wavemoments {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a sample path")
    p.add_argument("model", help='model grammar, e.g. "AR1(0.9,1)+WN(1)"')
    p.add_argument("-n", type=int, required=True, help="series length")
    p.add_argument("--latent", action="store_true",
                   help="one column per component plus the total")
    p.add_argument("--out", default=None, help="output CSV (default stdout)")
    _add_common(p, estimator=False)

    p = sub.add_parser("wvar", help="estimate the wavelet variance")
    p.add_argument("input", help="input CSV")
    p.add_argument("--column", default=None, help="column name or index")
    p.add_argument("--out-json", default=None)
    p.add_argument("--out-svg", default=None)
    _add_common(p)

    p = sub.add_parser("compare", help="overlay wavelet variances")
    p.add_argument("inputs", nargs="+", help="input CSVs")
    p.add_argument("--both", action="store_true",
                   help="classical and robust estimates of one series")
    p.add_argument("--column", default=None)
    p.add_argument("--out-json", default=None)
    p.add_argument("--out-svg", default=None)
    _add_common(p)

    for name, with_gof_flag in (("fit", True), ("gof", False)):
        p = sub.add_parser(name, help="fit a model" if name == "fit"
                           else "fit a model and bootstrap its fit test")
        p.add_argument("input", help="input CSV")
        p.add_argument("--model", required=True, help="model grammar")
        p.add_argument("--column", default=None)
        if with_gof_flag:
            p.add_argument("--gof", action="store_true",
                           help="add the bootstrap goodness-of-fit block")
        p.add_argument("--decomp", action="store_true",
                       help="include per-term implied curves")
        p.add_argument("--out-json", default=None)
        p.add_argument("--out-svg", default=None)
        _add_common(p, boot=True)

    p = sub.add_parser("rank", help="rank candidate models")
    p.add_argument("input", help="input CSV")
    p.add_argument("--model", action="append", required=True, dest="models",
                   help="candidate model grammar (repeat >= 2 times)")
    p.add_argument("--column", default=None)
    p.add_argument("--out-json", default=None)
    _add_common(p, boot=True)

    p = sub.add_parser("bench", help="time the WV computation")
    p.add_argument("--sizes", default="100,1000,10000,100000,1000000",
                   help="comma-separated sample sizes")
    p.add_argument("--reps", type=int, default=3, help="repetitions per size")
    p.add_argument("--robust", action="store_true")
    p.add_argument("--eff", type=float, default=0.6)
    p.add_argument("--out-json", default=None)
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


def _seed_of(args):
    return args.seed if args.seed is not None else _default_seed()


# ---------------------------------------------------------------------------
# Rendering helpers
# ---------------------------------------------------------------------------

def _wv_svg(payload, title):
    curve = {"label": payload["estimator"], "scales": payload["scales"],
             "values": payload["nu2"]}
    band = {"scales": payload["scales"], "low": payload["ci_low"],
            "high": payload["ci_high"]}
    return wv_figure([curve], [band], title=title)


def _compare_svg(payload):
    curves, bands = [], []
    for i, entry in enumerate(payload["curves"]):
        color = PALETTE[i % len(PALETTE)]
        curves.append({"label": entry["label"], "scales": entry["scales"],
                       "values": entry["nu2"], "color": color})
        bands.append({"scales": entry["scales"], "low": entry["ci_low"],
                      "high": entry["ci_high"], "color": color})
    return wv_figure(curves, bands, title="wavelet variance comparison")


def _fit_svg(payload):
    wv = payload["wv"]
    curves = [
        {"label": "estimated WV", "scales": wv["scales"], "values": wv["nu2"],
         "color": PALETTE[0]},
        {"label": "model-implied WV", "scales": wv["scales"],
         "values": payload["implied"]["total"], "color": PALETTE[1]},
    ]
    bands = [{"scales": wv["scales"], "low": wv["ci_low"],
              "high": wv["ci_high"], "color": PALETTE[0]}]
    for i, entry in enumerate(payload["implied"].get("per_term", [])):
        curves.append({"label": entry["label"], "scales": wv["scales"],
                       "values": entry["nu2"],
                       "color": PALETTE[(i + 2) % len(PALETTE)], "dash": True})
    return wv_figure(curves, bands, title=f"fit: {payload['model']}")


def _print_wv_table(payload):
    print(f"{'scale':>8} {'wv':>14} {'ci_low':>14} {'ci_high':>14}")
    for tau, nu2, low, high in zip(payload["scales"], payload["nu2"],
                                   payload["ci_low"], payload["ci_high"]):
        print(f"{tau:>8} {nu2:>14.6g} {low:>14.6g} {high:>14.6g}")


def _print_fit_summary(payload, seed):
    print("Model Information:")
    print(f"{'':<16}{'Estimates':>12} {'CI Low':>12} {'CI High':>12} {'SE':>12}")
    for row in payload["estimates"]:
        print(f"{row['label']:<16}{row['estimate']:>12.6g} "
              f"{row['ci_low']:>12.6g} {row['ci_high']:>12.6g} "
              f"{row['se']:>12.6g}")
    print(f"Objective Function: {payload['objective']:.4f}")
    if "gof" in payload:
        gof = payload["gof"]
        low, high = gof["p_ci"]
        print("Bootstrapped Goodness of Fit:")
        print(f"Test Statistic: {gof['statistic']:.2f}")
        print(f"P-Value: {gof['p_value']:.2f} CI: ({low:.2f}, {high:.2f})")
    print(f"To replicate the results, use seed: {seed}")


# ---------------------------------------------------------------------------
# Command handlers
# ---------------------------------------------------------------------------

def _cmd_simulate(args):
    payload = ops.op_simulate(args.model, args.n, _seed_of(args),
                              latent=args.latent)
    names = payload["columns"]
    _write_csv(args.out, names, [payload["values"][n] for n in names])
    return 0


def _cmd_wvar(args):
    values = read_series(args.input, args.column)
    payload = ops.op_wvar(values, robust=args.robust, eff=args.eff,
                          alpha=args.alpha, n_levels=args.n_levels)
    payload["config"]["input"] = args.input
    payload["config"]["seed"] = _seed_of(args)  # recorded even when unused
    _write_json(args.out_json, payload)
    _write_svg(args.out_svg, _wv_svg(payload, Path(args.input).name))
    _print_wv_table(payload)
    for message in payload["warnings"]:
        print(f"warning: {message}", file=sys.stderr)
    return 0


def _cmd_compare(args):
    series = [(Path(path).stem, read_series(path, args.column))
              for path in args.inputs]
    payload = ops.op_compare(series, both=args.both, robust=args.robust,
                             eff=args.eff, alpha=args.alpha,
                             n_levels=args.n_levels)
    payload["config"]["inputs"] = list(args.inputs)
    payload["config"]["seed"] = _seed_of(args)  # recorded even when unused
    _write_json(args.out_json, payload)
    _write_svg(args.out_svg, _compare_svg(payload))
    for curve in payload["curves"]:
        print(f"-- {curve['label']}")
        _print_wv_table(curve)
    return 0


def _cmd_fit(args, command):
    values = read_series(args.input, args.column)
    seed = _seed_of(args)
    want_gof = command == "gof" or getattr(args, "gof", False)
    payload, _ = ops.op_fit(
        values, args.model, robust=args.robust, eff=args.eff,
        n_boot=args.n_boot, alpha=args.alpha, seed=seed, gof=want_gof,
        decomp=args.decomp, n_levels=args.n_levels, threads=args.threads)
    payload["command"] = command
    payload["config"]["input"] = args.input
    _write_json(args.out_json, payload)
    _write_svg(args.out_svg, _fit_svg(payload))
    _print_fit_summary(payload, seed)
    if not payload["converged"]:
        print("warning: optimizer did not converge", file=sys.stderr)
        return 3
    return 0


def _cmd_rank(args):
    if len(args.models) < 2:
        raise _UsageError("rank needs at least two --model candidates")
    values = read_series(args.input, args.column)
    seed = _seed_of(args)
    payload, table = ops.op_rank(
        values, args.models, n_boot=args.n_boot, seed=seed, alpha=args.alpha,
        robust=args.robust, eff=args.eff, n_levels=args.n_levels,
        threads=args.threads)
    payload["config"]["input"] = args.input
    _write_json(args.out_json, payload)
    print("The model ranking is given as:")
    print(table.render_text())
    print(f"To replicate the results, use seed: {seed}")
    return 0


def _cmd_bench(args):
    sizes = [int(s) for s in args.sizes.split(",") if s]
    payload = ops.op_bench(sizes, repetitions=args.reps, robust=args.robust,
                           eff=args.eff, seed=_seed_of(args))
    _write_json(args.out_json, payload)
    print(f"{'n':>10} {'classical_s':>12}" +
          (f" {'robust_s':>12}" if args.robust else ""))
    for entry in payload["results"]:
        line = f"{entry['n']:>10} {entry['classical_median_s']:>12.4f}"
        if args.robust:
            line += f" {entry['robust_median_s']:>12.4f}"
        print(line)
    return 0


def _cmd_serve(args):
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "wvar":
            return _cmd_wvar(args)
        if args.command == "compare":
            return _cmd_compare(args)
        if args.command in ("fit", "gof"):
            return _cmd_fit(args, args.command)
        if args.command == "rank":
            return _cmd_rank(args)
        if args.command == "bench":
            return _cmd_bench(args)
        if args.command == "serve":
            return _cmd_serve(args)
        raise _UsageError(f"unknown command {args.command!r}")
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except ModelError as exc:
        print(f"model error: {exc}", file=sys.stderr)
        return 1
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except (NumericalError, WaveMomentsError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
