"""Command-line entry point: ``antihmc run | synth | ess``."""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np
import yaml

from . import experiment as ex
from .data import DataError
from .diagnostics import DegenerateChainError, antithetic_mess, max_cross_correlation, multivariate_ess

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_PARTIAL = 4

SYNTH_MODELS = {"jump_diffusion": "jump_diffusion", "jd": "jump_diffusion", "blr": "blr"}


def _parse_param(text):
    key, sep, value = text.partition("=")
    if not sep or not key.strip():
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    # YAML scalars cover floats, ints, and lists like [0.5, -1, 2]
    return key.strip(), yaml.safe_load(value)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="antihmc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment config and write the report")
    run.add_argument("config", help="YAML or JSON experiment file")
    run.add_argument("--seed", type=int, help="master seed (overrides the config)")
    run.add_argument("--workers", type=int, help="parallel worker processes")
    run.add_argument("--repeats", type=int, help="repeats per algorithm")
    run.add_argument("--out", help="report path; stdout when omitted")
    run.add_argument("--format", choices=ex.FORMATS, help="report format (default json)")
    run.add_argument(
        "--canonical", action="store_true",
        help="omit timing fields so reports compare byte for byte",
    )

    synth = sub.add_parser("synth", help="write a synthetic dataset as CSV")
    synth.add_argument("model", choices=sorted(SYNTH_MODELS))
    synth.add_argument(
        "--param", action="append", default=[], type=_parse_param, metavar="KEY=VALUE",
        help="generating parameter, e.g. lambda=0.1 or weights=[0,1,-1]",
    )
    synth.add_argument("--n", type=int, default=1000, help="returns or rows to simulate")
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("--out", required=True)

    ess = sub.add_parser("ess", help="mESS of a stored N x D sample matrix")
    ess.add_argument("samples", help="CSV or whitespace-delimited sample matrix")
    ess.add_argument("--chain-y", help="antithetic partner chain; reports the paired mESS")
    ess.add_argument("--seconds", type=float, help="sampling time, adds mESS per second")
    return parser


def _load_matrix(path):
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    text = path.read_text(encoding="utf-8")
    delimiter = "," if "," in text else None
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise DataError(f"{path} is empty")
    first = lines[0].split(delimiter)
    try:
        [float(v) for v in first]
        skip = 0
    except ValueError:
        skip = 1
    try:
        x = np.loadtxt(path, delimiter=delimiter, skiprows=skip, ndmin=2)
    except ValueError as exc:
        raise DataError(f"could not parse {path}: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise DataError(f"{path} contains non-finite values")
    return x


def _cmd_run(args):
    cfg = ex.load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.repeats is not None:
        if args.repeats < 1:
            raise ex.ConfigError("--repeats must be at least 1")
        cfg.n_repeats = args.repeats
    if args.workers is not None:
        if args.workers < 1:
            raise ex.ConfigError("--workers must be at least 1")
        cfg.workers = args.workers
    fmt = args.format or cfg.format
    out = args.out or cfg.output
    report = ex.run_experiment(cfg)
    text = ex.emit_report(report, out, fmt, canonical=args.canonical)
    if out is None:
        sys.stdout.write(text)
    for entry in report["algorithms"]:
        for cell in entry["runs"]:
            if cell["status"] != "ok":
                print(f"{entry['algorithm']} repeat {cell['repeat']} failed: {cell['error']}", file=sys.stderr)
    return EXIT_PARTIAL if ex.has_failures(report) else EXIT_OK


def _cmd_synth(args):
    model = SYNTH_MODELS[args.model]
    params = dict(args.param)
    try:
        dataset = ex.generate_synthetic(model, params, args.n, args.seed)
        ex.write_synthetic(dataset, args.out)
    except (TypeError, ValueError) as exc:
        raise ex.ConfigError(str(exc)) from exc
    return EXIT_OK


def _cmd_ess(args):
    x = _load_matrix(args.samples)
    result = {"n": int(x.shape[0]), "dim": int(x.shape[1])}
    try:
        rep = multivariate_ess(x)
        m_ess = rep.m_ess
        result["batch_size"] = rep.batch_size
        if args.chain_y:
            y = _load_matrix(args.chain_y)
            rho = max_cross_correlation(x, y)
            result["mess_original"] = m_ess
            result["rho"] = rho
            m_ess = antithetic_mess(m_ess, rho)
    except (DegenerateChainError, ValueError) as exc:
        raise DataError(str(exc)) from exc
    result["mess"] = m_ess if math.isfinite(m_ess) else None
    result["mess_infinite"] = math.isinf(m_ess)
    if args.seconds is not None:
        if not args.seconds > 0:
            raise ex.ConfigError("--seconds must be positive")
        result["mess_per_s"] = m_ess / args.seconds if math.isfinite(m_ess) else None
    print(json.dumps(result, indent=2))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "synth": _cmd_synth, "ess": _cmd_ess}[args.command]
    try:
        return handler(args)
    except ex.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
