"""Command-line entry point: ``tmlab run``, ``tmlab run-one``, ``tmlab list``, ``tmlab expp``."""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources

import numpy as np

from . import __version__, specfn
from .experiments import (EXPERIMENTS, ExperimentError, ExperimentSpec, load_config, run_all,
                          run_experiment)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


def default_config_path():
    return resources.files("tmlab") / "data" / "default_config.json"


def parse_param(text: str) -> tuple[str, object]:
    """``key=value`` with the value read as JSON when possible, else as a string."""
    key, sep, raw = text.partition("=")
    if not sep or not key:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.strip(), value


def _print_report(rep, stream) -> None:
    status = "PASS" if rep.passed else "FAIL"
    print(f"[{status}] {rep.spec.name} ({rep.runtime_seconds:.2f} s)", file=stream)
    for row in rep.failures:
        print(f"    failed: {row.label}: value={row.value:.10g} reference={row.reference!r} "
              f"tolerance={row.tolerance!r}", file=stream)


def cmd_run(args) -> int:
    with resources.as_file(default_config_path()) as default:
        specs = load_config(args.config or default, out_dir=args.out)
    summary = run_all(specs, jobs=args.jobs)
    for rep in summary.reports:
        _print_report(rep, sys.stdout)
    for name, msg in summary.errors.items():
        print(f"[ERROR] {name}: {msg}")
    n = len(summary.reports) + len(summary.errors)
    print(f"{sum(rep.passed for rep in summary.reports)}/{n} experiments passed")
    if args.out:
        from pathlib import Path

        with open(Path(args.out) / "summary.json", "w") as fh:
            json.dump(summary.to_dict(), fh, indent=2)
            fh.write("\n")
    return EXIT_OK if summary.passed else EXIT_FAIL


def cmd_run_one(args) -> int:
    params = dict(args.param or [])
    rep = run_experiment(ExperimentSpec(args.name, params, args.out))
    _print_report(rep, sys.stdout)
    if args.verbose:
        for row in rep.rows:
            verdict = "" if row.passed is None else ("ok" if row.passed else "FAIL")
            print(f"    {row.label} = {row.value:.12g} [{row.provenance}] {verdict}")
    return EXIT_OK if rep.passed else EXIT_FAIL


def cmd_list(args) -> int:
    width = max(map(len, EXPERIMENTS))
    for name, exp in EXPERIMENTS.items():
        print(f"{name:<{width}}  {exp.summary}")
        if args.verbose:
            for key, (kind, default) in exp.schema.items():
                print(f"{'':<{width}}    {key}: {kind} = {default!r}")
    return EXIT_OK


def cmd_expp(args) -> int:
    t = np.array(args.t, dtype=float)
    print("p,t,exp_p_series,exp_p_closed,rel_diff")
    for p in args.p:
        series = specfn.exp_p_series(p, t)
        closed = specfn.exp_p_closed(p, t) if p > 1 else np.exp(t)
        for ti, s, c in zip(t, np.atleast_1d(series), np.atleast_1d(closed)):
            print(f"{p:g},{ti:g},{s:.17g},{c:.17g},{abs(s - c) / c:.3g}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tmlab", description="Weighted Trudinger-Moser numerical laboratory.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run every experiment in a JSON config (default: bundled suite)")
    run.add_argument("config", nargs="?", help="JSON array of experiment specs")
    run.add_argument("--out", help="report directory for specs without an output_path")
    run.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    run.set_defaults(func=cmd_run)

    one = sub.add_parser("run-one", help="run a single experiment")
    one.add_argument("--name", required=True, help="registry key, see 'tmlab list'")
    one.add_argument("--param", action="append", type=parse_param, metavar="KEY=VALUE",
                     help="parameter override, value parsed as JSON; repeatable")
    one.add_argument("--out", help="directory for the report files")
    one.add_argument("-v", "--verbose", action="store_true", help="print every row")
    one.set_defaults(func=cmd_run_one)

    lst = sub.add_parser("list", help="list registered experiments")
    lst.add_argument("-v", "--verbose", action="store_true", help="show parameter schemas")
    lst.set_defaults(func=cmd_list)

    expp = sub.add_parser("expp", help="tabulate exp_p by both evaluation routes as CSV")
    expp.add_argument("--p", type=float, nargs="+", default=[1.5, 2.0, 2.7])
    expp.add_argument("--t", type=float, nargs="+", default=[0.1, 1.0, 10.0])
    expp.set_defaults(func=cmd_expp)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ExperimentError as exc:
        print(f"tmlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OverflowError) as exc:
        print(f"tmlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
