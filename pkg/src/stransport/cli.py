"""Command-line front end: ``stransport {run,verify,trace,catalog}``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .geometry import CURVES, LAWS, MANIFOLDS
from .scenario import FIELD_KINDS, ScenarioError, ScenarioRunError, export_trace, format_trace, load_scenario, run_scenario

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_AXIOMS = 2


def _emit(text: str, output) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        with open(output, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


def _load(args, force_axioms: bool = False):
    tol = args.tol
    if force_axioms and tol is None:
        sc = load_scenario(args.scenario, args.step)
        if sc.axioms is None:
            return load_scenario(args.scenario, args.step, 1e-6)
        return sc
    return load_scenario(args.scenario, args.step, tol)


def cmd_run(args) -> int:
    sc = _load(args)
    report = run_scenario(sc)
    _emit(report.to_json(), args.output)
    return EXIT_OK if report.passed else EXIT_AXIOMS


def cmd_verify(args) -> int:
    sc = _load(args, force_axioms=True)
    report = run_scenario(sc, pairs=False)
    text = json.dumps({"provenance": report.provenance, "axioms": report.axioms.to_dict()}, indent=2) + "\n"
    _emit(text, args.output)
    return EXIT_OK if report.passed else EXIT_AXIOMS


def cmd_trace(args) -> int:
    sc = _load(args)
    if args.resolution is not None:
        sc.trace_resolution = args.resolution
    if sc.trace_resolution is None:
        raise ScenarioError([("outputs.trace_resolution", "required for trace (or pass --resolution)")])
    report = run_scenario(sc, axioms=False)
    if args.output is None:
        sys.stdout.write(format_trace(report))
    else:
        export_trace(report, args.output)
    return EXIT_OK


def cmd_catalog(args) -> int:
    listing = {
        "manifolds": list(MANIFOLDS),
        "curves": list(CURVES) + ["tabulated"],
        "laws": list(LAWS) + ["custom-gamma"],
        "fields": list(FIELD_KINDS),
    }
    _emit(json.dumps(listing, indent=2) + "\n", getattr(args, "output", None))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="stransport", description="Linear transports of tensors along paths.")
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_cmd(name, help_text, func):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("scenario", type=Path, help="scenario file (YAML)")
        p.add_argument("--step", type=float, default=None, help="override integrator step")
        p.add_argument("--tol", type=float, default=None, help="override axiom tolerance (enables the check)")
        p.add_argument("--output", "-o", default=None, help="write result here instead of stdout")
        p.set_defaults(func=func)
        return p

    scenario_cmd("run", "run a scenario and print the JSON report", cmd_run)
    scenario_cmd("verify", "check the transport axioms only", cmd_verify)
    trace = scenario_cmd("trace", "emit the CSV trace", cmd_trace)
    trace.add_argument("--resolution", type=int, default=None, help="samples per transport pair (>= 2)")

    cat = sub.add_parser("catalog", help="list built-in manifolds, curves, laws and fields")
    cat.add_argument("--output", "-o", default=None)
    cat.set_defaults(func=cmd_catalog)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "resolution", None) is not None and args.resolution < 2:
        print("error: --resolution: must be >= 2", file=sys.stderr)
        return EXIT_INPUT
    try:
        return args.func(args)
    except ScenarioError as exc:
        for path, msg in exc.issues:
            print(f"error: {path}: {msg}", file=sys.stderr)
        return EXIT_INPUT
    except (ScenarioRunError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
