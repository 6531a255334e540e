"""Command-line interface.

    momsec check <scenario.toml> [--format json|text] [--seed N]
                 [--jet-order K] [--tol T]
    momsec gallery list
    momsec gallery run <name> [--format json|text]
    momsec gallery export <name> <path>

Exit codes: 0 when every check matches the scenario's declared expectation,
1 on a check mismatch, 2 on schema or evaluation errors.
"""

from __future__ import annotations

import argparse
import sys

from .errors import MomsecError
from .gallery import gallery, gallery_scenario, gallery_text
from .scenario import Scenario, emit_report, exit_code, load_scenario, run_checks


def _apply_overrides(scenario: Scenario, args) -> Scenario:
    if getattr(args, "seed", None) is not None:
        scenario.seed = int(args.seed)
    if getattr(args, "jet_order", None) is not None:
        scenario.jet_order = int(args.jet_order)
    if getattr(args, "tol", None) is not None:
        scenario.tolerances["default"] = float(args.tol)
    return scenario


def _run_and_emit(scenario: Scenario, fmt: str) -> int:
    report = run_checks(scenario)
    print(emit_report(report, fmt))
    return exit_code(report)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="momsec",
        description="Check hamiltonian Lie algebroid structures over Poisson charts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    check = sub.add_parser("check", help="run the checks declared in a scenario file")
    check.add_argument("scenario", help="path to a scenario TOML file")
    check.add_argument("--format", choices=("json", "text"), default="text")
    check.add_argument("--seed", type=int, default=None, help="override the sampling seed")
    check.add_argument("--jet-order", type=int, default=None, help="override the jet order")
    check.add_argument("--tol", type=float, default=None, help="override the default tolerance")

    gal = sub.add_parser("gallery", help="work with the built-in scenario gallery")
    gal_sub = gal.add_subparsers(dest="gallery_command", required=True)
    gal_sub.add_parser("list", help="list the built-in scenarios")
    runp = gal_sub.add_parser("run", help="run one built-in scenario")
    runp.add_argument("name")
    runp.add_argument("--format", choices=("json", "text"), default="text")
    runp.add_argument("--seed", type=int, default=None)
    runp.add_argument("--jet-order", type=int, default=None)
    runp.add_argument("--tol", type=float, default=None)
    exp = gal_sub.add_parser("export", help="write a built-in scenario to a TOML file")
    exp.add_argument("name")
    exp.add_argument("path")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "check":
            scenario = load_scenario(args.scenario)
            return _run_and_emit(_apply_overrides(scenario, args), args.format)
        if args.gallery_command == "list":
            for name in gallery():
                print(name)
            return 0
        if args.gallery_command == "run":
            scenario = gallery_scenario(args.name)
            return _run_and_emit(_apply_overrides(scenario, args), args.format)
        if args.gallery_command == "export":
            with open(args.path, "w", encoding="utf-8") as fh:
                fh.write(gallery_text(args.name))
            print(f"wrote {args.path}")
            return 0
    except MomsecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
