# bornlab/cli.py - Command-line entry point
import argparse
import json
import logging
import sys
from typing import Any, List, Optional, Sequence

from .config import VERSION
from .exact import parse_rational
from .exceptions import BornLabError, ScenarioError
from .lab import EXIT_INVALID_INPUT, EXIT_OK, BornLab, grid_point, list_catalog, run_scenario


def _csv(text: str) -> List[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _csv_ints(text: str) -> List[int]:
    try:
        return [int(t) for t in _csv(text)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _pair(text: str) -> tuple:
    m, sep, n = text.partition(":")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected m:n, got {text!r}")
    try:
        return int(m), int(n)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers in {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bornlab",
        description="Check candidate quantum probability assignments against the Born-rule axioms.",
    )
    parser.add_argument("--version", action="version", version=f"bornlab {VERSION}")
    parser.add_argument("--scenario", help="Scenario file, or the name of a bundled scenario")
    parser.add_argument("--out", help="Output directory (default: $BORNLAB_OUT or ./bornlab-out)")
    parser.add_argument("--seed", type=int, help="Override the scenario seed (subcommands default to 0)")
    parser.add_argument("--jobs", type=int, default=1, help="Worker threads for the property matrix")
    parser.add_argument("--expect-strict", action="store_true",
                        help="Treat not-applicable verdicts as expectation mismatches")
    parser.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    parser.add_argument("-q", "--quiet", action="store_true", help="Warnings and errors only")

    sub = parser.add_subparsers(dest="command")

    check = sub.add_parser("check", help="Run one property check")
    check.add_argument("assignment")
    check.add_argument("property")
    check.add_argument("--dims", type=_csv_ints)
    check.add_argument("--trials", type=int)
    check.add_argument("--tol", type=float)

    fit = sub.add_parser("gleason-fit", help="Least-squares density fit of a frame function")
    fit.add_argument("assignment")
    fit.add_argument("--d", type=int, default=3)
    fit.add_argument("--frames", type=int, default=20)
    fit.add_argument("--subspaces", type=_csv_ints, default=[])

    env = sub.add_parser("envariance", help="Swap residuals and the exact 1/n derivation")
    env.add_argument("--n", type=_csv_ints, default=[2, 3, 4])

    fine = sub.add_parser("finegrain", help="Fine-grained weights against the conditional chain")
    fine.add_argument("pairs", nargs="+", type=_pair, metavar="M:N")

    hartle = sub.add_parser("hartle", help="Frequency deviation norm over a grid of N")
    hartle.add_argument("--p", type=_csv, default=["1/2", "1/2"])
    hartle.add_argument("--k", type=int, default=0)
    hartle.add_argument("--grid", type=_csv_ints, default=[100, 1000, 10000, 100000])

    cont = sub.add_parser("continuity", help="Probe an assignment for jumps along a path")
    cont.add_argument("assignment")
    cont.add_argument("path")
    cont.add_argument("--grid", type=_csv, required=True, help="Comma-separated rational or Q(sqrt2) literals")
    cont.add_argument("--tol", type=float)

    path = sub.add_parser("pathology", help="Cauchy checks and discontinuity witness for two-slope")
    path.add_argument("--c1", default="1")
    path.add_argument("--c2", default="10000")
    path.add_argument("--pairs", type=int, default=10000)
    path.add_argument("--within", type=float, default=1e-6)

    sub.add_parser("list", help="List assignments, properties and harnesses")
    return parser


def _configure_logging(verbose: bool, quiet: bool) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _emit(result: Any) -> None:
    if hasattr(result, "model_dump"):
        result = result.model_dump(mode="json")
    print(json.dumps(result, indent=2))


def _run_command(args: argparse.Namespace) -> int:
    if args.command == "list":
        sys.stdout.write(list_catalog())
        return EXIT_OK

    with BornLab(seed=args.seed or 0, jobs=args.jobs) as lab:
        if args.command == "check":
            _emit(lab.check(args.assignment, args.property, args.dims, args.trials, args.tol))
        elif args.command == "gleason-fit":
            _emit(lab.gleason_fit(args.assignment, args.d, args.frames, args.subspaces))
        elif args.command == "envariance":
            _emit(lab.envariance(args.n))
        elif args.command == "finegrain":
            _emit(lab.finegrain(args.pairs))
        elif args.command == "hartle":
            _emit(lab.hartle(args.p, args.k, args.grid))
        elif args.command == "continuity":
            grid = [grid_point(g) for g in args.grid]
            _emit(lab.continuity(args.assignment, args.path, grid, args.tol))
        elif args.command == "pathology":
            _emit(lab.pathology(parse_rational(args.c1), parse_rational(args.c2), args.pairs, args.within))
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _configure_logging(args.verbose, args.quiet)

    if args.jobs < 1:
        print("bornlab: --jobs must be at least 1", file=sys.stderr)
        return EXIT_INVALID_INPUT

    try:
        if args.scenario:
            report, code = run_scenario(args.scenario, args.out, args.seed, args.jobs, args.expect_strict)
            for mismatch in report.mismatches:
                print(f"MISMATCH {mismatch}", file=sys.stderr)
            return code
        if args.command is None:
            parser.print_usage(sys.stderr)
            return EXIT_INVALID_INPUT
        return _run_command(args)
    except ScenarioError as e:
        print(f"bornlab: {e}", file=sys.stderr)
        return EXIT_INVALID_INPUT
    except BornLabError as e:
        print(f"bornlab: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_INVALID_INPUT


if __name__ == "__main__":
    sys.exit(main())
