"""Command-line front end.

Exit codes: 0 success, 1 infeasible, 2 usage or input error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .bench import (export_features_csv, extract_features, metrics_json, run_bench,
                    write_bench_outputs)
from .bnb import SolveStatus, SolverConfig, solve
from .certify import (build_certificate, mask, members, proof_bounds, redundancy_table,
                      verify_certificate)
from .core import Box
from .ingest import (ProblemFormatError, load_problem, reverse_constraints, reverse_variables,
                     serialize_problem)
from .lpsolve import LpNumericalError
from .rlt import BoundMode

EXIT_OK, EXIT_INFEASIBLE, EXIT_USAGE, EXIT_NUMERICAL = 0, 1, 2, 3


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _configs(text: str) -> list[str]:
    labels = [v.strip() for v in text.split(",") if v.strip()]
    for v in labels:
        if v not in (m.value for m in BoundMode):
            raise argparse.ArgumentTypeError(f"unknown config {v!r}; use loose and/or tight")
    if not labels or len(set(labels)) != len(labels):
        raise argparse.ArgumentTypeError("configs must be a non-empty list without repeats")
    return labels


def _solver_flags(p: argparse.ArgumentParser):
    p.add_argument("--obbt", action="store_true", help="bound tightening at the root")
    p.add_argument("--fbbt", action="store_true", help="interval propagation at every node")
    p.add_argument("--epsilon", type=float, default=1e-3, help="gap tolerance (default 1e-3)")
    p.add_argument("--time-limit", type=float, default=3600.0,
                   help="seconds (default 3600)")
    p.add_argument("--theta-tol", type=float, default=1e-6,
                   help="largest θ-violation accepted as feasible")
    p.add_argument("--seed", type=int, default=0, help="reserved; the solver is deterministic")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rltbb",
                                     description="RLT branch-and-bound for polynomial programs")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve a problem file and print the result as JSON")
    s.add_argument("problem", type=Path)
    s.add_argument("--bounds", choices=[m.value for m in BoundMode], default="loose",
                   help="explicit bounds on RLT columns (default loose)")
    _solver_flags(s)
    s.add_argument("--out", type=Path, help="write the JSON here instead of stdout")

    c = sub.add_parser("certify", help="build and verify the dual certificate for a box")
    c.add_argument("--n", type=int, required=True)
    c.add_argument("--lower", type=_floats, required=True)
    c.add_argument("--upper", type=_floats, required=True)
    c.add_argument("--no-lp", dest="lp", action="store_false",
                   help="skip the LP cross-check and the redundancy table")
    c.add_argument("--out", type=Path)

    b = sub.add_parser("bench", help="run configs over a directory of problem files")
    b.add_argument("directory", type=Path)
    b.add_argument("--configs", type=_configs, default=["loose", "tight"],
                   help="comma-separated bound modes; the first is the reference")
    _solver_flags(b)
    b.add_argument("--out", type=Path, default=Path("bench_out"),
                   help="output directory (default bench_out)")

    f = sub.add_parser("features", help="instance features as CSV")
    f.add_argument("paths", type=Path, nargs="+", help="problem files or directories")
    f.add_argument("--out", type=Path)

    t = sub.add_parser("transform", help="rewrite a problem file")
    t.add_argument("problem", type=Path)
    t.add_argument("--reverse-vars", action="store_true")
    t.add_argument("--reverse-cons", action="store_true")
    t.add_argument("--out", type=Path)
    return parser


def _emit(text: str, out: Path | None):
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)


def _solver_config(args, bounds: str = "loose") -> SolverConfig:
    return SolverConfig(epsilon=args.epsilon, time_limit=args.time_limit,
                        bound_mode=BoundMode(bounds), obbt=args.obbt, fbbt=args.fbbt,
                        theta_tolerance=args.theta_tol)


def _problem_files(paths) -> list[Path]:
    files = []
    for p in paths:
        files.extend(sorted(p.glob("*.json")) if p.is_dir() else [p])
    return files


def cmd_solve(args) -> int:
    p = load_problem(args.problem)
    res = solve(p, _solver_config(args, args.bounds))
    _emit(json.dumps(res.to_dict(), indent=2) + "\n", args.out)
    return EXIT_INFEASIBLE if res.status is SolveStatus.INFEASIBLE else EXIT_OK


def _subset_label(T: int) -> str:
    return "{" + ",".join(str(i) for i in members(T)) + "}"


def cmd_certify(args) -> int:
    if len(args.lower) != args.n or len(args.upper) != args.n:
        raise ValueError(f"--lower and --upper need exactly {args.n} values")
    box = Box(tuple(args.lower), tuple(args.upper))
    cert = build_certificate(box, exact=True)
    rep = verify_certificate(cert)
    ref = args.n - 1
    out = {
        "n": args.n,
        "reference_variable": ref,
        "objective": rep.objective,
        "expected_objective": rep.expected_objective,
        "max_residual": rep.max_residual,
        "min_dual": rep.min_dual,
        "ok": rep.ok(),
        "bound_factor_duals": {_subset_label(T): float(v) for T, v in cert.bfc_duals.items()},
        "reduced_costs": {
            _subset_label(1 << ref): float(cert.rc_single),
            _subset_label(mask(range(ref))): float(cert.rc_allbutone),
        },
        "residuals": {_subset_label(R): v for R, v in rep.residuals.items()},
    }
    if args.lp:
        lo, hi = proof_bounds(box)
        out["proof_lp"] = {"min": lo, "max": hi}
        out["redundancy"] = redundancy_table(box)
    _emit(json.dumps(out, indent=2) + "\n", args.out)
    return EXIT_OK if rep.ok() else EXIT_NUMERICAL


def cmd_bench(args) -> int:
    files = _problem_files([args.directory])
    if not files:
        raise ValueError(f"no problem files in {args.directory}")
    records = run_bench(files, args.configs, _solver_config(args))
    features = {}
    for path in files:
        p = load_problem(path)
        features[p.name or path.stem] = extract_features(p)
    report = write_bench_outputs(args.out, records, args.configs, features)
    sys.stdout.write(metrics_json(report) + "\n")
    return EXIT_OK


def cmd_features(args) -> int:
    features = {}
    for path in _problem_files(args.paths):
        p = load_problem(path)
        features[p.name or path.stem] = extract_features(p)
    _emit(export_features_csv(features), args.out)
    return EXIT_OK


def cmd_transform(args) -> int:
    if not (args.reverse_vars or args.reverse_cons):
        raise ValueError("choose --reverse-vars and/or --reverse-cons")
    p = load_problem(args.problem)
    if args.reverse_vars:
        p = reverse_variables(p)
    if args.reverse_cons:
        p = reverse_constraints(p)
    _emit(serialize_problem(p) + "\n", args.out)
    return EXIT_OK


COMMANDS = {"solve": cmd_solve, "certify": cmd_certify, "bench": cmd_bench,
            "features": cmd_features, "transform": cmd_transform}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except LpNumericalError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ProblemFormatError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
