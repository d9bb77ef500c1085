"""Command-line front end: solve instances, generate corpora, run benches.

    splitqp solve problem.json --eps-abs 1e-5 --eps-rel 1e-5
    splitqp generate random_qp --dims 10,20 --seeds 0:10 --out-dir corpus/
    splitqp bench corpus/ --repeat 3 --csv summary.csv
    splitqp bench --warm-start-study lasso --dim 50

Settings flags mirror the Settings fields in kebab-case.
"""

import argparse
import dataclasses
import json
import sys

from . import probgen, qpio
from .bench import run_bench, run_lasso_path
from .settings import Settings
from .solver import Solver

_BOOL_FIELDS = {"adaptive_rho", "polish", "freeze_scaling"}
_INT_FIELDS = {"max_iter", "check_termination_every", "scaling_iters",
               "refine_steps", "cg_max_iter", "max_rho_updates"}
_STR_FIELDS = {"linsys_backend", "ordering"}


def _add_settings_flags(parser):
    for f in dataclasses.fields(Settings):
        flag = "--" + f.name.replace("_", "-")
        if f.name in _BOOL_FIELDS:
            parser.add_argument(flag, action=argparse.BooleanOptionalAction,
                                default=None)
        elif f.name in _INT_FIELDS:
            parser.add_argument(flag, type=int, default=None)
        elif f.name in _STR_FIELDS:
            parser.add_argument(flag, type=str, default=None)
        else:
            parser.add_argument(flag, type=float, default=None)


def _settings_from_args(args):
    overrides = {}
    for f in dataclasses.fields(Settings):
        val = getattr(args, f.name, None)
        if val is not None:
            overrides[f.name] = val
    return Settings().replace(**overrides) if overrides else Settings()


def _parse_int_list(text):
    return [int(tok) for tok in text.split(",") if tok]


def _parse_seed_range(text):
    if ":" in text:
        lo, hi = text.split(":")
        return list(range(int(lo), int(hi)))
    return _parse_int_list(text)


def cmd_solve(args):
    try:
        problem = qpio.read_qp(args.input)
    except (OSError, qpio.QpFileError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        settings = _settings_from_args(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    result = Solver(problem, settings).solve()
    payload = json.dumps(result.to_dict(), indent=2)
    print(payload)
    if args.out:
        qpio.write_result(result, args.out)
    if result.status in ("solved", "solved_inaccurate",
                         "primal_infeasible", "dual_infeasible"):
        return 0
    if result.status == "numerical_error":
        return 2
    return 3   # iteration or time budget exhausted


def cmd_generate(args):
    import os
    if args.problem_class == "all":
        classes = probgen.CLASSES
    elif args.problem_class in probgen.CLASSES:
        classes = (args.problem_class,)
    else:
        print(f"error: unknown class {args.problem_class!r}; "
              f"choose from {', '.join(probgen.CLASSES)} or 'all'",
              file=sys.stderr)
        return 1
    dims = _parse_int_list(args.dims)
    seeds = _parse_seed_range(args.seeds)
    os.makedirs(args.out_dir, exist_ok=True)
    count = 0
    for cls in classes:
        for dim in dims:
            for seed in seeds:
                spec = probgen.GenSpec(cls, dim, seed)
                problem = probgen.generate(spec)
                name = f"{cls}_d{dim}_s{seed}.json"
                qpio.write_qp(problem, os.path.join(args.out_dir, name))
                count += 1
    print(f"wrote {count} instance files to {args.out_dir}")
    return 0


def cmd_bench(args):
    try:
        settings = _settings_from_args(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if args.warm_start_study:
        if args.warm_start_study != "lasso":
            print("error: only the lasso warm-start study is available",
                  file=sys.stderr)
            return 1
        stats = run_lasso_path(n=args.dim, n_lambdas=args.n_lambdas,
                               seed=args.seed, settings=settings)
        print(json.dumps({
            "cold_iterations": stats["cold"]["total_iterations"],
            "warm_iterations": stats["warm"]["total_iterations"],
            "iteration_improvement": stats["iteration_improvement"],
            "time_improvement": stats["time_improvement"],
            "warm_numeric_factorizations":
                stats["warm"]["numeric_factorizations"],
            "warm_symbolic_factorizations":
                stats["warm"]["symbolic_factorizations"],
        }, indent=2))
        return 0
    if not args.corpus:
        print("error: corpus directory required (or --warm-start-study)",
              file=sys.stderr)
        return 1
    try:
        report = run_bench(args.corpus, settings=settings,
                           repeat=args.repeat, time_cap=args.time_cap)
    except (OSError, ValueError, qpio.QpFileError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(report.table())
    if args.csv:
        report.to_csv(args.csv)
    if args.records_csv:
        report.records_to_csv(args.records_csv)
    return 0 if not any(r.failure for r in report.records) else 3


def build_parser():
    parser = argparse.ArgumentParser(
        prog="splitqp",
        description="Operator-splitting convex QP solver")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve a QP instance file")
    p_solve.add_argument("input")
    p_solve.add_argument("--out", default=None,
                         help="also write the result JSON to this path")
    _add_settings_flags(p_solve)
    p_solve.set_defaults(func=cmd_solve)

    p_gen = sub.add_parser("generate", help="emit seeded instance files")
    p_gen.add_argument("problem_class")
    p_gen.add_argument("--dims", required=True,
                       help="comma-separated leading dimensions")
    p_gen.add_argument("--seeds", default="0",
                       help="comma list or lo:hi range of seeds")
    p_gen.add_argument("--out-dir", required=True)
    p_gen.set_defaults(func=cmd_generate)

    p_bench = sub.add_parser("bench", help="run a corpus benchmark")
    p_bench.add_argument("corpus", nargs="?", default=None)
    p_bench.add_argument("--repeat", type=int, default=1,
                         help="repeat-and-median for sub-10ms instances")
    p_bench.add_argument("--time-cap", type=float, default=1000.0,
                         help="time charged to failed instances (seconds)")
    p_bench.add_argument("--csv", default=None, help="aggregate table CSV")
    p_bench.add_argument("--records-csv", default=None,
                         help="per-instance records CSV")
    p_bench.add_argument("--warm-start-study", default=None,
                         help="run the parametric warm-start study instead")
    p_bench.add_argument("--dim", type=int, default=50)
    p_bench.add_argument("--n-lambdas", type=int, default=100)
    p_bench.add_argument("--seed", type=int, default=0)
    _add_settings_flags(p_bench)
    p_bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
