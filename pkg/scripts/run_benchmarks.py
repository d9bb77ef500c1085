#!/usr/bin/env python3
"""Generate a desk-scale corpus over all seven problem families, solve it
at low and high accuracy, and write the aggregate tables.

    python3 scripts/run_benchmarks.py --out-dir bench_out --seeds 5
"""

import argparse
import os

import splitqp as sq
from splitqp.bench import run_bench
from splitqp.settings import Settings

DIMS = {
    "random_qp": [4, 8], "eq_qp": [10, 20], "optimal_control": [2, 4],
    "portfolio": [2, 3], "lasso": [3, 5], "huber": [2, 4], "svm": [2, 4],
}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out-dir", default="bench_out")
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    corpus = os.path.join(args.out_dir, "corpus")
    os.makedirs(corpus, exist_ok=True)
    count = 0
    for cls, dims in DIMS.items():
        for dim in dims:
            for seed in range(args.seeds):
                problem = sq.generate(sq.GenSpec(cls, dim, seed))
                sq.write_qp(problem,
                            os.path.join(corpus, f"{cls}_d{dim}_s{seed}.json"))
                count += 1
    print(f"generated {count} instances in {corpus}")

    for label, settings in (
            ("low", Settings(max_iter=200_000)),
            ("high", Settings(eps_abs=1e-5, eps_rel=1e-5,
                              max_iter=200_000))):
        report = run_bench(corpus, settings=settings, repeat=args.repeat)
        print(f"\n=== {label} accuracy (eps = {settings.eps_abs:g}) ===")
        print(report.table())
        report.to_csv(os.path.join(args.out_dir, f"aggregate_{label}.csv"))
        report.records_to_csv(os.path.join(args.out_dir, f"records_{label}.csv"))
    print(f"\nCSV tables written to {args.out_dir}")


if __name__ == "__main__":
    main()
