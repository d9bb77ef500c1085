#!/usr/bin/env python3
"""Regularization-path study: warm starting + factorization caching against
cold restarts, at a few problem sizes.

    python3 scripts/lasso_warmstart_study.py --sizes 20,50 --n-lambdas 100
"""

import argparse

from splitqp import run_lasso_path
from splitqp.settings import Settings


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", default="20,50",
                    help="comma-separated feature counts")
    ap.add_argument("--n-lambdas", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    header = (f"{'n':>5} {'iters cold':>12} {'iters warm':>12} "
              f"{'iter x':>8} {'time cold':>10} {'time warm':>10} "
              f"{'time x':>8} {'factors':>8}")
    print(header)
    print("-" * len(header))
    for n in (int(t) for t in args.sizes.split(",")):
        stats = run_lasso_path(n=n, n_lambdas=args.n_lambdas, seed=args.seed,
                               settings=Settings(polish=False))
        warm, cold = stats["warm"], stats["cold"]
        print(f"{n:>5} {cold['total_iterations']:>12} "
              f"{warm['total_iterations']:>12} "
              f"{stats['iteration_improvement']:>8.2f} "
              f"{cold['time']:>10.2f} {warm['time']:>10.2f} "
              f"{stats['time_improvement']:>8.2f} "
              f"{warm['numeric_factorizations']:>8}")


if __name__ == "__main__":
    main()
