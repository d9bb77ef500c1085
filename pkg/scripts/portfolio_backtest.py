#!/usr/bin/env python3
"""Parametric portfolio loop: daily expected-return updates (vectors only,
cached factorization) with a monthly risk-model refresh (numeric-only
refactorization on the cached symbolic analysis).

    python3 scripts/portfolio_backtest.py --factors 3 --months 12
"""

import argparse
import time

import splitqp as sq
from splitqp.probgen import SplitMix64
from splitqp.settings import Settings


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--factors", type=int, default=3)
    ap.add_argument("--months", type=int, default=12)
    ap.add_argument("--days-per-month", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    problem = sq.gen_portfolio(args.factors, args.seed)
    n = 100 * args.factors
    solver = sq.Solver(problem, Settings(polish=False))
    rng = SplitMix64(args.seed, 77)

    t0 = time.perf_counter()
    solves = 0
    mu = -problem.q[:n].copy()
    for month in range(args.months):
        if month > 0:
            pv, av = sq.portfolio_update_values(solver.problem,
                                                seed=args.seed + month)
            solver.update_matrices(P_values=pv, A_values=av)
        for _ in range(args.days_per_month):
            mu = 0.9 * mu + rng.normal(n, std=0.1)
            q_new = solver.problem.q.copy()
            q_new[:n] = -mu
            solver.update_vectors(q=q_new)
            res = solver.solve()
            assert res.is_solved, res.status
            solves += 1
    elapsed = time.perf_counter() - t0

    print(f"{solves} solves in {elapsed:.2f}s "
          f"({1e3 * elapsed / solves:.2f} ms per solve)")
    print(f"numeric factorizations : {solver.num_numeric_factorizations} "
          f"(1 setup + {args.months - 1} monthly + "
          f"{solver.rho_updates} step-size)")
    print(f"symbolic factorizations: {solver.num_symbolic_factorizations}")


if __name__ == "__main__":
    main()
