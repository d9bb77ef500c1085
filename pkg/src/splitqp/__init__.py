"""splitqp: an operator-splitting solver for convex quadratic programs.

    minimize    1/2 x' P x + q' x
    subject to  l <= A x <= u

with sparse quasi-definite LDL^T linear algebra, matrix equilibration,
primal/dual infeasibility certificates, solution polishing, warm starting
and factorization caching for parametric problems.
"""

from .bench import (check_optimality, normalized_ratios, run_bench,
                    run_lasso_path, shifted_geometric_mean)
from .linsys import (KktMatrix, NumericFactor, SymbolicFactor, ZeroPivotError,
                     cg_solve_reduced, form_kkt, kkt_solve, numeric_factor,
                     symbolic_factor, update_rho_values)
from .polish import ActiveSets, guess_active_sets, iterative_refine, polish
from .probgen import (CLASSES, GenSpec, gen_eq_qp, gen_huber, gen_lasso,
                      gen_optimal_control, gen_portfolio, gen_random_qp,
                      gen_svm, generate, portfolio_update_values)
from .problem import ProblemData, ProblemError, problem_from_dense
from .qpio import QpFileError, read_qp, write_qp, write_result
from .reference import dense_reference_solve
from .scaling import ScalingResult, ruiz_equilibrate, unscale_solution
from .settings import Settings
from .solver import (DUAL_INFEASIBLE, MAX_ITER_REACHED, NUMERICAL_ERROR,
                     PRIMAL_INFEASIBLE, SOLVED, SOLVED_INACCURATE,
                     TIME_LIMIT_REACHED, SolveResult, Solver, setup, solve)
from .sparse import (INFTY, CscMatrix, SparseError, csc_from_dense,
                     csc_from_triplets, csc_identity, csc_zeros,
                     inf_norm_columns, spmv)

__version__ = "0.1.0"

__all__ = [
    "CscMatrix", "csc_from_triplets", "csc_from_dense", "csc_identity",
    "csc_zeros", "spmv", "inf_norm_columns", "INFTY", "SparseError",
    "ProblemData", "ProblemError", "problem_from_dense",
    "Settings", "Solver", "SolveResult", "setup", "solve",
    "SOLVED", "SOLVED_INACCURATE", "PRIMAL_INFEASIBLE", "DUAL_INFEASIBLE",
    "MAX_ITER_REACHED", "TIME_LIMIT_REACHED", "NUMERICAL_ERROR",
    "KktMatrix", "SymbolicFactor", "NumericFactor", "ZeroPivotError",
    "form_kkt", "symbolic_factor", "numeric_factor", "kkt_solve",
    "update_rho_values", "cg_solve_reduced",
    "ScalingResult", "ruiz_equilibrate", "unscale_solution",
    "ActiveSets", "guess_active_sets", "polish", "iterative_refine",
    "GenSpec", "generate", "CLASSES", "gen_random_qp", "gen_eq_qp",
    "gen_optimal_control", "gen_portfolio", "gen_lasso", "gen_huber",
    "gen_svm", "portfolio_update_values", "dense_reference_solve",
    "read_qp", "write_qp", "write_result", "QpFileError",
    "shifted_geometric_mean", "normalized_ratios", "check_optimality",
    "run_bench", "run_lasso_path",
]
