"""High-accuracy solution polishing.

From the sign pattern of the dual iterate we guess which constraints are
active at the optimum, solve a small regularized quasi-definite system on
that active set, correct the regularization error with a fixed number of
iterative-refinement passes, and keep the polished point only when it is
at least as good as the input on every measure. Polishing works on the
original (unscaled) data; equilibration exists to help the splitting
iteration, not the direct solve.
"""

from dataclasses import dataclass

import numpy as np

from . import linsys
from .sparse import csc_from_triplets, spmv


@dataclass
class ActiveSets:
    lower: np.ndarray   # indices with y_i < 0
    upper: np.ndarray   # indices with y_i > 0

    @property
    def size(self):
        return self.lower.shape[0] + self.upper.shape[0]


@dataclass
class PolishResult:
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    prim_res: float
    dual_res: float
    accepted: bool


def guess_active_sets(y):
    """Strict-sign classification of the dual vector; zeros are inactive."""
    y = np.asarray(y)
    return ActiveSets(lower=np.flatnonzero(y < 0.0),
                      upper=np.flatnonzero(y > 0.0))


def _select_rows(A, rows):
    """Rows of A (in the given order) as a new CSC matrix."""
    rowmap = np.full(A.nrows, -1, dtype=np.int64)
    rowmap[rows] = np.arange(rows.shape[0], dtype=np.int64)
    r, c, v = A.triplets()
    keep = rowmap[r] >= 0
    return csc_from_triplets(rowmap[r[keep]], c[keep], v[keep],
                             rows.shape[0], A.ncols)


def iterative_refine(apply_true, fac, sym, g, steps):
    """Solve K t = g given a factorization of the regularized K + dK.

    t0 comes from the regularized factor; each pass adds the correction
    (K + dK)^-1 (g - K t). steps=0 returns the regularized solution.
    """
    t = linsys.kkt_solve(fac, sym, g)
    for _ in range(steps):
        resid = g - apply_true(t)
        t = t + linsys.kkt_solve(fac, sym, resid)
    return t


def polish(problem, solution, sets, delta=1e-6, refine_steps=3,
           eps_abs=1e-3, eps_rel=1e-3, pre_prim_res=np.inf,
           pre_dual_res=np.inf, ordering="amd"):
    """Polish a terminated solve; never degrades the incoming solution."""
    x_in, y_in, z_in = solution
    n = problem.n
    rows = np.concatenate((sets.lower, sets.upper))
    n_act = rows.shape[0]

    A_act = _select_rows(problem.A, rows)
    rhs = np.concatenate((-problem.q,
                          problem.l[sets.lower], problem.u[sets.upper]))

    def apply_true(t):
        # the unregularized active-set KKT matrix, applied matrix-free
        tx, ty = t[:n], t[n:]
        top = spmv(problem.P, tx, symmetric_upper=True)
        if n_act:
            top = top + spmv(A_act, ty, transpose=True)
            bottom = spmv(A_act, tx)
        else:
            bottom = np.zeros(0)
        return np.concatenate((top, bottom))

    try:
        kkt = linsys.form_kkt(problem.P, A_act, delta,
                              np.full(n_act, 1.0 / delta))
        sym = linsys.symbolic_factor(kkt, ordering)
        fac = linsys.numeric_factor(kkt, sym)
    except linsys.ZeroPivotError:
        return PolishResult(x_in, y_in, z_in, pre_prim_res, pre_dual_res,
                            accepted=False)

    t = iterative_refine(apply_true, fac, sym, rhs, refine_steps)
    if not np.all(np.isfinite(t)):
        # a wrong, rank-deficient active-set guess can make the refinement
        # diverge; the candidate is worthless either way
        return PolishResult(x_in, y_in, z_in, pre_prim_res, pre_dual_res,
                            accepted=False)
    x = t[:n]
    y = np.zeros(problem.m)
    y[rows] = t[n:]
    ax = spmv(problem.A, x)
    z = np.clip(ax, problem.l, problem.u)

    r_prim = ax - z
    r_dual = (spmv(problem.P, x, symmetric_upper=True) + problem.q
              + spmv(problem.A, y, transpose=True))
    prim_res = float(np.max(np.abs(r_prim))) if r_prim.shape[0] else 0.0
    dual_res = float(np.max(np.abs(r_dual)))

    eps_prim = eps_abs + eps_rel * max(
        float(np.max(np.abs(ax))) if ax.shape[0] else 0.0,
        float(np.max(np.abs(z))) if z.shape[0] else 0.0)
    px = spmv(problem.P, x, symmetric_upper=True)
    aty = spmv(problem.A, y, transpose=True)
    eps_dual = eps_abs + eps_rel * max(
        float(np.max(np.abs(px))), float(np.max(np.abs(aty))),
        float(np.max(np.abs(problem.q))) if n else 0.0)

    accepted = (prim_res <= min(pre_prim_res, eps_prim)
                and dual_res <= min(pre_dual_res, eps_dual)
                and _complementarity_ok(y, z, problem.l, problem.u))
    if not accepted:
        return PolishResult(x_in, y_in, z_in, pre_prim_res, pre_dual_res,
                            accepted=False)
    return PolishResult(x, y, z, prim_res, dual_res, accepted=True)


def _complementarity_ok(y, z, l, u, tol=1e-9):
    if y.shape[0] == 0:
        return True
    y_pos = np.maximum(y, 0.0)
    y_neg = np.minimum(y, 0.0)
    # a positive multiplier on an unbounded-above row (or mirrored) can
    # never satisfy the sign conditions
    if np.any((y_pos > 0) & np.isinf(u)) or np.any((y_neg < 0) & np.isinf(l)):
        return False
    scale = tol * (1.0 + float(np.max(np.abs(y))) * float(np.max(np.abs(z))))
    upper_gap = float(abs(np.sum(y_pos[np.isfinite(u)] * (z - u)[np.isfinite(u)])))
    lower_gap = float(abs(np.sum(y_neg[np.isfinite(l)] * (z - l)[np.isfinite(l)])))
    return upper_gap <= scale and lower_gap <= scale
