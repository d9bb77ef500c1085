"""Symmetric equilibration of the problem data and the scaled/unscaled
conversions used by the termination logic.

The stacked data matrix [[P, A'], [A, 0]] is equilibrated column by column
with the inverse square roots of the column infinity norms, followed by a
cost normalization that divides the objective by the larger of the average
column norm of the scaled P and the norm of the scaled q. Infinite bounds
are scaled symbolically so +/-inf survives bit-exactly.
"""

from dataclasses import dataclass

import numpy as np

from .sparse import CscMatrix, inf_norm_columns, inf_norm_rows, scale_csc


@dataclass
class ScalingResult:
    D: np.ndarray          # positive column scaling of the variables, size n
    E: np.ndarray          # positive row scaling of the constraints, size m
    c: float               # positive cost scalar
    P: CscMatrix           # scaled objective matrix c * D P D (upper)
    q: np.ndarray          # scaled linear cost c * D q
    A: CscMatrix           # scaled constraint matrix E A D
    l: np.ndarray          # scaled lower bounds E l
    u: np.ndarray          # scaled upper bounds E u
    iterations_used: int = 0
    converged: bool = True

    @property
    def is_identity(self):
        return (self.c == 1.0 and np.all(self.D == 1.0)
                and np.all(self.E == 1.0))


def _scale_bounds(vec, scale):
    out = vec.copy()
    finite = np.isfinite(out)
    out[finite] *= scale[finite]
    return out


def ruiz_equilibrate(P, q, A, l, u, eps_equil=1e-3, max_iter=10):
    """Equilibrate (P, q, A, l, u); max_iter=0 returns the identity scaling."""
    n = P.ncols
    m = A.nrows
    D = np.ones(n)
    E = np.ones(m)
    c = 1.0
    Pb, qb, Ab = P.copy(), q.copy(), A.copy()
    lb, ub = l.copy(), u.copy()

    iterations = 0
    converged = max_iter == 0
    for _ in range(max_iter):
        iterations += 1
        p_norms = inf_norm_columns(Pb, symmetric_upper=True)
        if m:
            a_col = inf_norm_columns(Ab)
            a_row = inf_norm_rows(Ab)
            col_norms = np.concatenate((np.maximum(p_norms, a_col), a_row))
        else:
            col_norms = p_norms
        delta = np.ones(n + m)
        pos = col_norms > 0.0
        delta[pos] = 1.0 / np.sqrt(col_norms[pos])
        dx, dz = delta[:n], delta[n:]

        Pb = scale_csc(Pb, dx, dx)
        qb = qb * dx
        if m:
            Ab = scale_csc(Ab, dz, dx)
            lb = _scale_bounds(lb, dz)
            ub = _scale_bounds(ub, dz)

        p_mean = float(np.mean(inf_norm_columns(Pb, symmetric_upper=True))) if n else 0.0
        q_norm = float(np.max(np.abs(qb))) if n else 0.0
        denom = max(p_mean, q_norm)
        gamma = 1.0 / denom if denom > 0.0 else 1.0
        Pb = CscMatrix(Pb.nrows, Pb.ncols, Pb.colptr, Pb.rowind,
                       Pb.values * gamma, validate=False)
        qb = qb * gamma

        D *= dx
        E *= dz
        c *= gamma
        if float(np.max(np.abs(1.0 - delta))) <= eps_equil:
            converged = True
            break

    return ScalingResult(D=D, E=E, c=c, P=Pb, q=qb, A=Ab, l=lb, u=ub,
                         iterations_used=iterations, converged=converged)


def identity_scaling(P, q, A, l, u):
    return ruiz_equilibrate(P, q, A, l, u, max_iter=0)


def unscale_solution(x_bar, y_bar, z_bar, scaling):
    """Map scaled iterates back to the original problem's variables."""
    x = scaling.D * x_bar
    y = (scaling.E / scaling.c) * y_bar
    z = z_bar / scaling.E if scaling.E.shape[0] else z_bar.copy()
    return x, y, z


def scale_iterates(x, y, z, scaling):
    """Inverse of unscale_solution: original-space guesses to scaled space."""
    x_bar = x / scaling.D
    y_bar = (scaling.c / scaling.E) * y if scaling.E.shape[0] else y.copy()
    z_bar = scaling.E * z if scaling.E.shape[0] else z.copy()
    return x_bar, y_bar, z_bar


def unscaled_residuals(scaling, x_bar, y_bar, z_bar,
                       ax_bar=None, px_bar=None, aty_bar=None):
    """Residuals of the original problem computed from scaled iterates.

    With scaling disabled these reduce to (Ax - z, Px + q + A'y). The
    scaled products can be passed in when the caller already has them.
    """
    from .sparse import spmv
    if ax_bar is None:
        ax_bar = spmv(scaling.A, x_bar)
    if px_bar is None:
        px_bar = spmv(scaling.P, x_bar, symmetric_upper=True)
    if aty_bar is None:
        aty_bar = spmv(scaling.A, y_bar, transpose=True)
    r_prim = (ax_bar - z_bar) / scaling.E if scaling.E.shape[0] else ax_bar - z_bar
    r_dual = (px_bar + scaling.q + aty_bar) / (scaling.c * scaling.D)
    return r_prim, r_dual
