"""QP problem container: minimize 1/2 x'Px + q'x subject to l <= Ax <= u."""

import numpy as np

from .sparse import INFTY, CscMatrix, csc_from_dense, csc_from_triplets


class ProblemError(ValueError):
    pass


def _normalize_bounds(l, u, m):
    l = np.asarray(l, dtype=np.float64).copy()
    u = np.asarray(u, dtype=np.float64).copy()
    if l.shape != (m,) or u.shape != (m,):
        raise ProblemError("bound vectors must have length m")
    if np.any(np.isnan(l)) or np.any(np.isnan(u)):
        raise ProblemError("NaN in bounds")
    l[l <= -INFTY] = -np.inf
    u[u >= INFTY] = np.inf
    if np.any(l >= INFTY):
        raise ProblemError("lower bound is +inf")
    if np.any(u <= -INFTY):
        raise ProblemError("upper bound is -inf")
    return l, u


def _fold_upper(P):
    """Fold a symmetric CSC matrix to its upper triangle.

    Entries below the diagonal must mirror entries above it (when both are
    present they have to agree); the folded matrix keeps one copy.
    """
    rows, cols, vals = P.triplets()
    lower = rows > cols
    if not np.any(lower):
        return P
    r = np.where(lower, cols, rows)
    c = np.where(lower, rows, cols)
    merged = {}
    for k in range(r.shape[0]):
        key = (int(r[k]), int(c[k]))
        v = float(vals[k])
        if key in merged:
            if abs(merged[key] - v) > 1e-12 * max(1.0, abs(v)):
                raise ProblemError(
                    f"asymmetric duplicate entry at {key} while folding "
                    "the objective matrix to upper-triangular storage")
        else:
            merged[key] = v
    rr = np.array([k[0] for k in merged], dtype=np.int64)
    cc = np.array([k[1] for k in merged], dtype=np.int64)
    vv = np.array(list(merged.values()))
    return csc_from_triplets(rr, cc, vv, P.nrows, P.ncols,
                             sum_duplicates=False)


class ProblemData:
    """A QP instance. P is stored upper-triangular; A is m-by-n.

    Inconsistent boxes (l > u on a row) are representable; the solver
    reports them as primal infeasible at setup rather than raising here.
    """

    def __init__(self, P, q, A, l, u, metadata=None):
        if not isinstance(P, CscMatrix) or not isinstance(A, CscMatrix):
            raise ProblemError("P and A must be CscMatrix")
        if P.nrows != P.ncols:
            raise ProblemError("P must be square")
        n = P.ncols
        if A.ncols != n:
            raise ProblemError("A has wrong number of columns")
        m = A.nrows
        q = np.asarray(q, dtype=np.float64).copy()
        if q.shape != (n,):
            raise ProblemError("q has wrong length")
        if not np.all(np.isfinite(P.values)) or not np.all(np.isfinite(A.values)):
            raise ProblemError("non-finite matrix entries")
        if not np.all(np.isfinite(q)):
            raise ProblemError("non-finite entries in q")
        if not P.is_upper_triangular():
            P = _fold_upper(P)
        self.P = P
        self.q = q
        self.A = A
        self.l, self.u = _normalize_bounds(l, u, m)
        self.metadata = dict(metadata) if metadata else {}

    @property
    def n(self):
        return self.P.ncols

    @property
    def m(self):
        return self.A.nrows

    @property
    def nnz(self):
        return self.P.nnz + self.A.nnz

    def objective(self, x):
        from .sparse import spmv
        return 0.5 * float(x @ spmv(self.P, x, symmetric_upper=True)) + float(self.q @ x)

    def __repr__(self):
        return f"ProblemData(n={self.n}, m={self.m}, nnz={self.nnz})"


def problem_from_dense(P, q, A, l, u, metadata=None):
    P = np.atleast_2d(np.asarray(P, dtype=np.float64))
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    if A.size == 0:
        A = A.reshape(0, P.shape[0])
    if not np.allclose(P, P.T, rtol=0, atol=0):
        raise ProblemError("dense P must be symmetric")
    return ProblemData(csc_from_dense(P, upper=True), q,
                       csc_from_dense(A), l, u, metadata=metadata)
