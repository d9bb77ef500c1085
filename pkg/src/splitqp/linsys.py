"""Quasi-definite KKT systems and their solution.

The coefficient matrix is [[P + sigma*I, A'], [A, -diag(rho)^-1]] stored as
an upper triangle with every block diagonal structurally present, so that
rho refreshes touch exactly m stored values and numeric refactorization can
reuse the symbolic analysis. A conjugate-gradient backend on the reduced
system P + sigma*I + A' diag(rho) A is provided as an alternative.

Symbolic and numeric factors are immutable once created and safe to share
across threads; factorization and solve calls are single-threaded, and
distinct factorizations over distinct data may proceed in parallel.
"""

import numpy as np

from . import _kernels
from .ordering import minimum_degree_order, natural_order
from .sparse import CscMatrix, SparseError

ZERO_PIVOT_TOL = 1e-15


class ZeroPivotError(ArithmeticError):
    """A diagonal pivot fell below the tolerance: quasi-definiteness was
    lost numerically. Callers may retry with a larger sigma."""


class KktMatrix:
    __slots__ = ("K", "n", "m", "sigma", "rho", "rho_diag_positions",
                 "_p_positions", "_sigma_positions", "_a_positions")

    def __init__(self, K, n, m, sigma, rho, rho_diag_positions,
                 p_positions, sigma_positions, a_positions):
        self.K = K
        self.n = n
        self.m = m
        self.sigma = sigma
        self.rho = rho
        self.rho_diag_positions = rho_diag_positions
        self._p_positions = p_positions
        self._sigma_positions = sigma_positions
        self._a_positions = a_positions

    @property
    def dim(self):
        return self.n + self.m

    def refresh_values(self, p_values=None, a_values=None, sigma=None, rho=None):
        """Overwrite stored numeric values in place; the pattern is fixed."""
        if sigma is not None:
            if sigma <= 0:
                raise ValueError("sigma must be positive")
            self.sigma = float(sigma)
        if rho is not None:
            rho = np.asarray(rho, dtype=np.float64)
            if rho.shape != (self.m,) or (self.m and rho.min() <= 0):
                raise ValueError("rho must be positive with length m")
            self.rho = rho.copy()
        vals = self.K.values
        if p_values is not None or a_values is not None or sigma is not None:
            if p_values is None or (a_values is None and self.m):
                raise ValueError("matrix refresh needs both value arrays")
            if p_values.shape[0] != self._p_positions.shape[0]:
                raise ValueError("P value array does not match stored pattern")
            vals[: self.K.nnz] = 0.0
            np.add.at(vals, self._p_positions, p_values)
            vals[self._sigma_positions] += self.sigma
            if self.m:
                if a_values.shape[0] != self._a_positions.shape[0]:
                    raise ValueError("A value array does not match stored pattern")
                vals[self._a_positions] = a_values
        if self.m:
            vals[self.rho_diag_positions] = -1.0 / self.rho


def form_kkt(P, A, sigma, rho):
    """Assemble the upper-triangular KKT matrix for given P, A, sigma, rho."""
    if P.nrows != P.ncols:
        raise SparseError("P must be square")
    n = P.ncols
    if A.ncols != n:
        raise SparseError("A column count must match P")
    m = A.nrows
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    rho = np.asarray(rho, dtype=np.float64)
    if rho.shape != (m,):
        raise ValueError("rho must have length m")
    if m and rho.min() <= 0:
        raise ValueError("rho entries must be positive")
    if not P.is_upper_triangular():
        raise SparseError("P must be in upper-triangular storage")

    # transpose view of A: entries of row j in column-sorted order
    a_order = np.argsort(A.rowind, kind="stable")
    a_cols = A.col_indices()[a_order]
    a_rowptr = np.zeros(m + 1, dtype=np.int64)
    np.add.at(a_rowptr, A.rowind + 1, 1)
    np.cumsum(a_rowptr, out=a_rowptr)

    p_diag_present = np.zeros(n, dtype=bool)
    p_cols = P.col_indices()
    p_diag_present[p_cols[P.rowind == p_cols]] = True

    dim = n + m
    nnz = P.nnz + int(np.sum(~p_diag_present)) + A.nnz + m
    colptr = np.zeros(dim + 1, dtype=np.int64)
    colptr[1:n + 1] = np.diff(P.colptr) + (~p_diag_present)
    colptr[n + 1:] = np.diff(a_rowptr) + 1
    np.cumsum(colptr, out=colptr)

    rowind = np.empty(nnz, dtype=np.int64)
    values = np.zeros(nnz)
    p_positions = np.empty(P.nnz, dtype=np.int64)
    sigma_positions = np.empty(n, dtype=np.int64)
    a_positions = np.empty(A.nnz, dtype=np.int64)
    rho_diag_positions = np.empty(m, dtype=np.int64)

    for j in range(n):
        dst = colptr[j]
        lo, hi = P.colptr[j], P.colptr[j + 1]
        cnt = hi - lo
        rowind[dst:dst + cnt] = P.rowind[lo:hi]
        p_positions[lo:hi] = np.arange(dst, dst + cnt)
        if p_diag_present[j]:
            sigma_positions[j] = dst + cnt - 1
        else:
            rowind[dst + cnt] = j
            sigma_positions[j] = dst + cnt
    for j in range(m):
        dst = colptr[n + j]
        lo, hi = a_rowptr[j], a_rowptr[j + 1]
        cnt = hi - lo
        rowind[dst:dst + cnt] = a_cols[lo:hi]
        a_positions[a_order[lo:hi]] = np.arange(dst, dst + cnt)
        rowind[dst + cnt] = n + j
        rho_diag_positions[j] = dst + cnt

    K = CscMatrix(dim, dim, colptr, rowind, values, validate=False)
    kkt = KktMatrix(K, n, m, float(sigma), rho.copy(), rho_diag_positions,
                    p_positions, sigma_positions, a_positions)
    kkt.refresh_values(p_values=P.values,
                       a_values=A.values if m else np.zeros(0))
    return kkt


class SymbolicFactor:
    __slots__ = ("dim", "perm", "iperm", "etree", "Lcolcounts",
                 "_perm_colptr", "_perm_rowind", "_value_map", "_Lp",
                 "factor_flops")

    def __init__(self, dim, perm, iperm, etree, Lcolcounts,
                 perm_colptr, perm_rowind, value_map):
        self.dim = dim
        self.perm = perm
        self.iperm = iperm
        self.etree = etree
        self.Lcolcounts = Lcolcounts
        self._perm_colptr = perm_colptr
        self._perm_rowind = perm_rowind
        self._value_map = value_map
        self._Lp = np.concatenate(([0], np.cumsum(Lcolcounts)))
        counts = Lcolcounts.astype(np.float64)
        self.factor_flops = float(np.sum(counts * (counts + 2.0)) + dim)

    @property
    def l_nnz(self):
        return int(self._Lp[-1])


class NumericFactor:
    __slots__ = ("L", "Dinv", "n_positive", "n_negative", "_perm_values")

    def __init__(self, L, Dinv, n_positive, perm_values):
        self.L = L
        self.Dinv = Dinv
        self.n_positive = n_positive
        self.n_negative = Dinv.shape[0] - n_positive
        # snapshot of the factored matrix (permuted order) for residual
        # refinement in kkt_solve; immune to later in-place rho refreshes
        self._perm_values = perm_values

    @property
    def D(self):
        return 1.0 / self.Dinv


def _permuted_upper(dim, colptr, rowind, perm):
    """Symmetric permutation of an upper CSC pattern, kept upper.

    Returns (colptr', rowind', value_map) where value_map gathers original
    values into the permuted entry order.
    """
    iperm = np.empty(dim, dtype=np.int64)
    iperm[perm] = np.arange(dim, dtype=np.int64)
    cols = np.repeat(np.arange(dim, dtype=np.int64), np.diff(colptr))
    r = iperm[rowind]
    c = iperm[cols]
    rr = np.minimum(r, c)
    cc = np.maximum(r, c)
    order = np.lexsort((rr, cc))
    new_colptr = np.zeros(dim + 1, dtype=np.int64)
    np.add.at(new_colptr, cc + 1, 1)
    np.cumsum(new_colptr, out=new_colptr)
    return new_colptr, rr[order], order, iperm


def symbolic_factor(kkt, ordering="amd"):
    """Fill-reducing analysis of the KKT pattern; numeric values unused."""
    dim = kkt.dim
    K = kkt.K
    if ordering == "natural":
        perm = natural_order(dim)
    elif ordering == "amd":
        perm = minimum_degree_order(dim, K.colptr, K.rowind)
    else:
        raise ValueError("ordering must be 'amd' or 'natural'")
    perm_colptr, perm_rowind, value_map, iperm = _permuted_upper(
        dim, K.colptr, K.rowind, perm)
    etree = np.empty(dim, dtype=np.int64)
    lnz = np.empty(dim, dtype=np.int64)
    work = np.empty(dim, dtype=np.int64)
    status = _kernels.etree_and_counts(dim, perm_colptr, perm_rowind,
                                       etree, lnz, work)
    if status < 0:
        raise SparseError("KKT pattern is missing a structural diagonal")
    return SymbolicFactor(dim, perm, iperm, etree, lnz,
                          perm_colptr, perm_rowind, value_map)


def numeric_factor(kkt, sym, pivot_tol=ZERO_PIVOT_TOL):
    """LDL^T with the cached symbolic analysis; no pivoting."""
    dim = sym.dim
    values_perm = kkt.K.values[sym._value_map]
    l_nnz = sym.l_nnz
    Li = np.empty(l_nnz, dtype=np.int64)
    Lx = np.empty(l_nnz)
    D = np.empty(dim)
    Dinv = np.empty(dim)
    Lp = np.empty(dim + 1, dtype=np.int64)
    y_vals = np.empty(dim)
    y_markers = np.empty(dim, dtype=np.int64)
    y_idx = np.empty(dim, dtype=np.int64)
    elim_buffer = np.empty(dim, dtype=np.int64)
    next_in_col = np.empty(dim, dtype=np.int64)
    status = _kernels.ldl_factor(
        dim, sym._perm_colptr, sym._perm_rowind, values_perm,
        sym.etree, sym.Lcolcounts, Lp, Li, Lx, D, Dinv, pivot_tol,
        y_vals, y_markers, y_idx, elim_buffer, next_in_col)
    if status < 0:
        raise ZeroPivotError("diagonal pivot below tolerance during LDL^T")
    L = CscMatrix(dim, dim, Lp, Li, Lx, validate=False)
    return NumericFactor(L, Dinv, int(status), values_perm)


def kkt_solve(fac, sym, rhs, refine_target=1e-12, max_refine=2):
    """Solve K t = rhs via permute, forward solve, Dinv scale, back solve.

    Wide step-size ranges make K ill-conditioned; residual refinement with
    the same factor restores the solve contract without new factorizations.
    """
    rhs = np.asarray(rhs, dtype=np.float64)
    if rhs.shape[0] != sym.dim:
        raise SparseError("right-hand side has wrong length")
    b = rhs[sym.perm]
    t = b.copy()
    _kernels.ldl_solve(sym.dim, fac.L.colptr, fac.L.rowind, fac.L.values,
                       fac.Dinv, t)
    if max_refine > 0:
        target = refine_target * max(1.0, float(np.max(np.abs(b))) if b.size else 0.0)
        kt = np.empty_like(t)
        for _ in range(max_refine):
            _kernels.csc_sym_matvec(sym._perm_colptr, sym._perm_rowind,
                                    fac._perm_values, t, kt)
            r = b - kt
            if float(np.max(np.abs(r))) <= target:
                break
            dt = r.copy()
            _kernels.ldl_solve(sym.dim, fac.L.colptr, fac.L.rowind,
                               fac.L.values, fac.Dinv, dt)
            t = t + dt
    out = np.empty_like(t)
    out[sym.perm] = t
    return out


def update_rho_values(kkt, rho_new, sym, pivot_tol=ZERO_PIVOT_TOL):
    """O(m) diagonal refresh followed by a numeric-only refactorization."""
    rho_new = np.asarray(rho_new, dtype=np.float64)
    kkt.refresh_values(rho=rho_new)
    return numeric_factor(kkt, sym, pivot_tol=pivot_tol)


def reduced_diagonal(P, A, sigma, rho):
    """Diagonal of P + sigma*I + A' diag(rho) A (Jacobi preconditioner)."""
    n = P.ncols
    diag = np.full(n, float(sigma))
    mask = P.rowind == P.col_indices()
    diag[P.col_indices()[mask]] += P.values[mask]
    if A.nrows:
        contrib = rho[A.rowind] * A.values ** 2
        np.add.at(diag, A.col_indices(), contrib)
    return diag


# converge past the requested residual tolerance by this factor: the
# backends must agree to solution accuracy, not just residual accuracy,
# and the reduced system inherits the step-size conditioning
CG_TARGET_MARGIN = 30.0


def cg_solve_reduced(P, A, sigma, rho, rhs_x, x_warm=None, tol=1e-8,
                     max_iter=1000):
    """Conjugate gradients on the reduced system, warm-startable.

    Returns (x, iterations, converged). Non-convergence is flagged rather
    than raised so the caller can fall back to the direct backend.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    n = P.ncols
    rho = np.asarray(rho, dtype=np.float64)
    rhs_x = np.asarray(rhs_x, dtype=np.float64)
    x = np.zeros(n) if x_warm is None else np.array(x_warm, dtype=np.float64)
    precond_inv = 1.0 / reduced_diagonal(P, A, sigma, rho)
    inner_tol = max(tol / CG_TARGET_MARGIN, 1e-16)
    iters, converged = _kernels.pcg_reduced(
        n, P.colptr, P.rowind, P.values, A.colptr, A.rowind, A.values,
        A.nrows, float(sigma), rho, rhs_x, x, precond_inv, inner_tol,
        int(max_iter))
    if not converged:
        # the flag reports the caller's tolerance, not the internal margin
        work_m = np.zeros(A.nrows)
        mx = np.zeros(n)
        _kernels.reduced_matvec(n, P.colptr, P.rowind, P.values, A.colptr,
                                A.rowind, A.values, A.nrows, float(sigma),
                                rho, x, work_m, mx)
        res = float(np.linalg.norm(rhs_x - mx))
        converged = res <= tol * float(np.linalg.norm(rhs_x))
    return x, int(iters), bool(converged)
