"""Numba-compiled CSC kernels: matrix-vector products, column norms,
elimination tree, LDL^T factorization and triangular solves.

All kernels operate on raw (colptr, rowind, values) arrays so they stay
nopython-compatible; the object wrappers live in sparse.py / linsys.py.
"""

import numpy as np
from numba import njit

# status codes returned by the factorization kernels
FACTOR_OK = 0
FACTOR_ZERO_PIVOT = -1
FACTOR_BAD_PATTERN = -2


@njit(cache=True)
def csc_matvec(nrows, colptr, rowind, values, x, out):
    out[:] = 0.0
    for j in range(colptr.shape[0] - 1):
        xj = x[j]
        if xj != 0.0:
            for p in range(colptr[j], colptr[j + 1]):
                out[rowind[p]] += values[p] * xj


@njit(cache=True)
def csc_matvec_transpose(colptr, rowind, values, x, out):
    for j in range(colptr.shape[0] - 1):
        acc = 0.0
        for p in range(colptr[j], colptr[j + 1]):
            acc += values[p] * x[rowind[p]]
        out[j] = acc


@njit(cache=True)
def csc_sym_matvec(colptr, rowind, values, x, out):
    # upper-triangular storage of a symmetric matrix; diagonal counted once
    out[:] = 0.0
    for j in range(colptr.shape[0] - 1):
        xj = x[j]
        for p in range(colptr[j], colptr[j + 1]):
            i = rowind[p]
            v = values[p]
            out[i] += v * xj
            if i != j:
                out[j] += v * x[i]


@njit(cache=True)
def csc_col_norms_inf(colptr, values, out):
    for j in range(colptr.shape[0] - 1):
        best = 0.0
        for p in range(colptr[j], colptr[j + 1]):
            a = abs(values[p])
            if a > best:
                best = a
        out[j] = best


@njit(cache=True)
def csc_row_norms_inf(colptr, rowind, values, out):
    out[:] = 0.0
    for p in range(rowind.shape[0]):
        a = abs(values[p])
        i = rowind[p]
        if a > out[i]:
            out[i] = a


@njit(cache=True)
def csc_sym_col_norms_inf(colptr, rowind, values, out):
    # norm of the full implied column from upper-triangular storage
    out[:] = 0.0
    for j in range(colptr.shape[0] - 1):
        for p in range(colptr[j], colptr[j + 1]):
            i = rowind[p]
            a = abs(values[p])
            if a > out[j]:
                out[j] = a
            if a > out[i]:
                out[i] = a


@njit(cache=True)
def etree_and_counts(n, colptr, rowind, parent, lnz, work):
    """Elimination tree and per-column L counts of an upper CSC pattern.

    Requires a structurally present diagonal in every column. Returns the
    total L fill (excluding the unit diagonal) or FACTOR_BAD_PATTERN.
    """
    for i in range(n):
        parent[i] = -1
        lnz[i] = 0
        work[i] = -1
        if colptr[i] == colptr[i + 1]:
            return FACTOR_BAD_PATTERN
    for j in range(n):
        work[j] = j
        for p in range(colptr[j], colptr[j + 1]):
            i = rowind[p]
            if i > j:
                return FACTOR_BAD_PATTERN
            while work[i] != j:
                if parent[i] == -1:
                    parent[i] = j
                lnz[i] += 1
                work[i] = j
                i = parent[i]
    total = 0
    for i in range(n):
        total += lnz[i]
    return total


@njit(cache=True)
def ldl_factor(n, colptr, rowind, values, parent, lnz,
               Lp, Li, Lx, D, Dinv, pivot_tol,
               y_vals, y_markers, y_idx, elim_buffer, next_in_col):
    """Up-looking LDL^T of an upper CSC matrix with precomputed etree.

    No pivoting: relies on quasi-definiteness for existence. Any |D[k]|
    below pivot_tol aborts with FACTOR_ZERO_PIVOT. Returns the number of
    positive entries of D on success.
    """
    Lp[0] = 0
    for i in range(n):
        Lp[i + 1] = Lp[i] + lnz[i]
        next_in_col[i] = Lp[i]
        y_markers[i] = 0
        y_vals[i] = 0.0
        D[i] = 0.0

    positives = 0
    for k in range(n):
        nnz_y = 0
        for p in range(colptr[k], colptr[k + 1]):
            b_idx = rowind[p]
            if b_idx == k:
                D[k] = values[p]
                continue
            y_vals[b_idx] = values[p]
            # record the unvisited part of the path to the root
            next_idx = b_idx
            if y_markers[next_idx] == 0:
                y_markers[next_idx] = 1
                elim_buffer[0] = b_idx
                nnz_e = 1
                next_idx = parent[b_idx]
                while next_idx != -1 and next_idx < k:
                    if y_markers[next_idx] == 1:
                        break
                    y_markers[next_idx] = 1
                    elim_buffer[nnz_e] = next_idx
                    nnz_e += 1
                    next_idx = parent[next_idx]
                while nnz_e > 0:
                    nnz_e -= 1
                    y_idx[nnz_y] = elim_buffer[nnz_e]
                    nnz_y += 1
        # sparse triangular solve along the recorded pattern
        for q in range(nnz_y - 1, -1, -1):
            c_idx = y_idx[q]
            stop = next_in_col[c_idx]
            y_c = y_vals[c_idx]
            for j in range(Lp[c_idx], stop):
                y_vals[Li[j]] -= Lx[j] * y_c
            Li[stop] = k
            Lx[stop] = y_c * Dinv[c_idx]
            D[k] -= y_c * Lx[stop]
            next_in_col[c_idx] += 1
            y_vals[c_idx] = 0.0
            y_markers[c_idx] = 0
        if abs(D[k]) < pivot_tol:
            return FACTOR_ZERO_PIVOT
        if D[k] > 0.0:
            positives += 1
        Dinv[k] = 1.0 / D[k]
    return positives


@njit(cache=True)
def ldl_solve(n, Lp, Li, Lx, Dinv, x):
    # forward substitution with unit lower triangular L
    for j in range(n):
        xj = x[j]
        if xj != 0.0:
            for p in range(Lp[j], Lp[j + 1]):
                x[Li[p]] -= Lx[p] * xj
    # diagonal scaling via the stored inverse (division-free)
    for j in range(n):
        x[j] *= Dinv[j]
    # backward substitution with L^T
    for j in range(n - 1, -1, -1):
        acc = x[j]
        for p in range(Lp[j], Lp[j + 1]):
            acc -= Lx[p] * x[Li[p]]
        x[j] = acc


@njit(cache=True)
def reduced_matvec(n, Pp, Pi, Px, Ap, Ai, Ax, m, sigma, rho, x, work_m, out):
    """(P + sigma*I + A^T diag(rho) A) @ x with P in symmetric-upper storage."""
    csc_sym_matvec(Pp, Pi, Px, x, out)
    for i in range(n):
        out[i] += sigma * x[i]
    if m > 0:
        csc_matvec(m, Ap, Ai, Ax, x, work_m)
        for i in range(m):
            work_m[i] *= rho[i]
        for j in range(n):
            acc = 0.0
            for p in range(Ap[j], Ap[j + 1]):
                acc += Ax[p] * work_m[Ai[p]]
            out[j] += acc


@njit(cache=True)
def pcg_reduced(n, Pp, Pi, Px, Ap, Ai, Ax, m, sigma, rho, rhs, x,
                precond_inv, tol, max_iter):
    """Jacobi-preconditioned CG on the reduced positive definite system.

    Starts from the x passed in (warm start). Termination requires the
    relative residual bound in both the plain and the preconditioned norm;
    the latter keeps the error bounded when the step-size scales spread
    the spectrum. Returns (iterations, converged).
    """
    work_m = np.zeros(m)
    r = np.zeros(n)
    z = np.zeros(n)
    p = np.zeros(n)
    ap = np.zeros(n)

    rhs_norm = 0.0
    rhs_pnorm = 0.0
    for i in range(n):
        rhs_norm += rhs[i] * rhs[i]
        rhs_pnorm += rhs[i] * rhs[i] * precond_inv[i]
    rhs_norm = np.sqrt(rhs_norm)
    rhs_pnorm = np.sqrt(rhs_pnorm)
    if rhs_norm == 0.0:
        x[:] = 0.0
        return 0, True
    target = tol * rhs_norm
    target_p = tol * rhs_pnorm

    reduced_matvec(n, Pp, Pi, Px, Ap, Ai, Ax, m, sigma, rho, x, work_m, ap)
    for i in range(n):
        r[i] = rhs[i] - ap[i]
    rz = 0.0
    res = 0.0
    for i in range(n):
        z[i] = r[i] * precond_inv[i]
        rz += r[i] * z[i]
        res += r[i] * r[i]
    if np.sqrt(res) <= target and np.sqrt(rz) <= target_p:
        return 0, True
    for i in range(n):
        p[i] = z[i]

    for it in range(1, max_iter + 1):
        reduced_matvec(n, Pp, Pi, Px, Ap, Ai, Ax, m, sigma, rho, p, work_m, ap)
        pap = 0.0
        for i in range(n):
            pap += p[i] * ap[i]
        if pap <= 0.0:
            return it, False
        alpha = rz / pap
        for i in range(n):
            x[i] += alpha * p[i]
            r[i] -= alpha * ap[i]
        rz_new = 0.0
        res = 0.0
        for i in range(n):
            z[i] = r[i] * precond_inv[i]
            rz_new += r[i] * z[i]
            res += r[i] * r[i]
        if np.sqrt(res) <= target and np.sqrt(rz_new) <= target_p:
            return it, True
        beta = rz_new / rz
        rz = rz_new
        for i in range(n):
            p[i] = z[i] + beta * p[i]
    return max_iter, False
