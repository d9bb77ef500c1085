"""Compressed-sparse-column matrices and the vector kernels built on them.

Matrices are immutable after construction; every operation here is a pure
function. Dense vectors are plain 1-D float64 numpy arrays throughout the
package. Bound vectors may contain +/-inf; any finite magnitude >= INFTY
is normalized to inf at the boundaries (problem construction, file I/O)
so that internal code never does arithmetic with huge sentinels.
"""

import numpy as np

from . import _kernels

# magnitude from which a bound value counts as infinite
INFTY = 1e30


class SparseError(ValueError):
    pass


class CscMatrix:
    """Sparse matrix in compressed-sparse-column form.

    colptr has length ncols+1 with colptr[0] == 0 and colptr[ncols] == nnz;
    row indices are strictly increasing within each column. Symmetric
    matrices (P, KKT) store their upper triangle only and are flagged by
    the caller at use sites, not in the type.
    """

    __slots__ = ("nrows", "ncols", "colptr", "rowind", "values")

    def __init__(self, nrows, ncols, colptr, rowind, values, validate=True):
        self.nrows = int(nrows)
        self.ncols = int(ncols)
        self.colptr = np.ascontiguousarray(colptr, dtype=np.int64)
        self.rowind = np.ascontiguousarray(rowind, dtype=np.int64)
        self.values = np.ascontiguousarray(values, dtype=np.float64)
        if validate:
            self._check()

    def _check(self):
        if self.nrows < 0 or self.ncols < 0:
            raise SparseError("negative dimension")
        if self.colptr.shape[0] != self.ncols + 1:
            raise SparseError("colptr has wrong length")
        if self.colptr[0] != 0 or self.colptr[-1] != self.rowind.shape[0]:
            raise SparseError("colptr endpoints inconsistent with nnz")
        if np.any(np.diff(self.colptr) < 0):
            raise SparseError("colptr not nondecreasing")
        if self.rowind.shape[0] != self.values.shape[0]:
            raise SparseError("rowind/values length mismatch")
        if self.rowind.shape[0]:
            if self.rowind.min() < 0 or self.rowind.max() >= self.nrows:
                raise SparseError("row index out of range")
        for j in range(self.ncols):
            lo, hi = self.colptr[j], self.colptr[j + 1]
            if hi - lo > 1 and np.any(np.diff(self.rowind[lo:hi]) <= 0):
                raise SparseError(f"rows not strictly increasing in column {j}")

    @property
    def nnz(self):
        return self.rowind.shape[0]

    def col_indices(self):
        """Column index of every stored entry (same order as values)."""
        return np.repeat(np.arange(self.ncols, dtype=np.int64),
                         np.diff(self.colptr))

    def is_upper_triangular(self):
        return bool(np.all(self.rowind <= self.col_indices()))

    def to_dense(self, symmetric_upper=False):
        out = np.zeros((self.nrows, self.ncols))
        cols = self.col_indices()
        out[self.rowind, cols] = self.values
        if symmetric_upper:
            strict = self.rowind != cols
            out[cols[strict], self.rowind[strict]] = self.values[strict]
        return out

    def copy(self):
        return CscMatrix(self.nrows, self.ncols, self.colptr.copy(),
                         self.rowind.copy(), self.values.copy(),
                         validate=False)

    def triplets(self):
        return self.rowind.copy(), self.col_indices(), self.values.copy()

    def __repr__(self):
        return f"CscMatrix({self.nrows}x{self.ncols}, nnz={self.nnz})"


def csc_from_triplets(rows, cols, vals, nrows, ncols, sum_duplicates=True):
    """Build a canonical CSC matrix from (row, col, value) triplets.

    Duplicated coordinates are summed when sum_duplicates is set and
    rejected otherwise. Entries are sorted by column then row.
    """
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    vals = np.asarray(vals, dtype=np.float64)
    if not (rows.shape == cols.shape == vals.shape):
        raise SparseError("triplet arrays must have equal length")
    if rows.size:
        if rows.min() < 0 or rows.max() >= nrows:
            raise SparseError("row index out of range")
        if cols.min() < 0 or cols.max() >= ncols:
            raise SparseError("column index out of range")
    order = np.lexsort((rows, cols))
    rows, cols, vals = rows[order], cols[order], vals[order]
    if rows.size:
        dup = (np.diff(rows) == 0) & (np.diff(cols) == 0)
        if np.any(dup):
            if not sum_duplicates:
                k = int(np.flatnonzero(dup)[0])
                raise SparseError(
                    f"duplicate entry at ({rows[k]}, {cols[k]})")
            # collapse runs of equal coordinates
            key = cols * nrows + rows
            uniq, start = np.unique(key, return_index=True)
            vals = np.add.reduceat(vals, start)
            rows = uniq % nrows
            cols = uniq // nrows
    colptr = np.zeros(ncols + 1, dtype=np.int64)
    np.add.at(colptr, cols + 1, 1)
    np.cumsum(colptr, out=colptr)
    return CscMatrix(nrows, ncols, colptr, rows, vals, validate=False)


def csc_zeros(nrows, ncols):
    return CscMatrix(nrows, ncols, np.zeros(ncols + 1, dtype=np.int64),
                     np.zeros(0, dtype=np.int64), np.zeros(0), validate=False)


def csc_identity(n, scale=1.0):
    idx = np.arange(n, dtype=np.int64)
    return CscMatrix(n, n, np.arange(n + 1, dtype=np.int64), idx,
                     np.full(n, float(scale)), validate=False)


def csc_from_dense(M, upper=False, tol=0.0):
    M = np.asarray(M, dtype=np.float64)
    rows, cols = np.nonzero(np.abs(M) > tol)
    if upper:
        keep = rows <= cols
        rows, cols = rows[keep], cols[keep]
    return csc_from_triplets(rows, cols, M[rows, cols], M.shape[0], M.shape[1])


def spmv(M, x, transpose=False, symmetric_upper=False):
    """M @ x, M.T @ x, or the full symmetric product from upper storage."""
    x = np.asarray(x, dtype=np.float64)
    if symmetric_upper:
        if M.nrows != M.ncols:
            raise SparseError("symmetric_upper requires a square matrix")
        if x.shape[0] != M.ncols:
            raise SparseError("dimension mismatch")
        out = np.zeros(M.nrows)
        _kernels.csc_sym_matvec(M.colptr, M.rowind, M.values, x, out)
        return out
    if transpose:
        if x.shape[0] != M.nrows:
            raise SparseError("dimension mismatch")
        out = np.zeros(M.ncols)
        _kernels.csc_matvec_transpose(M.colptr, M.rowind, M.values, x, out)
        return out
    if x.shape[0] != M.ncols:
        raise SparseError("dimension mismatch")
    out = np.zeros(M.nrows)
    _kernels.csc_matvec(M.nrows, M.colptr, M.rowind, M.values, x, out)
    return out


def inf_norm_columns(M, symmetric_upper=False):
    """Per-column infinity norm; zero columns yield 0 (caller guards)."""
    if symmetric_upper:
        out = np.zeros(M.ncols)
        _kernels.csc_sym_col_norms_inf(M.colptr, M.rowind, M.values, out)
        return out
    out = np.zeros(M.ncols)
    _kernels.csc_col_norms_inf(M.colptr, M.values, out)
    return out


def inf_norm_rows(M):
    out = np.zeros(M.nrows)
    _kernels.csc_row_norms_inf(M.colptr, M.rowind, M.values, out)
    return out


def scale_csc(M, row_scale, col_scale):
    """Return diag(row_scale) @ M @ diag(col_scale) as a new matrix."""
    vals = M.values * row_scale[M.rowind] * col_scale[M.col_indices()]
    return CscMatrix(M.nrows, M.ncols, M.colptr.copy(), M.rowind.copy(),
                     vals, validate=False)
