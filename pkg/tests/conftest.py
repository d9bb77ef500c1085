"""Shared oracles and seeded corpora.

The dense helpers here are deliberately independent of the package's
sparse kernels: triplets are scattered into numpy arrays and factored or
solved with plain dense loops, so they can serve as oracles for the CSC
code paths.
"""

import numpy as np
import pytest

import splitqp as sq
from splitqp.probgen import SplitMix64


def dense_from_triplets(rows, cols, vals, nrows, ncols):
    out = np.zeros((nrows, ncols))
    for r, c, v in zip(rows, cols, vals):
        out[r, c] += v
    return out


def dense_sym_from_upper(M):
    """Dense symmetric matrix from an upper-triangular CscMatrix."""
    rows, cols, vals = M.triplets()
    out = np.zeros((M.nrows, M.ncols))
    for r, c, v in zip(rows, cols, vals):
        out[r, c] += v
        if r != c:
            out[c, r] += v
    return out


def dense_ldl(K):
    """Unpivoted dense LDL^T elimination; returns (L, D)."""
    K = np.array(K, dtype=float)
    n = K.shape[0]
    L = np.eye(n)
    D = np.zeros(n)
    for k in range(n):
        D[k] = K[k, k] - sum(L[k, j] ** 2 * D[j] for j in range(k))
        for i in range(k + 1, n):
            L[i, k] = (K[i, k] - sum(L[i, j] * L[k, j] * D[j]
                                     for j in range(k))) / D[k]
    return L, D


def dense_symbolic_counts(pattern):
    """Column counts of the Cholesky factor of a dense 0/1 pattern,
    by structural elimination (no cancellation)."""
    S = np.array(pattern, dtype=bool)
    S = S | S.T
    n = S.shape[0]
    counts = np.zeros(n, dtype=int)
    for k in range(n):
        below = np.flatnonzero(S[k + 1:, k]) + k + 1
        counts[k] = below.size
        for i in below:
            S[i, below] = True
            S[below, i] = True
    return counts


def random_sparse_dense(rng, nrows, ncols, density=0.4, scale=1.0):
    mask = rng.uniform(nrows * ncols) < density
    vals = rng.normal(nrows * ncols) * scale
    out = np.where(mask, vals, 0.0).reshape(nrows, ncols)
    return out


def random_box_qp(seed, n_max=8, m_max=12, strictly_convex=True,
                  allow_infinite=True):
    """Small random solvable QP with mixed finite/infinite bounds."""
    rng = SplitMix64(seed, 900)
    n = 1 + int(rng.uniform(1)[0] * n_max) % n_max
    m = int(rng.uniform(1)[0] * (m_max + 1)) % (m_max + 1)
    M = rng.normal(n * n).reshape(n, n)
    P = M @ M.T
    if strictly_convex:
        P += 0.1 * np.eye(n)
    q = rng.normal(n)
    A = random_sparse_dense(rng, m, n, density=0.7)
    x_feas = rng.normal(n) * 0.5
    ax = A @ x_feas if m else np.zeros(0)
    lo = ax - rng.uniform(m, 0.1, 2.0)
    hi = ax + rng.uniform(m, 0.1, 2.0)
    if allow_infinite and m:
        drop_lo = rng.uniform(m) < 0.25
        drop_hi = rng.uniform(m) < 0.25
        lo[drop_lo] = -np.inf
        hi[drop_hi] = np.inf
        eq = rng.uniform(m) < 0.15
        both = eq & np.isfinite(lo) & np.isfinite(hi)
        lo[both] = ax[both]
        hi[both] = ax[both]
    return sq.problem_from_dense(P, q, A, lo, hi)


def random_kkt_instance(seed):
    """Seeded quasi-definite KKT data: P PSD upper, arbitrary A, rho
    log-uniform in [1e-6, 1e6]."""
    rng = SplitMix64(seed, 901)
    n = 1 + int(rng.uniform(1)[0] * 12) % 12
    m = int(rng.uniform(1)[0] * 13) % 13
    M = random_sparse_dense(rng, n, n, density=0.5)
    P = M @ M.T
    A = random_sparse_dense(rng, m, n, density=0.5)
    rho = 10.0 ** rng.uniform(m, -6.0, 6.0)
    P_csc = sq.csc_from_dense(P, upper=True)
    A_csc = sq.csc_from_dense(A)
    return P_csc, A_csc, 1e-6, rho


@pytest.fixture(scope="session")
def kkt_corpus():
    return [random_kkt_instance(seed) for seed in range(500)]


def mini_generators():
    """Per-class miniature generators within the reference solver caps."""
    return {
        "random_qp": lambda s: sq.gen_random_qp(2, s),
        "eq_qp": lambda s: sq.gen_eq_qp(10, s),
        "optimal_control": lambda s: sq.gen_optimal_control(1, s, horizon=2),
        "portfolio": lambda s: sq.gen_portfolio(1, s, assets_per_factor=5),
        "lasso": lambda s: sq.gen_lasso(2, s, samples_per_feature=3),
        "huber": lambda s: sq.gen_huber(1, s, samples_per_feature=2),
        "svm": lambda s: sq.gen_svm(2, s, samples_per_feature=2),
    }


def bench_corpus_specs():
    """Desk-scale corpus across all classes (benchmark-default ratios)."""
    dims = {
        "random_qp": [4, 8], "eq_qp": [10, 20], "optimal_control": [2, 3],
        "portfolio": [2, 3], "lasso": [3, 5], "huber": [2, 4], "svm": [2, 4],
    }
    specs = []
    for cls, ds in dims.items():
        for d in ds:
            for seed in range(5):
                specs.append(sq.GenSpec(cls, d, seed))
    return specs
