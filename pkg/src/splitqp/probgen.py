"""Seeded generators for the seven benchmark problem families.

Every generator is a pure function of (dimension, seed): randomness comes
from a counter-mode SplitMix64 stream per matrix with normal variates via
the inverse CDF, so identical inputs give bit-identical problems on any
platform. Size ratios (constraints per variable, samples per feature,
horizon) default to the benchmark recipes but can be overridden to build
miniature instances that the dense reference solver can certify.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .problem import ProblemData
from .sparse import csc_from_dense, csc_from_triplets

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MASK = np.uint64(0xFFFFFFFFFFFFFFFF)

CLASSES = ("random_qp", "eq_qp", "optimal_control", "portfolio",
           "lasso", "huber", "svm")


def _finalize(z):
    z = z.astype(np.uint64)
    z ^= z >> np.uint64(30)
    z *= np.uint64(0xBF58476D1CE4E5B9)
    z ^= z >> np.uint64(27)
    z *= np.uint64(0x94D049BB133111EB)
    z ^= z >> np.uint64(31)
    return z


class SplitMix64:
    """Counter-based SplitMix64 stream: seed and tag pick the stream,
    successive draws walk the golden-ratio counter."""

    def __init__(self, seed, tag):
        base = (int(seed) * 0x9E3779B97F4A7C15 + int(tag)) & 0xFFFFFFFFFFFFFFFF
        self._base = _finalize(_finalize(np.array([base], dtype=np.uint64)))[0]
        self._count = 0

    def raw(self, size):
        idx = np.arange(self._count + 1, self._count + size + 1,
                        dtype=np.uint64)
        self._count += size
        return _finalize(self._base + idx * _GOLDEN)

    def uniform(self, size, low=0.0, high=1.0):
        u = (self.raw(size) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
        return low + (high - low) * u

    def normal(self, size, mean=0.0, std=1.0):
        # open-interval uniforms keep the inverse CDF finite
        u = ((self.raw(size) >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0 ** -53
        return mean + std * ndtri(u)

    def mask(self, size, density):
        return self.uniform(size) < density


@dataclass(frozen=True)
class GenSpec:
    problem_class: str
    dim: int
    seed: int

    def generate(self):
        return generate(self)


def generate(spec):
    """Dispatch a GenSpec to its generator (benchmark-default ratios)."""
    if spec.problem_class not in CLASSES:
        raise ValueError(f"unknown problem class {spec.problem_class!r}")
    return _GENERATORS[spec.problem_class](spec.dim, spec.seed)


def _sparse_normal(rng, nrows, ncols, density, mean=0.0, std=1.0):
    """Dense array with Bernoulli(density) support and normal values."""
    mask = rng.mask(nrows * ncols, density)
    vals = rng.normal(int(mask.sum()), mean=mean, std=std)
    out = np.zeros(nrows * ncols)
    out[mask] = vals
    return out.reshape(nrows, ncols)


def _triplets_of(dense, row_offset=0, col_offset=0, scale=None):
    rows, cols = np.nonzero(dense)
    vals = dense[rows, cols]
    if scale is not None:
        vals = vals * scale[rows]
    return rows + row_offset, cols + col_offset, vals


def _eye_triplets(size, row_offset=0, col_offset=0, value=1.0):
    idx = np.arange(size, dtype=np.int64)
    return idx + row_offset, idx + col_offset, np.full(size, value)


def _stack_triplets(parts, nrows, ncols):
    rows = np.concatenate([p[0] for p in parts])
    cols = np.concatenate([p[1] for p in parts])
    vals = np.concatenate([p[2] for p in parts])
    return csc_from_triplets(rows, cols, vals, nrows, ncols)


def _psd_objective(rng, n, density=0.15, reg=1e-2):
    M = _sparse_normal(rng, n, n, density)
    return M @ M.T + reg * np.eye(n)


def _meta(problem_class, dim, seed, **extra):
    md = {"class": problem_class, "dim": int(dim), "seed": int(seed)}
    md.update(extra)
    return md


def gen_random_qp(n, seed, constraints_per_variable=10):
    """Box-constrained QP: strictly convex objective, m = 10n rows with
    l <= 0 <= u so the origin is always feasible."""
    if n < 1:
        raise ValueError("n must be at least 1")
    m = constraints_per_variable * n
    P = _psd_objective(SplitMix64(seed, 11), n)
    A = _sparse_normal(SplitMix64(seed, 12), m, n, 0.15)
    q = SplitMix64(seed, 13).normal(n)
    u = SplitMix64(seed, 14).uniform(m)
    l = -SplitMix64(seed, 15).uniform(m)
    return ProblemData(csc_from_dense(P, upper=True), q, csc_from_dense(A),
                       l, u, metadata=_meta("random_qp", n, seed))


def gen_eq_qp(n, seed):
    """Equality-constrained QP with m = floor(n/2) dense-random rows."""
    if n < 1:
        raise ValueError("n must be at least 1")
    m = n // 2
    P = _psd_objective(SplitMix64(seed, 21), n)
    A = _sparse_normal(SplitMix64(seed, 22), m, n, 0.15)
    q = SplitMix64(seed, 23).normal(n)
    b = SplitMix64(seed, 24).normal(m)
    return ProblemData(csc_from_dense(P, upper=True), q, csc_from_dense(A),
                       b, b, metadata=_meta("eq_qp", n, seed))


def _spectral_radius(M, rng, iters=120, block=4):
    """Block power-iteration estimate of the dominant eigenvalue magnitude.

    A single power vector stalls on complex-conjugate dominant pairs; a
    small orthonormalized block tracks them reliably.
    """
    n = M.shape[0]
    k = min(block, n)
    V = rng.normal(n * k).reshape(n, k)
    V, _ = np.linalg.qr(V)
    for _ in range(iters):
        W = M @ V
        norm = np.linalg.norm(W)
        if norm == 0.0:
            return 0.0
        V, _ = np.linalg.qr(W)
    H = V.T @ (M @ V)
    return float(np.max(np.abs(np.linalg.eigvals(H))))


def riccati_terminal_cost(A, B, Q, R, tol=1e-12, max_iter=100_000):
    """Fixed point of the Riccati difference equation (terminal LQR cost)."""
    X = Q.copy()
    for _ in range(max_iter):
        BtX = B.T @ X
        gain = np.linalg.solve(R + BtX @ B, BtX @ A)
        X_next = A.T @ X @ A - (BtX @ A).T @ gain + Q
        X_next = 0.5 * (X_next + X_next.T)
        if np.max(np.abs(X_next - X)) <= tol * max(1.0, np.max(np.abs(X))):
            return X_next
        X = X_next
    return X


def gen_optimal_control(nx, seed, horizon=10):
    """Finite-horizon control QP over stacked states and inputs.

    Dynamics are random perturbations of the identity rescaled to spectral
    radius below one; the terminal state cost is the LQR fixed point.
    """
    if nx < 1:
        raise ValueError("nx must be at least 1")
    T = horizon
    nu = max(1, nx // 2)
    rng_dyn = SplitMix64(seed, 31)
    Ad = np.eye(nx) + rng_dyn.normal(nx * nx, std=0.1).reshape(nx, nx)
    rng_pow = SplitMix64(seed, 32)
    for _ in range(5):
        radius = _spectral_radius(Ad, rng_pow)
        if radius < 0.999:
            break
        Ad *= 0.99 / radius
    Bd = SplitMix64(seed, 33).normal(nx * nu).reshape(nx, nu)

    rng_q = SplitMix64(seed, 34)
    q_diag = rng_q.uniform(nx, 0.0, 10.0) * rng_q.mask(nx, 0.70)
    Q = np.diag(q_diag)
    R = 0.1 * np.eye(nu)
    QT = riccati_terminal_cost(Ad, Bd, Q, R)

    x_max = SplitMix64(seed, 35).uniform(nx, 1.0, 2.0)
    u_max = SplitMix64(seed, 36).uniform(nu, 0.0, 0.1)
    x_init = SplitMix64(seed, 37).uniform(nx, -0.5, 0.5) * x_max

    n_var = nx * (T + 1) + nu * T
    P = np.zeros((n_var, n_var))
    for t in range(T):
        P[t * nx:(t + 1) * nx, t * nx:(t + 1) * nx] = 2.0 * Q
    P[T * nx:(T + 1) * nx, T * nx:(T + 1) * nx] = 2.0 * QT
    off = nx * (T + 1)
    for t in range(T):
        P[off + t * nu:off + (t + 1) * nu,
          off + t * nu:off + (t + 1) * nu] = 2.0 * R
    q = np.zeros(n_var)

    # rows: dynamics, initial state, state boxes, input boxes
    m = nx * T + nx + nx * (T + 1) + nu * T
    A = np.zeros((m, n_var))
    l = np.empty(m)
    u = np.empty(m)
    row = 0
    for t in range(T):
        A[row:row + nx, (t + 1) * nx:(t + 2) * nx] = np.eye(nx)
        A[row:row + nx, t * nx:(t + 1) * nx] = -Ad
        A[row:row + nx, off + t * nu:off + (t + 1) * nu] = -Bd
        l[row:row + nx] = 0.0
        u[row:row + nx] = 0.0
        row += nx
    A[row:row + nx, :nx] = np.eye(nx)
    l[row:row + nx] = x_init
    u[row:row + nx] = x_init
    row += nx
    for t in range(T + 1):
        A[row:row + nx, t * nx:(t + 1) * nx] = np.eye(nx)
        l[row:row + nx] = -x_max
        u[row:row + nx] = x_max
        row += nx
    for t in range(T):
        A[row:row + nu, off + t * nu:off + (t + 1) * nu] = np.eye(nu)
        l[row:row + nu] = -u_max
        u[row:row + nu] = u_max
        row += nu

    return ProblemData(csc_from_dense(P, upper=True), q, csc_from_dense(A),
                       l, u,
                       metadata=_meta("optimal_control", nx, seed, horizon=T))


def gen_portfolio(k, seed, assets_per_factor=100):
    """Factor-model portfolio QP in (holdings, factor exposures)."""
    if k < 1:
        raise ValueError("k must be at least 1")
    n = assets_per_factor * k
    F = _sparse_normal(SplitMix64(seed, 41), n, k, 0.50)
    d_diag = SplitMix64(seed, 42).uniform(n, 0.0, np.sqrt(k))
    mu = SplitMix64(seed, 43).normal(n)
    gamma = 1.0

    n_var = n + k
    rows_p = np.arange(n_var, dtype=np.int64)
    vals_p = np.concatenate((2.0 * d_diag, 2.0 * np.ones(k)))
    P = csc_from_triplets(rows_p, rows_p, vals_p, n_var, n_var)
    q = np.concatenate((-mu / gamma, np.zeros(k)))

    m = k + 1 + n
    A = _stack_triplets([
        _triplets_of(F.T),                                   # factor rows
        _eye_triplets(k, col_offset=n, value=-1.0),
        (np.full(n, k, dtype=np.int64), np.arange(n, dtype=np.int64),
         np.ones(n)),                                        # budget row
        _eye_triplets(n, row_offset=k + 1),                  # x >= 0
    ], m, n_var)
    l = np.concatenate((np.zeros(k), [1.0], np.zeros(n)))
    u = np.concatenate((np.zeros(k), [1.0], np.full(n, np.inf)))
    return ProblemData(P, q, A, l, u,
                       metadata=_meta("portfolio", k, seed,
                                      assets_per_factor=assets_per_factor))


def portfolio_update_values(problem, seed):
    """Risk-model refresh on the fixed sparsity pattern: new values for
    the P diagonal (asset risk) and the factor block of A."""
    md = problem.metadata
    k = md["dim"]
    n = md["assets_per_factor"] * k
    rng_d = SplitMix64(seed, 44)
    rng_f = SplitMix64(seed, 45)
    P_values = problem.P.values.copy()
    P_values[:n] = 0.9 * P_values[:n] + 2.0 * rng_d.uniform(
        n, 0.0, 0.1 * np.sqrt(k))
    A_values = problem.A.values.copy()
    rows = problem.A.rowind
    cols = problem.A.col_indices()
    f_block = (rows < k) & (cols < n)   # factor loadings, not the -I block
    A_values[f_block] = (0.9 * A_values[f_block]
                         + rng_f.normal(int(f_block.sum()), std=0.1))
    return P_values, A_values


def gen_lasso(n, seed, samples_per_feature=100):
    """L1-regularized regression as a QP in (weights, residuals, abs bounds)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    m = samples_per_feature * n
    A_data = _sparse_normal(SplitMix64(seed, 51), m, n, 0.15)
    rng_v = SplitMix64(seed, 52)
    v = rng_v.normal(n, std=1.0 / np.sqrt(n)) * rng_v.mask(n, 0.5)
    noise = SplitMix64(seed, 53).normal(m)
    b = A_data @ v + noise
    lam = 0.2 * float(np.max(np.abs(A_data.T @ b)))

    n_var = 2 * n + m
    P = csc_from_triplets(np.arange(n, n + m, dtype=np.int64),
                          np.arange(n, n + m, dtype=np.int64),
                          2.0 * np.ones(m), n_var, n_var)
    q = np.concatenate((np.zeros(n + m), lam * np.ones(n)))

    m_con = m + 2 * n
    A = _stack_triplets([
        _triplets_of(A_data),                                # residual rows
        _eye_triplets(m, col_offset=n, value=-1.0),
        _eye_triplets(n, row_offset=m),                      # x - t <= 0
        _eye_triplets(n, row_offset=m, col_offset=n + m, value=-1.0),
        _eye_triplets(n, row_offset=m + n),                  # x + t >= 0
        _eye_triplets(n, row_offset=m + n, col_offset=n + m),
    ], m_con, n_var)
    l = np.concatenate((b, np.full(n, -np.inf), np.zeros(n)))
    u = np.concatenate((b, np.zeros(n), np.full(n, np.inf)))
    return ProblemData(P, q, A, l, u,
                       metadata=_meta("lasso", n, seed, lam=lam,
                                      samples_per_feature=samples_per_feature))


def lasso_cost_vector(problem, lam):
    """The linear cost of a lasso instance for a new regularization weight."""
    md = problem.metadata
    n = md["dim"]
    m = md["samples_per_feature"] * n
    return np.concatenate((np.zeros(n + m), lam * np.ones(n)))


def gen_huber(n, seed, samples_per_feature=100, huber_m=1.0):
    """Robust regression QP in (weights, quadratic part, positive/negative
    linear parts)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    m = samples_per_feature * n
    A_data = _sparse_normal(SplitMix64(seed, 61), m, n, 0.15)
    v = SplitMix64(seed, 62).normal(n, std=1.0 / np.sqrt(n))
    rng_noise = SplitMix64(seed, 63)
    noise = rng_noise.normal(m, std=0.5)
    outlier = rng_noise.mask(m, 0.05)
    noise[outlier] = rng_noise.uniform(int(outlier.sum()), 0.0, 10.0)
    b = A_data @ v + noise

    n_var = n + 3 * m
    P = csc_from_triplets(np.arange(n, n + m, dtype=np.int64),
                          np.arange(n, n + m, dtype=np.int64),
                          2.0 * np.ones(m), n_var, n_var)
    q = np.concatenate((np.zeros(n + m),
                        2.0 * huber_m * np.ones(2 * m)))

    m_con = 3 * m
    A = _stack_triplets([
        _triplets_of(A_data),                                # fit rows
        _eye_triplets(m, col_offset=n, value=-1.0),
        _eye_triplets(m, col_offset=n + m, value=-1.0),
        _eye_triplets(m, col_offset=n + 2 * m),
        _eye_triplets(m, row_offset=m, col_offset=n + m),    # r >= 0
        _eye_triplets(m, row_offset=2 * m, col_offset=n + 2 * m),  # s >= 0
    ], m_con, n_var)
    l = np.concatenate((b, np.zeros(2 * m)))
    u = np.concatenate((b, np.full(2 * m, np.inf)))
    return ProblemData(P, q, A, l, u,
                       metadata=_meta("huber", n, seed,
                                      samples_per_feature=samples_per_feature))


def gen_svm(n, seed, samples_per_feature=100, lam=1.0):
    """Hinge-loss classifier QP in (weights, slacks); first half of the
    samples is labelled +1, the rest -1, with shifted feature means."""
    if n < 1:
        raise ValueError("n must be at least 1")
    m = samples_per_feature * n
    if m % 2:
        raise ValueError("sample count must be even (half per label)")
    half = m // 2
    std = np.sqrt(1.0 / n)
    A_pos = _sparse_normal(SplitMix64(seed, 71), half, n,
                           0.15, mean=1.0 / n, std=std)
    A_neg = _sparse_normal(SplitMix64(seed, 72), m - half, n,
                           0.15, mean=-1.0 / n, std=std)
    A_data = np.vstack((A_pos, A_neg))
    labels = np.concatenate((np.ones(half), -np.ones(m - half)))

    n_var = n + m
    P = csc_from_triplets(np.arange(n, dtype=np.int64),
                          np.arange(n, dtype=np.int64),
                          2.0 * np.ones(n), n_var, n_var)
    q = np.concatenate((np.zeros(n), lam * np.ones(m)))

    m_con = 2 * m
    A = _stack_triplets([
        _triplets_of(A_data, scale=labels),                  # margin rows
        _eye_triplets(m, col_offset=n, value=-1.0),
        _eye_triplets(m, row_offset=m, col_offset=n),        # t >= 0
    ], m_con, n_var)
    l = np.concatenate((np.full(m, -np.inf), np.zeros(m)))
    u = np.concatenate((np.full(m, -1.0), np.full(m, np.inf)))
    return ProblemData(P, q, A, l, u,
                       metadata=_meta("svm", n, seed,
                                      samples_per_feature=samples_per_feature))


_GENERATORS = {
    "random_qp": gen_random_qp,
    "eq_qp": gen_eq_qp,
    "optimal_control": gen_optimal_control,
    "portfolio": gen_portfolio,
    "lasso": gen_lasso,
    "huber": gen_huber,
    "svm": gen_svm,
}
