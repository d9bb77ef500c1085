"""Dense brute-force reference solver for desk-scale instances.

Enumerates candidate active sets (equalities always active, each free row
inactive or pinned at a finite bound), solves the dense KKT system of each
candidate and returns the feasible stationary point with the smallest
objective. Emptiness of the constraint box is certified by a dense LP
phase-1. Exponential in the constraint count; sizes are capped so this
stays a test oracle, never a solution path.
"""

import itertools

import numpy as np
from scipy.optimize import linprog

MAX_N = 12
MAX_M = 24
MAX_CANDIDATES = 2_000_000


class ReferenceSizeError(ValueError):
    pass


class ReferenceNoSolution(RuntimeError):
    """No feasible stationary candidate: degenerate or unbounded input."""


def _phase1_feasible(A, l, u):
    m, n = A.shape
    A_ub, b_ub = [], []
    A_eq, b_eq = [], []
    for i in range(m):
        if np.isfinite(l[i]) and np.isfinite(u[i]) and l[i] == u[i]:
            A_eq.append(A[i])
            b_eq.append(l[i])
            continue
        if np.isfinite(u[i]):
            A_ub.append(A[i])
            b_ub.append(u[i])
        if np.isfinite(l[i]):
            A_ub.append(-A[i])
            b_ub.append(-l[i])
    res = linprog(np.zeros(n),
                  A_ub=np.array(A_ub) if A_ub else None,
                  b_ub=np.array(b_ub) if b_ub else None,
                  A_eq=np.array(A_eq) if A_eq else None,
                  b_eq=np.array(b_eq) if b_eq else None,
                  bounds=[(None, None)] * n, method="highs")
    return res.status != 2


def dense_reference_solve(problem, tol=1e-6):
    """Return (x, y, z, status) with status 'solved' or 'primal_infeasible'."""
    n, m = problem.n, problem.m
    if n > MAX_N or m > MAX_M:
        raise ReferenceSizeError(
            f"reference solver is capped at n<={MAX_N}, m<={MAX_M}")
    P = problem.P.to_dense(symmetric_upper=True)
    A = problem.A.to_dense()
    q, l, u = problem.q, problem.l, problem.u

    if np.any(l > u) or not _phase1_feasible(A, l, u):
        return None, None, None, "primal_infeasible"

    eq = np.isfinite(l) & np.isfinite(u) & (u - l <= 1e-12 * np.maximum(
        1.0, np.maximum(np.abs(l), np.abs(u))))
    eq_rows = np.flatnonzero(eq)
    free_rows = [i for i in range(m)
                 if not eq[i] and (np.isfinite(l[i]) or np.isfinite(u[i]))]

    # rank, not count: degenerate equality rows must not eat into the
    # active-set budget
    eq_rank = np.linalg.matrix_rank(A[eq_rows]) if eq_rows.size else 0
    max_extra = max(0, n - eq_rank)
    n_cand = sum(_count_combinations(len(free_rows), k)
                 for k in range(min(max_extra, len(free_rows)) + 1))
    if n_cand > MAX_CANDIDATES:
        raise ReferenceSizeError("active-set enumeration too large")

    best = None
    feas_tol = tol * (1.0 + _finite_max(l, u))
    for k in range(min(max_extra, len(free_rows)) + 1):
        for subset in itertools.combinations(free_rows, k):
            for sides in itertools.product(*(_sides(l, u, i) for i in subset)):
                active = list(eq_rows) + list(subset)
                bounds = [l[i] for i in eq_rows] + [
                    l[i] if s == "l" else u[i] for i, s in zip(subset, sides)]
                for cand in _candidate_solutions(P, q, A, active,
                                                 np.array(bounds), tol):
                    x, y_active = cand
                    ax = A @ x if m else np.zeros(0)
                    if np.any(ax < l - feas_tol) or np.any(ax > u + feas_tol):
                        continue
                    ok = True
                    for j, (i, s) in enumerate(zip(subset, sides)):
                        yi = y_active[len(eq_rows) + j]
                        if s == "l" and yi > tol:
                            ok = False
                            break
                        if s == "u" and yi < -tol:
                            ok = False
                            break
                    if not ok:
                        continue
                    obj = 0.5 * x @ P @ x + q @ x
                    if best is None or obj < best[0] - 1e-12:
                        y = np.zeros(m)
                        y[active] = y_active
                        best = (obj, x, y)
                    break
    if best is None:
        raise ReferenceNoSolution(
            "no feasible stationary candidate (degenerate or unbounded)")
    _, x, y = best
    z = np.clip(A @ x, l, u) if m else np.zeros(0)
    return x, y, z, "solved"


def _sides(l, u, i):
    opts = []
    if np.isfinite(l[i]):
        opts.append("l")
    if np.isfinite(u[i]):
        opts.append("u")
    return opts


def _count_combinations(f, k):
    from math import comb
    return comb(f, k) * (2 ** k)


def _finite_max(l, u):
    vals = np.concatenate((l[np.isfinite(l)], u[np.isfinite(u)]))
    return float(np.max(np.abs(vals))) if vals.size else 0.0


def _candidate_solutions(P, q, A, active, bounds, tol):
    """Solutions of a candidate active-set KKT system, most reliable first.

    Singular-but-consistent systems have a whole affine set of solutions;
    the min-norm one may leave the box even when a feasible stationary
    point exists, so a ridge-regularized representative is offered too.
    """
    n = P.shape[0]
    k = len(active)
    K = np.zeros((n + k, n + k))
    K[:n, :n] = P
    if k:
        K[:n, n:] = A[active].T
        K[n:, :n] = A[active]
    g = np.concatenate((-q, bounds))
    try:
        t = np.linalg.solve(K, g)
        if not np.all(np.isfinite(t)):
            raise np.linalg.LinAlgError
        yield t[:n], t[n:]
        return
    except np.linalg.LinAlgError:
        pass
    t, *_ = np.linalg.lstsq(K, g, rcond=None)
    scale = 1.0 + float(np.max(np.abs(g))) + float(np.max(np.abs(t)))
    if np.max(np.abs(K @ t - g)) > tol * scale:
        return   # singular and inconsistent: not a stationary point
    yield t[:n], t[n:]
    for ridge in (1e-9, 1e-6):
        K_r = K.copy()
        K_r[:n, :n] += ridge * np.eye(n)
        if k:
            K_r[n:, n:] -= ridge * np.eye(k)
        try:
            t_r = np.linalg.solve(K_r, g)
        except np.linalg.LinAlgError:
            continue
        if np.max(np.abs(K @ t_r - g)) <= 10 * tol * scale:
            yield t_r[:n], t_r[n:]
