"""ADMM engine: iteration loop, termination and infeasibility detection,
adaptive step-size, warm starting and parametric data updates with
factorization caching.

The iteration alternates a quasi-definite KKT solve with a box projection:

    solve [[P+sigma*I, A'], [A, -diag(rho)^-1]] [xt; nu] = [sigma*x - q; z - y/rho]
    zt  = z + (nu - y)/rho
    x+  = alpha*xt + (1-alpha)*x
    z+  = proj_box(alpha*zt + (1-alpha)*z + y/rho)
    y+  = y + rho*(alpha*zt + (1-alpha)*z - z+)

y is rho times the distance of the projection argument to the box, so the
complementarity conditions hold at every iterate by construction.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from . import linsys, polish as polish_mod
from .scaling import (identity_scaling, ruiz_equilibrate, scale_iterates,
                      unscale_solution, unscaled_residuals)
from .settings import Settings
from .sparse import CscMatrix, scale_csc, spmv
from .problem import ProblemData

SOLVED = "solved"
SOLVED_INACCURATE = "solved_inaccurate"
PRIMAL_INFEASIBLE = "primal_infeasible"
DUAL_INFEASIBLE = "dual_infeasible"
MAX_ITER_REACHED = "max_iter_reached"
TIME_LIMIT_REACHED = "time_limit_reached"
NUMERICAL_ERROR = "numerical_error"

# gap below which a row counts as an equality constraint
EQUALITY_GAP_TOL = 1e-12


@dataclass
class SolveResult:
    status: str
    x: np.ndarray | None = None
    y: np.ndarray | None = None
    z: np.ndarray | None = None
    certificate: np.ndarray | None = None
    objective: float | None = None
    prim_res: float | None = None
    dual_res: float | None = None
    iterations: int = 0
    rho_updates: int = 0
    polish_succeeded: bool = False
    timings: dict = field(default_factory=dict)

    @property
    def is_solved(self):
        return self.status in (SOLVED, SOLVED_INACCURATE)

    def to_dict(self):
        out = {
            "status": self.status,
            "objective": self.objective,
            "prim_res": self.prim_res,
            "dual_res": self.dual_res,
            "iterations": self.iterations,
            "rho_updates": self.rho_updates,
            "polish_succeeded": self.polish_succeeded,
            "timings": self.timings,
        }
        for name in ("x", "y", "z", "certificate"):
            v = getattr(self, name)
            out[name] = None if v is None else [float(t) for t in v]
        return out


def _inf_norm(v):
    return float(np.max(np.abs(v))) if v.shape[0] else 0.0


def rho_update_candidate(rho_bar, r_prim, prim_scale, r_dual, dual_scale):
    """Square root of the normalized primal/dual residual ratio applied to
    the current step-size; None when the ratio is degenerate."""
    if prim_scale <= 0.0 or dual_scale <= 0.0 or r_dual <= 0.0:
        return None
    ratio = (r_prim / prim_scale) / (r_dual / dual_scale)
    if ratio <= 0.0 or not np.isfinite(ratio):
        return None
    return rho_bar * float(np.sqrt(ratio))


class Solver:
    """Holds the scaled problem, iterates and cached factorizations.

    One solver is exclusively owned by one solve at a time; iterates and
    the step-size estimate persist across parametric solves so subsequent
    calls are warm started.
    """

    def __init__(self, problem, settings=None):
        t0 = time.perf_counter()
        self.settings = (settings if settings is not None else Settings()).validate()
        self.problem = problem
        self.n = problem.n
        self.m = problem.m

        bad = np.flatnonzero(problem.l > problem.u)
        self._inconsistent_row = int(bad[0]) if bad.size else None

        self._rescale()
        self.rho_bar = self.settings.rho_bar
        self.rho = self._build_rho(self.rho_bar)

        self.kkt = None
        self.sym = None
        self.fac = None
        self.num_symbolic_factorizations = 0
        self.num_numeric_factorizations = 0
        self.rho_updates = 0
        self._iters_since_factor = 0
        if self.settings.linsys_backend == "direct" and self._inconsistent_row is None:
            self._init_kkt()

        dim_n, dim_m = self.n, self.m
        self.x = np.zeros(dim_n)
        self.z = np.zeros(dim_m)
        self.y = np.zeros(dim_m)
        self.xt = np.zeros(dim_n)
        self.nu = np.zeros(dim_m)
        self.delta_x = np.zeros(dim_n)
        self.delta_y = np.zeros(dim_m)
        self.iterations = 0
        self._iterations_at_solve_start = 0

        self._pending_setup_time = time.perf_counter() - t0
        self.setup_time = self._pending_setup_time

    # -- setup helpers ---------------------------------------------------

    def _rescale(self):
        p = self.problem
        if self.settings.scaling_iters > 0:
            self.scaling = ruiz_equilibrate(
                p.P, p.q, p.A, p.l, p.u,
                eps_equil=self.settings.scaling_eps,
                max_iter=self.settings.scaling_iters)
        else:
            self.scaling = identity_scaling(p.P, p.q, p.A, p.l, p.u)
        self.eq_rows = self._detect_equalities(p.l, p.u)

    @staticmethod
    def _detect_equalities(l, u):
        finite = np.isfinite(l) & np.isfinite(u)
        gap = np.where(finite, u - l, np.inf)
        scale = np.maximum(1.0, np.maximum(np.abs(np.where(finite, l, 0.0)),
                                           np.abs(np.where(finite, u, 0.0))))
        return finite & (gap <= EQUALITY_GAP_TOL * scale)

    def _build_rho(self, rho_bar):
        s = self.settings
        rho = np.full(self.m, rho_bar)
        rho[self.eq_rows] = s.equality_rho_multiplier * rho_bar
        return np.clip(rho, s.rho_min, s.rho_max)

    def _init_kkt(self):
        self.kkt = linsys.form_kkt(self.scaling.P, self.scaling.A,
                                   self.settings.sigma, self.rho)
        self.sym = linsys.symbolic_factor(self.kkt, self.settings.ordering)
        self.num_symbolic_factorizations += 1
        self._factor()

    def _factor(self):
        """Numeric factorization with a single sigma-boost retry."""
        try:
            self.fac = linsys.numeric_factor(self.kkt, self.sym)
        except linsys.ZeroPivotError:
            boosted = self.kkt.sigma * 10.0
            self.kkt.refresh_values(p_values=self.scaling.P.values,
                                    a_values=self.scaling.A.values,
                                    sigma=boosted, rho=self.rho)
            self.fac = linsys.numeric_factor(self.kkt, self.sym)
        self.num_numeric_factorizations += 1
        self._iters_since_factor = 0

    def _iter_flops(self):
        # deterministic per-iteration cost model used by the rho-update gate
        l_nnz = self.sym.l_nnz if self.sym is not None else 0
        return (4.0 * l_nnz + 12.0 * (self.n + self.m)
                + 2.0 * self.scaling.A.nnz + self.scaling.P.nnz)

    # -- iteration -------------------------------------------------------

    def admm_iterate(self):
        """One pass of the splitting iteration on the scaled problem."""
        s = self.settings
        n, m = self.n, self.m
        scal = self.scaling
        alpha = s.alpha

        if s.linsys_backend == "direct":
            rhs = np.empty(n + m)
            rhs[:n] = self.kkt.sigma * self.x - scal.q
            if m:
                rhs[n:] = self.z - self.y / self.rho
            t = linsys.kkt_solve(self.fac, self.sym, rhs)
            xt = t[:n]
            nu = t[n:]
            zt = self.z + (nu - self.y) / self.rho if m else np.zeros(0)
        else:
            rhs_x = s.sigma * self.x - scal.q
            if m:
                rhs_x = rhs_x + spmv(scal.A, self.rho * self.z - self.y,
                                     transpose=True)
            xt, _, _ = linsys.cg_solve_reduced(
                scal.P, scal.A, s.sigma, self.rho, rhs_x,
                x_warm=self.xt, tol=s.cg_tol, max_iter=s.cg_max_iter)
            zt = spmv(scal.A, xt)
            nu = self.rho * (zt - self.z) + self.y if m else np.zeros(0)

        x_new = alpha * xt + (1.0 - alpha) * self.x
        if m:
            v = alpha * zt + (1.0 - alpha) * self.z + self.y / self.rho
            z_new = np.clip(v, scal.l, scal.u)
            y_new = self.rho * (v - z_new)
        else:
            z_new = self.z
            y_new = self.y

        self.delta_x = x_new - self.x
        self.delta_y = y_new - self.y
        self.xt = xt
        self.nu = nu
        self.x = x_new
        self.z = z_new
        self.y = y_new
        self.iterations += 1
        self._iters_since_factor += 1

    # -- termination -----------------------------------------------------

    def _scaled_products(self):
        scal = self.scaling
        ax = spmv(scal.A, self.x)
        px = spmv(scal.P, self.x, symmetric_upper=True)
        aty = spmv(scal.A, self.y, transpose=True)
        return ax, px, aty

    def check_termination(self, eps_factor=1.0):
        """Return a terminal status or None; runs the solved test first,
        then the infeasibility certificates."""
        s = self.settings
        scal = self.scaling
        ax, px, aty = self._scaled_products()
        self._last_products = (ax, px, aty)

        r_prim, r_dual = unscaled_residuals(scal, self.x, self.y, self.z,
                                            ax_bar=ax, px_bar=px, aty_bar=aty)
        prim_norm = _inf_norm(r_prim)
        dual_norm = _inf_norm(r_dual)
        self._last_residuals = (prim_norm, dual_norm)

        eps_abs = s.eps_abs * eps_factor
        eps_rel = s.eps_rel * eps_factor
        if self.m:
            eps_prim = eps_abs + eps_rel * max(_inf_norm(ax / scal.E),
                                               _inf_norm(self.z / scal.E))
        else:
            eps_prim = eps_abs
        cinv = 1.0 / scal.c
        eps_dual = eps_abs + eps_rel * cinv * max(
            _inf_norm(px / scal.D), _inf_norm(aty / scal.D),
            _inf_norm(scal.q / scal.D))
        if prim_norm <= eps_prim and dual_norm <= eps_dual:
            return SOLVED

        if self.check_primal_infeasible(self.delta_y):
            return PRIMAL_INFEASIBLE
        if self.check_dual_infeasible(self.delta_x):
            return DUAL_INFEASIBLE
        if not (np.isfinite(prim_norm) and np.isfinite(dual_norm)):
            return NUMERICAL_ERROR
        return None

    def check_primal_infeasible(self, dy_bar):
        """Certificate test on a scaled dual difference vector."""
        if self.m == 0 or not np.any(dy_bar):
            return False
        s = self.settings
        scal = self.scaling
        e_dy = scal.E * dy_bar
        norm_e_dy = _inf_norm(e_dy)
        if norm_e_dy == 0.0:
            return False
        lhs = _inf_norm(spmv(scal.A, dy_bar, transpose=True) / scal.D)
        if lhs > s.eps_pinf * norm_e_dy:
            return False
        pos = dy_bar > 0.0
        neg = dy_bar < 0.0
        # an infinite bound only contributes when its signed part vanishes
        if np.any(pos & np.isinf(scal.u)) or np.any(neg & np.isinf(scal.l)):
            return False
        support = float(np.sum(scal.u[pos] * dy_bar[pos])
                        + np.sum(scal.l[neg] * dy_bar[neg]))
        return support <= -s.eps_pinf * norm_e_dy

    def check_dual_infeasible(self, dx_bar):
        """Certificate test on a scaled primal difference vector."""
        if not np.any(dx_bar):
            return False
        s = self.settings
        scal = self.scaling
        norm_d_dx = _inf_norm(scal.D * dx_bar)
        if norm_d_dx == 0.0:
            return False
        thresh = s.eps_dinf * norm_d_dx
        if _inf_norm(spmv(scal.P, dx_bar, symmetric_upper=True) / scal.D) > scal.c * thresh:
            return False
        if float(scal.q @ dx_bar) > -scal.c * thresh:
            return False
        if self.m:
            adx = spmv(scal.A, dx_bar) / scal.E
            l, u = self.problem.l, self.problem.u
            u_inf = np.isinf(u)
            l_inf = np.isinf(l)
            both = ~u_inf & ~l_inf
            if np.any(np.abs(adx[both]) > thresh):
                return False
            only_upper_inf = u_inf & ~l_inf
            if np.any(adx[only_upper_inf] < thresh):
                return False
            only_lower_inf = l_inf & ~u_inf
            if np.any(adx[only_lower_inf] > -thresh):
                return False
            # rows free on both sides impose no recession condition
        return True

    # -- adaptive step-size ----------------------------------------------

    def adapt_rho(self):
        """Residual-balancing update of the step-size, gated by the cost
        model so refactorizations stay amortized. Returns True on apply."""
        s = self.settings
        if not s.adaptive_rho or self.rho_updates >= s.max_rho_updates:
            return False
        if self.m == 0:
            return False
        ax, px, aty = getattr(self, "_last_products", (None, None, None))
        if ax is None:
            ax, px, aty = self._scaled_products()
        scal = self.scaling
        candidate = rho_update_candidate(
            self.rho_bar,
            r_prim=_inf_norm(ax - self.z),
            prim_scale=max(_inf_norm(ax), _inf_norm(self.z)),
            r_dual=_inf_norm(px + scal.q + aty),
            dual_scale=max(_inf_norm(px), _inf_norm(aty), _inf_norm(scal.q)))
        if candidate is None:
            return False
        candidate = float(np.clip(candidate, s.rho_min, s.rho_max))
        factor = s.adaptive_rho_change_factor
        if not (candidate >= factor * self.rho_bar
                or candidate <= self.rho_bar / factor):
            return False
        if s.linsys_backend == "direct":
            # amortization gate on deterministic flop counts
            if (self._iters_since_factor * self._iter_flops()
                    <= s.adaptive_rho_time_fraction * self.sym.factor_flops):
                return False
        self.rho_bar = candidate
        self.rho = self._build_rho(candidate)
        if s.linsys_backend == "direct":
            self.kkt.refresh_values(rho=self.rho)
            self._factor()
        self.rho_updates += 1
        return True

    # -- main loop ---------------------------------------------------------

    def solve(self):
        """Run the iteration until termination and return a SolveResult."""
        s = self.settings
        t_start = time.perf_counter()
        setup_time = self._pending_setup_time
        self._pending_setup_time = 0.0
        self._iterations_at_solve_start = self.iterations

        if self._inconsistent_row is not None:
            cert = np.zeros(self.m)
            cert[self._inconsistent_row] = 1.0
            return self._finish(PRIMAL_INFEASIBLE, certificate=cert,
                                setup_time=setup_time, t_start=t_start)

        status = None
        try:
            while self.iterations_this_solve < s.max_iter:
                self.admm_iterate()
                if (s.time_limit is not None
                        and time.perf_counter() - t_start > s.time_limit):
                    status = TIME_LIMIT_REACHED
                    break
                if self.iterations_this_solve % s.check_termination_every == 0:
                    status = self.check_termination()
                    if status is not None:
                        break
                    self.adapt_rho()
        except linsys.ZeroPivotError:
            status = NUMERICAL_ERROR
        if not np.all(np.isfinite(self.x)) or not np.all(np.isfinite(self.y)):
            status = NUMERICAL_ERROR

        if status is None:
            status = self.check_termination()
            if status is None:
                status = (SOLVED_INACCURATE
                          if self.check_termination(eps_factor=10.0) == SOLVED
                          else MAX_ITER_REACHED)
        return self._finish(status, setup_time=setup_time, t_start=t_start)

    @property
    def iterations_this_solve(self):
        return self.iterations - self._iterations_at_solve_start

    def _finish(self, status, certificate=None, setup_time=0.0, t_start=None):
        solve_time = time.perf_counter() - t_start if t_start else 0.0
        iters = self.iterations_this_solve

        result = SolveResult(status=status, iterations=iters,
                             rho_updates=self.rho_updates)
        polish_time = 0.0

        if status == PRIMAL_INFEASIBLE:
            if certificate is None:
                certificate = (self.scaling.E * self.delta_y) / self.scaling.c
            result.certificate = certificate
        elif status == DUAL_INFEASIBLE:
            result.certificate = self.scaling.D * self.delta_x
        elif status in (SOLVED, SOLVED_INACCURATE, MAX_ITER_REACHED,
                        TIME_LIMIT_REACHED):
            x, y, z = unscale_solution(self.x, self.y, self.z, self.scaling)
            if self.m:
                z = np.clip(z, self.problem.l, self.problem.u)
            prim_norm, dual_norm = self._unscaled_residual_norms(x, y, z)
            result.polish_succeeded = False
            if status == SOLVED and self.settings.polish:
                t_pol = time.perf_counter()
                pol = polish_mod.polish(
                    self.problem, (x, y, z),
                    polish_mod.guess_active_sets(y),
                    delta=self.settings.polish_delta,
                    refine_steps=self.settings.refine_steps,
                    eps_abs=self.settings.eps_abs,
                    eps_rel=self.settings.eps_rel,
                    pre_prim_res=prim_norm, pre_dual_res=dual_norm)
                polish_time = time.perf_counter() - t_pol
                if pol.accepted:
                    x, y, z = pol.x, pol.y, pol.z
                    prim_norm, dual_norm = pol.prim_res, pol.dual_res
                    result.polish_succeeded = True
            result.x, result.y, result.z = x, y, z
            result.objective = self.problem.objective(x)
            result.prim_res = prim_norm
            result.dual_res = dual_norm

        result.timings = {
            "setup": setup_time,
            "solve": solve_time,
            "polish": polish_time,
            "total": setup_time + solve_time + polish_time,
        }
        return result

    def _unscaled_residual_norms(self, x, y, z):
        p = self.problem
        r_prim = spmv(p.A, x) - z if self.m else np.zeros(0)
        r_dual = spmv(p.P, x, symmetric_upper=True) + p.q + spmv(p.A, y, transpose=True)
        return _inf_norm(r_prim), _inf_norm(r_dual)

    # -- warm starting and parametric updates -----------------------------

    def warm_start(self, x, y):
        """Install (x, Ax, y) as the starting iterates (original space)."""
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if x.shape != (self.n,) or y.shape != (self.m,):
            raise ValueError("warm start dimensions do not match the problem")
        z = spmv(self.problem.A, x)
        self.set_iterates(x, z, y)

    def set_iterates(self, x, z, y):
        """Set all three iterates directly (original space)."""
        xb, yb, zb = scale_iterates(np.asarray(x, dtype=np.float64),
                                    np.asarray(y, dtype=np.float64),
                                    np.asarray(z, dtype=np.float64),
                                    self.scaling)
        self.x, self.z, self.y = xb, zb, yb
        self.xt = xb.copy()
        self.delta_x = np.zeros(self.n)
        self.delta_y = np.zeros(self.m)

    def current_iterates(self):
        """Unscaled (x, y, z) at the current iterate; z clipped into the box
        so the round trip through the row scaling cannot leak outside it."""
        x, y, z = unscale_solution(self.x, self.y, self.z, self.scaling)
        if self.m:
            z = np.clip(z, self.problem.l, self.problem.u)
        return x, y, z

    def cold_start(self):
        """Zero the iterates and reset the step-size estimate."""
        self.x = np.zeros(self.n)
        self.z = np.zeros(self.m)
        self.y = np.zeros(self.m)
        self.xt = np.zeros(self.n)
        self.delta_x = np.zeros(self.n)
        self.delta_y = np.zeros(self.m)
        if self.rho_bar != self.settings.rho_bar:
            self.rho_bar = self.settings.rho_bar
            self.rho = self._build_rho(self.rho_bar)
            if self.settings.linsys_backend == "direct" and self.kkt is not None:
                self.kkt.refresh_values(rho=self.rho)
                self._factor()

    def update_vectors(self, q=None, l=None, u=None):
        """Swap cost/bound vectors; the KKT factorization is reused unless
        the equality pattern (and with it the rho layout) changed."""
        t0 = time.perf_counter()
        p = self.problem
        q_new = p.q if q is None else np.asarray(q, dtype=np.float64)
        l_new = p.l if l is None else np.asarray(l, dtype=np.float64)
        u_new = p.u if u is None else np.asarray(u, dtype=np.float64)
        new_problem = ProblemData(p.P, q_new, p.A, l_new, u_new,
                                  metadata=p.metadata)
        bad = np.flatnonzero(new_problem.l > new_problem.u)
        self._inconsistent_row = int(bad[0]) if bad.size else None
        self.problem = new_problem

        scal = self.scaling
        scal.q = scal.c * scal.D * new_problem.q
        scal.l = _scale_bound_vec(new_problem.l, scal.E)
        scal.u = _scale_bound_vec(new_problem.u, scal.E)

        eq_new = self._detect_equalities(new_problem.l, new_problem.u)
        if not np.array_equal(eq_new, self.eq_rows):
            self.eq_rows = eq_new
            self.rho = self._build_rho(self.rho_bar)
            if self.settings.linsys_backend == "direct" and self.kkt is not None:
                self.kkt.refresh_values(rho=self.rho)
                self._factor()
        if (self.settings.linsys_backend == "direct" and self.kkt is None
                and self._inconsistent_row is None):
            self._init_kkt()
        self._pending_setup_time += time.perf_counter() - t0
        return self

    def update_matrices(self, P_values=None, A_values=None):
        """Swap matrix values on the fixed sparsity pattern; rescales the
        data and re-runs the numeric factorization with the cached
        symbolic analysis."""
        t0 = time.perf_counter()
        p = self.problem
        if P_values is not None:
            P_values = np.asarray(P_values, dtype=np.float64)
            if P_values.shape[0] != p.P.nnz:
                raise ValueError("P_values length does not match the stored pattern")
        if A_values is not None:
            A_values = np.asarray(A_values, dtype=np.float64)
            if A_values.shape[0] != p.A.nnz:
                raise ValueError("A_values length does not match the stored pattern")

        P_new = CscMatrix(p.P.nrows, p.P.ncols, p.P.colptr, p.P.rowind,
                          P_values if P_values is not None else p.P.values,
                          validate=False)
        A_new = CscMatrix(p.A.nrows, p.A.ncols, p.A.colptr, p.A.rowind,
                          A_values if A_values is not None else p.A.values,
                          validate=False)
        new_problem = ProblemData(P_new, p.q, A_new, p.l, p.u,
                                  metadata=p.metadata)
        self.problem = new_problem

        x, y, z = unscale_solution(self.x, self.y, self.z, self.scaling)
        if self.settings.freeze_scaling:
            scal = self.scaling
            scal.P = _rescale_matrix(P_new, scal.D, scal.D, scal.c)
            scal.A = _rescale_matrix(A_new, scal.E, scal.D, 1.0)
        else:
            self._rescale()
        self.set_iterates(x, z, y)

        if self.settings.linsys_backend == "direct" and self.kkt is not None:
            self.kkt.refresh_values(p_values=self.scaling.P.values,
                                    a_values=self.scaling.A.values,
                                    sigma=self.settings.sigma, rho=self.rho)
            self._factor()
        self._pending_setup_time += time.perf_counter() - t0
        return self


def _scale_bound_vec(vec, scale):
    out = vec.copy()
    finite = np.isfinite(out)
    out[finite] *= scale[finite]
    return out


def _rescale_matrix(M, row_scale, col_scale, cost):
    out = scale_csc(M, row_scale, col_scale)
    if cost != 1.0:
        out = CscMatrix(out.nrows, out.ncols, out.colptr, out.rowind,
                        out.values * cost, validate=False)
    return out


def setup(problem, settings=None):
    """Build a solver state: scaling, rho layout, KKT factorization."""
    return Solver(problem, settings)


def solve(problem, settings=None, x0=None, y0=None):
    """One-shot convenience wrapper around Solver."""
    solver = Solver(problem, settings)
    if x0 is not None or y0 is not None:
        x0 = np.zeros(problem.n) if x0 is None else x0
        y0 = np.zeros(problem.m) if y0 is None else y0
        solver.warm_start(x0, y0)
    return solver.solve()
