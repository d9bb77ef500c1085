import numpy as np
import pytest

import splitqp as sq
from splitqp import linsys
from splitqp.probgen import SplitMix64

from conftest import dense_ldl, dense_sym_from_upper, dense_symbolic_counts


def upper(dense):
    return sq.csc_from_dense(np.asarray(dense, dtype=float), upper=True)


class TestFormKkt:
    def test_empty_constraint_block(self):
        kkt = linsys.form_kkt(upper([[0.0]]), sq.csc_zeros(0, 1), 1e-6,
                              np.zeros(0))
        assert np.allclose(kkt.K.to_dense(symmetric_upper=True), [[1e-6]])

    def test_dense_assembly_2x2(self):
        kkt = linsys.form_kkt(upper([[2.0]]), sq.csc_from_dense([[1.0]]),
                              1.0, [4.0])
        assert np.allclose(kkt.K.to_dense(symmetric_upper=True),
                           [[3.0, 1.0], [1.0, -0.25]])

    def test_dense_assembly_4x4(self):
        kkt = linsys.form_kkt(upper(np.zeros((2, 2))), sq.csc_identity(2),
                              1e-6, [0.1, 0.1])
        want = np.array([[1e-6, 0, 1, 0], [0, 1e-6, 0, 1],
                         [1, 0, -10, 0], [0, 1, 0, -10.0]])
        assert np.allclose(kkt.K.to_dense(symmetric_upper=True), want)

    def test_structural_diagonal_always_present(self):
        P = sq.csc_from_triplets([0], [1], [5.0], 2, 2)  # empty diagonal
        kkt = linsys.form_kkt(P, sq.csc_zeros(1, 2), 1e-6, [0.5])
        cols = kkt.K.col_indices()
        diag_entries = np.sum(kkt.K.rowind == cols)
        assert diag_entries == 3
        assert kkt.rho_diag_positions.shape == (1,)
        assert kkt.K.values[kkt.rho_diag_positions[0]] == -2.0

    def test_errors(self):
        with pytest.raises(ValueError):
            linsys.form_kkt(upper([[1.0]]), sq.csc_zeros(0, 1), -1.0,
                            np.zeros(0))
        with pytest.raises(ValueError):
            linsys.form_kkt(upper([[1.0]]), sq.csc_from_dense([[1.0]]),
                            1.0, [0.0])
        with pytest.raises(sq.SparseError):
            linsys.form_kkt(upper([[1.0]]), sq.csc_from_dense([[1.0, 2.0]]),
                            1.0, [1.0])


def _symbolic_counts(dense_pattern, ordering="natural"):
    K = upper(dense_pattern)
    n = K.ncols
    kkt = linsys.KktMatrix(K, n, 0, 1.0, np.zeros(0),
                           np.zeros(0, dtype=np.int64),
                           np.zeros(0, dtype=np.int64),
                           np.zeros(0, dtype=np.int64),
                           np.zeros(0, dtype=np.int64))
    return linsys.symbolic_factor(kkt, ordering)


class TestSymbolicFactor:
    def test_diagonal_no_fill(self):
        sym = _symbolic_counts(np.diag([1.0, 2.0, 3.0]))
        assert np.array_equal(sym.Lcolcounts, [0, 0, 0])

    def test_arrowhead_orderings(self):
        n = 4
        late = np.eye(n)
        late[:, n - 1] = 1.0   # arrow on the last row/column: no fill
        sym = _symbolic_counts(np.triu(late + late.T))
        assert np.array_equal(sym.Lcolcounts,
                              dense_symbolic_counts(late + late.T))
        assert sym.Lcolcounts[:3].sum() == 3  # original off-diagonals only

        early = np.eye(n)
        early[0, :] = 1.0      # arrow first: fills every later column
        dense = dense_symbolic_counts(early + early.T)
        sym = _symbolic_counts(np.triu(early + early.T))
        assert np.array_equal(sym.Lcolcounts, dense)
        assert np.array_equal(sym.Lcolcounts, [3, 2, 1, 0])

    def test_tridiagonal(self):
        T = np.eye(5) + np.eye(5, k=1)
        sym = _symbolic_counts(T)
        assert np.array_equal(sym.Lcolcounts, [1, 1, 1, 1, 0])

    def test_counts_match_dense_oracle_random(self):
        for seed in range(40):
            rng = SplitMix64(seed, 7)
            n = 2 + int(rng.uniform(1)[0] * 9)
            dense = (rng.uniform(n * n).reshape(n, n) < 0.3)
            dense = np.triu(dense | dense.T, 1) + np.eye(n, dtype=bool)
            sym = _symbolic_counts(dense.astype(float))
            assert np.array_equal(sym.Lcolcounts,
                                  dense_symbolic_counts(dense))


class TestNumericFactor:
    def test_diagonal(self):
        kkt = linsys.form_kkt(upper([[2.0 - 1e-6]]), sq.csc_zeros(1, 1),
                              1e-6, [0.2])
        fac = linsys.numeric_factor(kkt, linsys.symbolic_factor(kkt, "natural"))
        assert np.allclose(fac.Dinv, [0.5, -0.2])
        assert fac.L.nnz == 0
        assert (fac.n_positive, fac.n_negative) == (1, 1)

    def test_dense_2x2_elimination(self):
        kkt = linsys.form_kkt(upper([[1.0 - 1e-6]]),
                              sq.csc_from_dense([[1.0]]), 1e-6, [1.0])
        fac = linsys.numeric_factor(kkt, linsys.symbolic_factor(kkt, "natural"))
        assert np.allclose(fac.L.to_dense()[1, 0], 1.0)
        assert np.allclose(fac.D, [1.0, -2.0])

    def test_kkt_example_elimination(self):
        kkt = linsys.form_kkt(upper([[2.0]]), sq.csc_from_dense([[1.0]]),
                              1.0, [4.0])
        fac = linsys.numeric_factor(kkt, linsys.symbolic_factor(kkt, "natural"))
        assert np.allclose(fac.L.to_dense()[1, 0], 1.0 / 3.0)
        assert np.allclose(fac.D, [3.0, -0.25 - 1.0 / 3.0])

    def test_zero_pivot_raises(self):
        K = upper([[1.0, 1.0], [0.0, 1.0]])   # singular after elimination
        kkt = linsys.KktMatrix(K, 2, 0, 1.0, np.zeros(0),
                               np.zeros(0, dtype=np.int64),
                               np.zeros(0, dtype=np.int64),
                               np.zeros(0, dtype=np.int64),
                               np.zeros(0, dtype=np.int64))
        sym = linsys.symbolic_factor(kkt, "natural")
        with pytest.raises(linsys.ZeroPivotError):
            linsys.numeric_factor(kkt, sym)


class TestKktSolve:
    def test_identity(self):
        kkt = linsys.form_kkt(upper(np.eye(3) - 1e-6 * np.eye(3)),
                              sq.csc_zeros(0, 3), 1e-6, np.zeros(0))
        sym = linsys.symbolic_factor(kkt, "natural")
        fac = linsys.numeric_factor(kkt, sym)
        rhs = np.array([1.0, -2.0, 3.0])
        assert np.allclose(linsys.kkt_solve(fac, sym, rhs), rhs)

    def test_2x2(self):
        kkt = linsys.form_kkt(upper([[1.0 - 1e-6]]),
                              sq.csc_from_dense([[1.0]]), 1e-6, [1.0])
        sym = linsys.symbolic_factor(kkt, "natural")
        fac = linsys.numeric_factor(kkt, sym)
        assert np.allclose(linsys.kkt_solve(fac, sym, [1.0, 0.0]), [0.5, 0.5])

    def test_4x4_matches_dense(self):
        kkt = linsys.form_kkt(upper(np.zeros((2, 2))), sq.csc_identity(2),
                              1e-6, [0.1, 0.1])
        sym = linsys.symbolic_factor(kkt, "natural")
        fac = linsys.numeric_factor(kkt, sym)
        rhs = np.array([1.0, 0.0, 0.0, 0.0])
        want = np.linalg.solve(kkt.K.to_dense(symmetric_upper=True), rhs)
        assert np.allclose(linsys.kkt_solve(fac, sym, rhs), want)


class TestUpdateRho:
    def test_unchanged_rho_bitwise(self):
        P, A, sigma, rho = _instance(3)
        kkt = linsys.form_kkt(P, A, sigma, rho)
        sym = linsys.symbolic_factor(kkt, "amd")
        fac1 = linsys.numeric_factor(kkt, sym)
        fac2 = linsys.update_rho_values(kkt, rho, sym)
        assert np.array_equal(fac1.L.values, fac2.L.values)
        assert np.array_equal(fac1.Dinv, fac2.Dinv)

    def test_matches_fresh_factorization(self):
        P, A, sigma, rho = _instance(4)
        kkt = linsys.form_kkt(P, A, sigma, rho)
        sym = linsys.symbolic_factor(kkt, "amd")
        linsys.numeric_factor(kkt, sym)
        rho_new = rho * 3.7
        fac_up = linsys.update_rho_values(kkt, rho_new, sym)
        kkt_fresh = linsys.form_kkt(P, A, sigma, rho_new)
        fac_fresh = linsys.numeric_factor(kkt_fresh, sym)
        assert np.array_equal(fac_up.L.values, fac_fresh.L.values)
        assert np.array_equal(fac_up.Dinv, fac_fresh.Dinv)

    def test_kkt_example_rho_change(self):
        kkt = linsys.form_kkt(upper([[2.0]]), sq.csc_from_dense([[1.0]]),
                              1.0, [4.0])
        sym = linsys.symbolic_factor(kkt, "natural")
        linsys.numeric_factor(kkt, sym)
        fac = linsys.update_rho_values(kkt, np.array([1.0]), sym)
        assert kkt.K.values[kkt.rho_diag_positions[0]] == -1.0
        assert np.allclose(fac.D, [3.0, -1.0 - 1.0 / 3.0])

    def test_empty_update(self):
        kkt = linsys.form_kkt(upper([[1.0]]), sq.csc_zeros(0, 1), 1e-6,
                              np.zeros(0))
        sym = linsys.symbolic_factor(kkt, "natural")
        fac1 = linsys.numeric_factor(kkt, sym)
        fac2 = linsys.update_rho_values(kkt, np.zeros(0), sym)
        assert np.array_equal(fac1.Dinv, fac2.Dinv)


def _instance(seed):
    from conftest import random_kkt_instance
    return random_kkt_instance(seed)


class TestCgReduced:
    def test_diagonal_system(self):
        P = upper(np.eye(2) * (1.0 - 0.0))
        x, iters, ok = linsys.cg_solve_reduced(
            P, sq.csc_zeros(0, 2), 1e-6, np.zeros(0),
            np.array([2.0, -4.0]), tol=1e-12, max_iter=50)
        assert ok
        assert np.allclose(x, np.array([2.0, -4.0]) / (1.0 + 1e-6))

    def test_scalar_arithmetic(self):
        P = upper([[2.0]])
        x, _, ok = linsys.cg_solve_reduced(
            P, sq.csc_from_dense([[1.0]]), 1.0, [4.0], np.array([7.0]),
            tol=1e-14, max_iter=50)
        assert ok and np.allclose(x, [1.0])

    def test_spd_matches_dense(self):
        rng = SplitMix64(5, 11)
        n, m = 5, 4
        M = rng.normal(n * n).reshape(n, n)
        P = M @ M.T
        A = rng.normal(m * n).reshape(m, n)
        rho = rng.uniform(m, 0.5, 2.0)
        rhs = rng.normal(n)
        x, _, ok = linsys.cg_solve_reduced(
            upper(P), sq.csc_from_dense(A), 1e-6, rho, rhs,
            tol=1e-12, max_iter=200)
        want = np.linalg.solve(P + 1e-6 * np.eye(n) + A.T @ np.diag(rho) @ A,
                               rhs)
        assert ok and np.allclose(x, want, atol=1e-8)

    def test_not_converged_flagged(self):
        P, A, sigma, rho = _instance(9)
        rhs = np.ones(P.ncols)
        _, iters, ok = linsys.cg_solve_reduced(P, A, sigma, rho, rhs,
                                               tol=1e-14, max_iter=1)
        assert not ok and iters == 1


class TestQuasiDefiniteCorpus:
    def test_factor_reconstruct_solve_500(self, kkt_corpus):
        for P, A, sigma, rho in kkt_corpus:
            n, m = P.ncols, A.nrows
            kkt = linsys.form_kkt(P, A, sigma, rho)
            sym = linsys.symbolic_factor(kkt, "amd")
            fac = linsys.numeric_factor(kkt, sym)   # never ZeroPivot
            assert (fac.n_positive, fac.n_negative) == (n, m)

            Kd = dense_sym_from_upper(kkt.K)
            L = fac.L.to_dense() + np.eye(n + m)
            recon = L @ np.diag(fac.D) @ L.T
            Pd = np.eye(n + m)[sym.perm]
            err = np.linalg.norm(Pd @ Kd @ Pd.T - recon)
            assert err <= 1e-10 * max(1.0, np.linalg.norm(Kd))

            rhs = SplitMix64(n * 31 + m, 13).normal(n + m)
            t = linsys.kkt_solve(fac, sym, rhs)
            resid = np.max(np.abs(Kd @ t - rhs))
            assert resid <= 1e-10 * max(1.0, np.max(np.abs(rhs)))

    def test_ordering_invariance(self, kkt_corpus):
        for P, A, sigma, rho in kkt_corpus[:100]:
            kkt = linsys.form_kkt(P, A, sigma, rho)
            rhs = SplitMix64(P.ncols, 17).normal(kkt.dim)
            sols = []
            for ordering in ("natural", "amd"):
                sym = linsys.symbolic_factor(kkt, ordering)
                fac = linsys.numeric_factor(kkt, sym)
                sols.append(linsys.kkt_solve(fac, sym, rhs))
            scale = max(1.0, np.max(np.abs(sols[0])))
            assert np.max(np.abs(sols[0] - sols[1])) <= 1e-9 * scale

    def test_direct_indirect_agreement(self, kkt_corpus):
        for P, A, sigma, rho in kkt_corpus[:100]:
            n, m = P.ncols, A.nrows
            rng = SplitMix64(n * 7 + m, 19)
            x, z, y = rng.normal(n), rng.normal(m), rng.normal(m)
            q = rng.normal(n)
            kkt = linsys.form_kkt(P, A, sigma, rho)
            sym = linsys.symbolic_factor(kkt, "amd")
            fac = linsys.numeric_factor(kkt, sym)
            rhs = np.concatenate((sigma * x - q, z - y / rho if m else z))
            t = linsys.kkt_solve(fac, sym, rhs)
            xt_direct, nu = t[:n], t[n:]
            zt_direct = z + (nu - y) / rho if m else np.zeros(0)

            rhs_x = sigma * x - q
            if m:
                rhs_x = rhs_x + sq.spmv(A, rho * z - y, transpose=True)
            xt_cg, _, ok = linsys.cg_solve_reduced(
                P, A, sigma, rho, rhs_x, tol=1e-12, max_iter=2000)
            assert ok
            scale = max(1.0, np.max(np.abs(xt_direct)))
            assert np.max(np.abs(xt_direct - xt_cg)) <= 1e-8 * scale
            zt_cg = sq.spmv(A, xt_cg)
            if m:
                zscale = max(1.0, np.max(np.abs(zt_direct)))
                assert np.max(np.abs(zt_direct - zt_cg)) <= 1e-6 * zscale


def test_numeric_factor_matches_dense_ldl():
    for seed in (1, 2, 3, 8, 21):
        P, A, sigma, rho = _instance(seed)
        kkt = linsys.form_kkt(P, A, sigma, rho)
        sym = linsys.symbolic_factor(kkt, "natural")
        fac = linsys.numeric_factor(kkt, sym)
        Kd = dense_sym_from_upper(kkt.K)
        L_or, D_or = dense_ldl(Kd)
        assert np.allclose(fac.L.to_dense() + np.eye(kkt.dim), L_or,
                           atol=1e-8)
        assert np.allclose(fac.D, D_or, atol=1e-8)
