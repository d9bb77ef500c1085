import numpy as np
import pytest

import splitqp as sq
from splitqp.reference import (ReferenceSizeError, dense_reference_solve)


def test_active_set_enumeration_example():
    p = sq.problem_from_dense([[1.0]], [1.0], [[1.0]], [0.0], [np.inf])
    x, y, z, status = dense_reference_solve(p)
    assert status == "solved"
    assert x[0] == pytest.approx(0.0, abs=1e-9)
    assert y[0] == pytest.approx(-1.0, abs=1e-9)


def test_unconstrained_stationary_point():
    p = sq.problem_from_dense([[2.0]], [-4.0], np.zeros((0, 1)), [], [])
    x, _, _, status = dense_reference_solve(p)
    assert status == "solved" and x[0] == pytest.approx(2.0)


def test_inconsistent_box_infeasible():
    p = sq.problem_from_dense([[1.0]], [0.0], [[1.0]], [2.0], [1.0])
    _, _, _, status = dense_reference_solve(p)
    assert status == "primal_infeasible"


def test_lp_phase1_detects_empty_polytope():
    p = sq.problem_from_dense([[0.0]], [0.0], [[1.0], [-1.0]],
                              [-np.inf, -np.inf], [-1.0, -1.0])
    _, _, _, status = dense_reference_solve(p)
    assert status == "primal_infeasible"


def test_size_cap_enforced():
    p = sq.gen_random_qp(3, 0)   # m = 30 > 24
    with pytest.raises(ReferenceSizeError):
        dense_reference_solve(p)


def test_degenerate_duplicate_rows_handled():
    A = np.array([[1.0], [1.0]])
    p = sq.problem_from_dense([[1.0]], [1.0], A, [0.0, 0.0],
                              [np.inf, np.inf])
    x, y, z, status = dense_reference_solve(p)
    assert status == "solved"
    assert x[0] == pytest.approx(0.0, abs=1e-8)
    # any split of the multiplier is stationary; the residual must vanish
    resid = x[0] + 1.0 + y.sum()
    assert abs(resid) <= 1e-8


def test_equality_rows_always_active():
    p = sq.gen_eq_qp(6, 4)
    A = p.A.to_dense()
    if np.any(np.all(A == 0, axis=1)):
        pytest.skip("zero-row draw is infeasible by construction")
    x, y, z, status = dense_reference_solve(p)
    assert status == "solved"
    assert np.max(np.abs(A @ x - p.l)) <= 1e-8
