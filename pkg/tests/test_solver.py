"""Solver behavior on small transparent programs, plus the reference route."""

import numpy as np
import pytest
import scipy.sparse as sp

from iccnls.assembly import QpProblem, Variant, assemble_qp
from iccnls.core import FitConfig, SolverStatus, validate_dataset
from iccnls.errors import InfeasibleProblem, TooLarge
from iccnls.solver import kkt_residuals, solve, solve_reference


def _qp(quad, lin, ineq_lhs=None, ineq_rhs=None, eq_lhs=None, eq_rhs=None, constant=0.0):
    m = len(lin)
    if ineq_lhs is None:
        ineq_lhs, ineq_rhs = np.zeros((0, m)), np.zeros(0)
    if eq_lhs is None:
        eq_lhs, eq_rhs = np.zeros((0, m)), np.zeros(0)
    return QpProblem(
        quad=sp.csr_matrix(np.asarray(quad, float)),
        lin=np.asarray(lin, float),
        ineq_lhs=sp.csr_matrix(np.asarray(ineq_lhs, float)),
        ineq_rhs=np.asarray(ineq_rhs, float),
        eq_lhs=sp.csr_matrix(np.asarray(eq_lhs, float)),
        eq_rhs=np.asarray(eq_rhs, float),
        layout=None,
        constant=float(constant),
    )


def _box_projection(c):
    # min ||z - c||^2 over z >= 0, optimum max(c, 0) componentwise
    c = np.asarray(c, float)
    m = c.size
    return _qp(
        2.0 * np.eye(m),
        -2.0 * c,
        ineq_lhs=-np.eye(m),
        ineq_rhs=np.zeros(m),
        constant=float(c @ c),
    )


def test_box_projection_clips_at_zero():
    problem = _box_projection([1.5, -2.0, 0.25, -0.1])
    sol = solve(problem, tol=1e-10)
    assert sol.status is SolverStatus.OPTIMAL
    np.testing.assert_allclose(sol.point, [1.5, 0.0, 0.25, 0.0], atol=1e-8)
    assert sol.objective_value == pytest.approx(2.0**2 + 0.1**2, abs=1e-8)


def test_kkt_residuals_vanish_at_the_optimum():
    problem = _box_projection([0.3, -0.7])
    sol = solve(problem, tol=1e-10)
    res = kkt_residuals(problem, sol)
    assert res["primal_inf"] <= 1e-9
    assert res["dual_inf"] <= 1e-7
    assert res["comp_slack"] <= 1e-7


def test_equality_projection():
    # min ||z||^2 subject to z1 + z2 = 1
    problem = _qp(2.0 * np.eye(2), np.zeros(2), eq_lhs=[[1.0, 1.0]], eq_rhs=[1.0])
    sol = solve(problem, tol=1e-10)
    np.testing.assert_allclose(sol.point, [0.5, 0.5], atol=1e-9)


def test_inconsistent_equalities_raise():
    problem = _qp(
        2.0 * np.eye(2),
        np.zeros(2),
        eq_lhs=[[1.0, 1.0], [1.0, 1.0]],
        eq_rhs=[1.0, 2.0],
    )
    with pytest.raises(InfeasibleProblem):
        solve(problem)


def test_solution_point_is_deterministic():
    rng = np.random.default_rng(9)
    ds = validate_dataset(rng.uniform(-1, 1, size=(8, 2)), rng.normal(size=8))
    problem = assemble_qp(ds, FitConfig(lam=1.0, mix=0.5), Variant.ICCNLS)
    a = solve(problem)
    b = solve(problem)
    assert np.array_equal(a.point, b.point)
    assert a.iterations == b.iterations


def test_custom_init_reaches_the_same_optimum():
    problem = _box_projection([2.0, -1.0, 0.5])
    base = solve(problem, tol=1e-10)
    warm = solve(problem, tol=1e-10, init=np.array([5.0, 5.0, 5.0]))
    np.testing.assert_allclose(base.point, warm.point, atol=1e-7)


def test_max_iter_returns_best_iterate_without_raising():
    rng = np.random.default_rng(14)
    ds = validate_dataset(rng.uniform(-2, 2, size=(14, 2)), rng.normal(size=14))
    problem = assemble_qp(ds, FitConfig(lam=10.0, mix=1.0), Variant.ICCNLS)
    sol = solve(problem, max_iter=1)
    if sol.status is SolverStatus.OPTIMAL:
        pytest.skip("polish certified the one-iteration point")
    assert sol.status is SolverStatus.MAX_ITER
    assert np.all(np.isfinite(sol.point))
    assert sol.iterations == 1


def test_reference_route_matches_on_random_boxes():
    rng = np.random.default_rng(3)
    for _ in range(10):
        m = int(rng.integers(2, 6))
        R = rng.normal(size=(m, m))
        quad = R @ R.T + m * np.eye(m)
        lin = rng.normal(size=m)
        problem = _qp(quad, lin, ineq_lhs=-np.eye(m), ineq_rhs=np.zeros(m))
        fast = solve(problem, tol=1e-9)
        ref = solve_reference(problem)
        assert ref.status is SolverStatus.OPTIMAL
        np.testing.assert_allclose(fast.point, ref.point, atol=1e-6)
        assert fast.objective_value == pytest.approx(ref.objective_value, abs=1e-8)


def test_reference_route_rejects_large_problems():
    m = 201
    problem = _qp(2.0 * sp.eye(m).toarray(), np.zeros(m))
    with pytest.raises(TooLarge):
        solve_reference(problem)


def test_reference_route_detects_infeasible_cone():
    # z = 0 forced by equalities while the inequality demands z1 <= -1
    problem = _qp(
        2.0 * np.eye(2),
        np.zeros(2),
        ineq_lhs=[[1.0, 0.0]],
        ineq_rhs=[-1.0],
        eq_lhs=[[1.0, 0.0], [0.0, 1.0]],
        eq_rhs=[0.0, 0.0],
    )
    with pytest.raises(InfeasibleProblem):
        solve_reference(problem)
