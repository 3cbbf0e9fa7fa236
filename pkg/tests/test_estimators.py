"""Fit entry points against hand-solved and independently solved programs."""

import numpy as np
import pytest

from iccnls.core import FitConfig, SolverStatus, validate_dataset
from iccnls.data_io import generate_synthetic
from iccnls.diagnostics import certify_orthogonality, certify_shape
from iccnls.errors import EmptyInput, SolverFailed
from iccnls.estimators import fit_cnls, fit_iccnls, fit_mnls, sweep

# fitted values of the identified fit below, from an independent
# trust-constr solve of the same constrained program (tighter gtol,
# different algorithm family); the package solver lands marginally lower
ICCNLS6_X = np.array([-1.5, -0.9, -0.3, 0.4, 1.1, 1.9])
ICCNLS6_Y = np.array([1.2, 0.1, -0.4, 0.3, 1.5, 2.0])
ICCNLS6_FITTED = np.array(
    [
        0.4353627928487472,
        0.32476070297576554,
        0.33401046153496594,
        0.708007324022204,
        1.1795031682148571,
        1.7183555504034604,
    ]
)
ICCNLS6_OBJECTIVE = 2.4562629639091105

ICCNLS5_X = np.array([-2.0, -1.0, 0.0, 1.0, 2.0])
ICCNLS5_Y = np.array([0.5, -0.6, -1.0, -0.2, 1.4])
ICCNLS5_FITTED = np.array(
    [
        -0.03282675919838096,
        -0.38267476308740245,
        -0.3826747637716964,
        0.044680853599124215,
        0.8534954324583556,
    ]
)
ICCNLS5_OBJECTIVE = 2.3433738767487773


def test_cnls_on_concave_hump_returns_flat_third(hump):
    surface, report = fit_cnls(hump, FitConfig())
    np.testing.assert_allclose(report.fitted, 1.0 / 3.0, atol=1e-7)
    assert report.rmse == pytest.approx(np.sqrt(2.0 / 9.0), abs=1e-7)
    assert report.mae == pytest.approx(4.0 / 9.0, abs=1e-7)
    assert report.ratio == pytest.approx(3.0 * np.sqrt(2.0) / 4.0, abs=1e-6)
    # the flat optimum admits tilted supporting-plane representations, so the
    # count is only bounded, not pinned
    assert 1 <= report.hyperplane_count <= hump.n
    assert report.solver_status is SolverStatus.OPTIMAL
    assert certify_shape(surface, hump).passed


def test_mnls_on_decreasing_data_returns_the_mean(decreasing):
    model, report = fit_mnls(decreasing, FitConfig())
    np.testing.assert_allclose(report.fitted, 1.0, atol=1e-7)
    assert report.rmse == pytest.approx(np.sqrt(2.0 / 3.0), abs=1e-7)
    # both components flatten, so the sign constraint is active everywhere
    assert model.concave.slope_matrix.min() >= -1e-8
    assert model.convex.slope_matrix.min() >= -1e-8
    assert 1 <= report.hyperplane_count <= decreasing.n
    assert certify_shape(model.concave, decreasing).passed
    assert certify_shape(model.convex, decreasing).passed


def test_identified_ridge_fit_matches_independent_solve():
    ds = validate_dataset(ICCNLS6_X.reshape(-1, 1), ICCNLS6_Y)
    model, report = fit_iccnls(ds, FitConfig(lam=1.0, mix=0.0))
    np.testing.assert_allclose(report.fitted, ICCNLS6_FITTED, atol=1e-6)
    pen = float(np.sum(model.concave.slope_matrix**2) + np.sum(model.convex.slope_matrix**2))
    objective = float(np.sum(report.residuals**2)) + pen
    assert objective <= ICCNLS6_OBJECTIVE + 1e-7
    assert certify_orthogonality(report, ds).passed


def test_identified_elastic_net_fit_matches_independent_solve():
    ds = validate_dataset(ICCNLS5_X.reshape(-1, 1), ICCNLS5_Y)
    model, report = fit_iccnls(ds, FitConfig(lam=1.0, mix=0.5))
    np.testing.assert_allclose(report.fitted, ICCNLS5_FITTED, atol=1e-6)
    l2 = float(np.sum(model.concave.slope_matrix**2) + np.sum(model.convex.slope_matrix**2))
    l1 = float(np.sum(np.abs(model.concave.slope_matrix)) + np.sum(np.abs(model.convex.slope_matrix)))
    objective = float(np.sum(report.residuals**2)) + 0.5 * l2 + 0.5 * l1
    assert objective <= ICCNLS5_OBJECTIVE + 1e-7
    assert certify_orthogonality(report, ds).passed


def test_model_carries_training_provenance():
    ds = validate_dataset(ICCNLS6_X.reshape(-1, 1), ICCNLS6_Y)
    config = FitConfig(lam=1.0)
    model, _ = fit_iccnls(ds, config)
    assert model.train_fingerprint == ds.fingerprint()
    assert model.config_used == config
    assert model.feature_names == ds.feature_names
    assert model.n_pieces == ds.n


def test_interpolating_fit_reports_ratio_as_undefined():
    # exactly decomposable target: residuals sink below the solver floor
    x = np.linspace(0.0, 2.0, 8).reshape(-1, 1)
    ds = validate_dataset(x, 2.0 + 0.5 * x.ravel())
    _, report = fit_iccnls(ds, FitConfig())
    assert report.mae <= report.rmse <= 1e-5
    assert report.ratio is None


def test_solver_failure_carries_partial_result():
    ds = generate_synthetic(30, 11, 0.5)
    with pytest.raises(SolverFailed) as info:
        fit_iccnls(ds, FitConfig(lam=10.0, mix=1.0, max_iter=1))
    exc = info.value
    assert exc.report.solver_status is SolverStatus.MAX_ITER
    assert exc.model is not None
    assert np.isfinite(exc.report.rmse)


def test_standardize_leaves_unpenalized_fit_unchanged():
    rng = np.random.default_rng(21)
    x = np.sort(rng.uniform(0.0, 4.0, size=12)).reshape(-1, 1)
    ds = validate_dataset(100.0 * x, (x.ravel() - 2.0) ** 2)
    raw_surface, raw = fit_cnls(ds, FitConfig())
    std_surface, std = fit_cnls(ds, FitConfig(standardize=True))
    # no penalty, so rescaling the features cannot move the optimum
    np.testing.assert_allclose(std.fitted, raw.fitted, atol=1e-5)
    # pieces are mapped back to raw units
    v = ds.features @ std_surface.slope_matrix.T + std_surface.intercept_vector
    np.testing.assert_allclose(v.max(axis=1), std.fitted, atol=1e-8)


def test_sweep_rows_are_ordered_and_optimal():
    ds = generate_synthetic(12, 2, 0.5)
    rows = sweep(ds, [1.0, 0.0], [1.0, 0.0], FitConfig())
    assert [(r.lam, r.mix) for r in rows] == [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0), (1.0, 1.0)]
    assert all(r.status == "Optimal" for r in rows)
    assert all(r.rmse is not None for r in rows)


def test_sweep_threading_is_order_stable(monkeypatch):
    ds = generate_synthetic(10, 4, 0.5)
    serial = sweep(ds, [0.0, 1.0], [0.0, 1.0], FitConfig())
    monkeypatch.setenv("ICCNLS_THREADS", "3")
    threaded = sweep(ds, [0.0, 1.0], [0.0, 1.0], FitConfig())
    assert serial == threaded


def test_sweep_flags_failed_cells_instead_of_raising():
    ds = generate_synthetic(18, 7, 0.5)
    rows = sweep(ds, [10.0], [1.0], FitConfig(max_iter=1))
    assert len(rows) == 1
    assert rows[0].status == "MaxIter"
    # the partial report still carries its metrics
    assert rows[0].rmse is not None


def test_sweep_rejects_empty_grids():
    ds = generate_synthetic(8, 0, 0.5)
    with pytest.raises(EmptyInput):
        sweep(ds, [], [0.0], FitConfig())
