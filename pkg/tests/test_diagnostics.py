"""Certification of fitted results: shape feasibility, orthogonality, gauge."""

import numpy as np
import pytest

from iccnls.core import (
    AffinePiece,
    ComponentSurface,
    Curvature,
    FitConfig,
    validate_dataset,
)
from iccnls.diagnostics import certify_orthogonality, certify_shape, gauge_compare
from iccnls.errors import FingerprintMismatch, IndexMisalignment
from iccnls.estimators import fit_iccnls, fit_mnls


def _surface(curvature, coeffs):
    return ComponentSurface(
        curvature,
        tuple(AffinePiece(float(a), np.atleast_1d(np.asarray(b, float))) for a, b in coeffs),
    )


def test_certify_shape_accepts_a_valid_convex_surface():
    ds = validate_dataset(np.array([[0.0], [1.0], [2.0]]), np.zeros(3))
    # tangent planes of x^2 at the data points
    surface = _surface(Curvature.CONVEX, [(0.0, 0.0), (-1.0, 2.0), (-4.0, 4.0)])
    cert = certify_shape(surface, ds)
    assert cert.passed
    assert cert.max_violation <= 1e-12


def test_certify_shape_flags_a_planted_violation():
    ds = validate_dataset(np.array([[0.0], [1.0], [2.0]]), np.zeros(3))
    # middle piece sits 0.5 above the plane the first piece assigns to x=1,
    # which breaks the support inequality in the convex direction
    surface = _surface(Curvature.CONVEX, [(0.0, 1.0), (0.5, 0.0), (-4.0, 4.0)])
    cert = certify_shape(surface, ds)
    assert not cert.passed
    assert cert.max_violation > 0.1
    assert cert.worst_pair is not None


def test_certify_shape_requires_one_piece_per_observation():
    ds = validate_dataset(np.array([[0.0], [1.0]]), np.zeros(2))
    surface = _surface(Curvature.CONVEX, [(0.0, 0.0)])
    with pytest.raises(IndexMisalignment):
        certify_shape(surface, ds)


def test_orthogonality_holds_for_identified_fits():
    rng = np.random.default_rng(31)
    X = rng.uniform(0.0, 2.0, size=(10, 2))
    y = X[:, 0] ** 2 - X[:, 1] ** 2 + rng.normal(scale=0.2, size=10)
    ds = validate_dataset(X, y)
    _, report = fit_iccnls(ds, FitConfig(lam=1.0))
    cert = certify_orthogonality(report, ds)
    assert cert.passed
    assert abs(cert.sum_residual) <= 1e-6
    assert len(cert.weighted_residuals) == ds.d


def test_orthogonality_fails_without_the_constraint(decreasing):
    # the monotone decomposition leaves a slope moment of -2 in the residuals
    _, report = fit_mnls(decreasing, FitConfig())
    cert = certify_orthogonality(report, decreasing)
    assert not cert.passed


def test_gauge_compare_accepts_constant_transfer():
    rng = np.random.default_rng(8)
    X = rng.uniform(0.5, 3.0, size=(9, 1))
    y = np.log(X[:, 0]) + 0.3 * X[:, 0]
    ds = validate_dataset(X, y)
    model_a, _ = fit_iccnls(ds, FitConfig(lam=1.0), init_seed=1)
    model_b, _ = fit_iccnls(ds, FitConfig(lam=1.0), init_seed=2)
    comp = gauge_compare(model_a, model_b, tol=1e-4)
    assert comp.equivalent_up_to_constant
    assert comp.slope_gap <= 1e-4
    assert comp.intercept_deviation <= 1e-4


def test_gauge_compare_rejects_different_fits():
    rng = np.random.default_rng(9)
    X = rng.uniform(0.5, 3.0, size=(9, 1))
    ds = validate_dataset(X, np.log(X[:, 0]))
    model_a, _ = fit_iccnls(ds, FitConfig(lam=1.0))
    model_b, _ = fit_iccnls(ds, FitConfig(lam=100.0))
    # heavier shrinkage moves the slopes, which no constant can absorb
    comp = gauge_compare(model_a, model_b, tol=1e-4)
    assert not comp.equivalent_up_to_constant


def test_gauge_compare_requires_same_training_data():
    rng = np.random.default_rng(10)
    X = rng.uniform(0.5, 3.0, size=(8, 1))
    ds_a = validate_dataset(X, np.log(X[:, 0]))
    ds_b = validate_dataset(X, np.log(X[:, 0]) + 0.1)
    model_a, _ = fit_iccnls(ds_a, FitConfig(lam=1.0))
    model_b, _ = fit_iccnls(ds_b, FitConfig(lam=1.0))
    with pytest.raises(FingerprintMismatch):
        gauge_compare(model_a, model_b)
