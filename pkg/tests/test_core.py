"""Container and validation behavior: datasets, configs, surfaces, models."""

import dataclasses

import numpy as np
import pytest

from iccnls.core import (
    AffinePiece,
    ComponentSurface,
    Curvature,
    FitConfig,
    IccnlsModel,
    validate_dataset,
)
from iccnls.errors import DimensionMismatch, EmptyInput, NonFiniteValue


def test_validate_accepts_nested_lists():
    ds = validate_dataset([[1, 2], [3, 4], [5, 6]], [1, 2, 3])
    assert ds.n == 3
    assert ds.d == 2
    assert ds.features.dtype == np.float64
    assert ds.feature_names == ("x1", "x2")


def test_validate_rejects_1d_features():
    # callers must pass an explicit (n, d) layout, even for d = 1
    with pytest.raises(DimensionMismatch):
        validate_dataset([1.0, 2.0, 3.0], [0.0, 0.0, 0.0])


def test_custom_feature_names_are_kept():
    ds = validate_dataset([[1.0], [2.0]], [0.0, 1.0], feature_names=["load"])
    assert ds.feature_names == ("load",)


def test_feature_names_length_mismatch():
    with pytest.raises(DimensionMismatch):
        validate_dataset([[1.0, 2.0]], [0.0], feature_names=["only_one"])


def test_ragged_rows_rejected():
    with pytest.raises(DimensionMismatch):
        validate_dataset([[1.0, 2.0], [3.0]], [0.0, 1.0])


def test_three_dimensional_features_rejected():
    with pytest.raises(DimensionMismatch):
        validate_dataset(np.zeros((2, 2, 2)), [0.0, 1.0])


def test_two_dimensional_target_rejected():
    with pytest.raises(DimensionMismatch):
        validate_dataset([[1.0], [2.0]], [[0.0], [1.0]])


def test_row_count_mismatch_rejected():
    with pytest.raises(DimensionMismatch):
        validate_dataset([[1.0], [2.0]], [0.0, 1.0, 2.0])


def test_empty_dataset_rejected():
    with pytest.raises(EmptyInput):
        validate_dataset(np.zeros((0, 2)), np.zeros(0))


@pytest.mark.parametrize("bad", [np.nan, np.inf, -np.inf])
def test_nonfinite_features_rejected(bad):
    with pytest.raises(NonFiniteValue):
        validate_dataset([[1.0], [bad]], [0.0, 1.0])


def test_nonfinite_target_rejected():
    with pytest.raises(NonFiniteValue):
        validate_dataset([[1.0], [2.0]], [0.0, np.nan])


def test_fingerprint_is_stable_and_sensitive():
    a = validate_dataset([[1.0], [2.0]], [0.0, 1.0])
    b = validate_dataset([[1.0], [2.0]], [0.0, 1.0])
    assert a.fingerprint() == b.fingerprint()
    c = validate_dataset([[1.0], [2.0]], [0.0, 1.0 + 1e-12])
    assert a.fingerprint() != c.fingerprint()
    d = validate_dataset([[1.0], [2.0]], [0.0, 1.0], feature_names=["renamed"])
    assert a.fingerprint() != d.fingerprint()


def test_fit_config_defaults():
    config = FitConfig()
    assert config.lam == 0.0
    assert config.mix == 0.0
    assert config.monotone is False
    assert config.standardize is False
    assert config.solver_tol == 1e-6
    assert config.max_iter == 200
    assert config.gauge_ridge == 1e-8


@pytest.mark.parametrize(
    "kwargs",
    [
        {"lam": -0.5},
        {"mix": -0.1},
        {"mix": 1.5},
        {"solver_tol": 0.0},
        {"max_iter": 0},
        {"gauge_ridge": -1e-9},
    ],
)
def test_fit_config_rejects_bad_values(kwargs):
    with pytest.raises(ValueError):
        FitConfig(**kwargs)


def test_fit_config_to_dict_round_trips():
    config = FitConfig(lam=2.0, mix=0.5, monotone=True)
    assert FitConfig(**config.to_dict()) == config


def test_affine_piece_value_and_dim():
    piece = AffinePiece(1.0, np.array([2.0, -1.0]))
    assert piece.dim == 2
    assert piece.value(np.array([3.0, 4.0])) == pytest.approx(1.0 + 6.0 - 4.0)


def test_surface_coefficient_views():
    pieces = (AffinePiece(0.0, np.array([1.0])), AffinePiece(2.0, np.array([-1.0])))
    surface = ComponentSurface(Curvature.CONVEX, pieces)
    assert surface.n_pieces == 2
    assert surface.dim == 1
    np.testing.assert_array_equal(surface.intercept_vector, [0.0, 2.0])
    np.testing.assert_array_equal(surface.slope_matrix, [[1.0], [-1.0]])


def test_surface_rejects_mixed_dimensions():
    with pytest.raises(DimensionMismatch):
        ComponentSurface(
            Curvature.CONVEX,
            (AffinePiece(0.0, np.array([1.0])), AffinePiece(0.0, np.array([1.0, 2.0]))),
        )


def test_surface_rejects_zero_pieces():
    with pytest.raises(EmptyInput):
        ComponentSurface(Curvature.CONVEX, ())


def _flat_surface(curvature, d=1):
    return ComponentSurface(curvature, (AffinePiece(0.0, np.zeros(d)),))


def test_model_requires_matching_curvatures():
    with pytest.raises(DimensionMismatch):
        IccnlsModel(
            concave=_flat_surface(Curvature.CONVEX),
            convex=_flat_surface(Curvature.CONVEX),
            d=1,
            train_fingerprint="f",
            config_used=FitConfig(),
        )


def test_model_requires_matching_dimension():
    with pytest.raises(DimensionMismatch):
        IccnlsModel(
            concave=_flat_surface(Curvature.CONCAVE, d=2),
            convex=_flat_surface(Curvature.CONVEX, d=1),
            d=2,
            train_fingerprint="f",
            config_used=FitConfig(),
        )


def test_model_is_frozen():
    model = IccnlsModel(
        concave=_flat_surface(Curvature.CONCAVE),
        convex=_flat_surface(Curvature.CONVEX),
        d=1,
        train_fingerprint="f",
        config_used=FitConfig(),
    )
    assert model.n_pieces == 1
    with pytest.raises(dataclasses.FrozenInstanceError):
        model.d = 2
