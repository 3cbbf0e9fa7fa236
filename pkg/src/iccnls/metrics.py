"""Fit-quality metrics: RMSE, MAE, their ratio, and hyperplane counting."""

from __future__ import annotations

from typing import Optional

import numpy as np

from .core import ComponentSurface, IccnlsModel
from .errors import DimensionMismatch, EmptyInput


def _residual_vector(residuals) -> np.ndarray:
    r = np.asarray(residuals, dtype=float)
    if r.ndim != 1:
        raise DimensionMismatch(f"residuals must be 1-d, got shape {r.shape}")
    if r.size == 0:
        raise EmptyInput("empty residual vector")
    return r


def rmse(residuals) -> float:
    """Root mean squared error of a residual vector."""
    r = _residual_vector(residuals)
    return float(np.sqrt(np.mean(r * r)))


def mae(residuals) -> float:
    """Mean absolute error of a residual vector."""
    r = _residual_vector(residuals)
    return float(np.mean(np.abs(r)))


def dispersion_ratio(residuals) -> Optional[float]:
    """RMSE / MAE, or None (printed as "n.a.") when MAE is exactly 0."""
    r = _residual_vector(residuals)
    m = mae(r)
    if m == 0.0:
        return None
    return rmse(r) / m


def _rounded_rows(values: np.ndarray, round_tol: float) -> set[tuple]:
    # cluster rule: round every coordinate to the nearest multiple of round_tol
    scaled = np.rint(values / round_tol)
    scaled = scaled + 0.0  # collapse -0.0 into +0.0
    return {tuple(row) for row in scaled}


def count_hyperplanes(model: IccnlsModel, round_tol: float = 1e-4) -> int:
    """Number of distinct combined hyperplanes (alpha_c+alpha_v, beta_c+beta_v).

    Pieces whose combined coefficient tuples land in the same round_tol grid
    cell are counted once. Counts the planes of the summed surface f, so the
    additive-constant gauge of the decomposition cannot change the result
    beyond the rounding grid.
    """
    if round_tol <= 0:
        raise ValueError(f"round_tol must be > 0, got {round_tol}")
    combined = np.column_stack(
        [
            model.concave.intercept_vector + model.convex.intercept_vector,
            model.concave.slope_matrix + model.convex.slope_matrix,
        ]
    )
    return len(_rounded_rows(combined, round_tol))


def count_surface_hyperplanes(surface: ComponentSurface, round_tol: float = 1e-4) -> int:
    """Distinct (alpha_i, beta_i) tuples of a single component, same rounding rule."""
    if round_tol <= 0:
        raise ValueError(f"round_tol must be > 0, got {round_tol}")
    coeffs = np.column_stack([surface.intercept_vector, surface.slope_matrix])
    return len(_rounded_rows(coeffs, round_tol))


def component_hyperplane_counts(model: IccnlsModel, round_tol: float = 1e-4) -> dict:
    """Supplementary per-component counts alongside the combined count."""
    return {
        "combined": count_hyperplanes(model, round_tol),
        "concave": count_surface_hyperplanes(model.concave, round_tol),
        "convex": count_surface_hyperplanes(model.convex, round_tol),
    }
