"""Envelope evaluation and out-of-sample prediction.

The concave component is evaluated as the pointwise minimum of its pieces,
the convex component as the pointwise maximum. A fitted two-component model
predicts their sum; the single convex fit predicts its own upper envelope.
"""

from __future__ import annotations

import numpy as np

from .core import ComponentSurface, Curvature, IccnlsModel
from .errors import DimensionMismatch


def _check_point(x, d: int) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != d:
        raise DimensionMismatch(f"expected a point of dimension {d}, got shape {arr.shape}")
    return arr


def _check_batch(X, d: int) -> np.ndarray:
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 1:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != d:
        raise DimensionMismatch(f"expected points of dimension {d}, got shape {arr.shape}")
    return arr


def surface_values(surface: ComponentSurface, X) -> np.ndarray:
    """Envelope values of one component at a batch of points (q, d) -> (q,)."""
    pts = _check_batch(X, surface.dim)
    vals = pts @ surface.slope_matrix.T + surface.intercept_vector
    if surface.curvature is Curvature.CONCAVE:
        return vals.min(axis=1)
    return vals.max(axis=1)


def eval_concave(surface: ComponentSurface, x) -> float:
    """min over pieces of alpha_i + beta_i @ x; surface must be concave."""
    if surface.curvature is not Curvature.CONCAVE:
        raise DimensionMismatch("eval_concave needs a concave surface")
    pt = _check_point(x, surface.dim)
    return float(surface_values(surface, pt[None, :])[0])


def eval_convex(surface: ComponentSurface, x) -> float:
    """max over pieces of alpha_i + beta_i @ x; surface must be convex."""
    if surface.curvature is not Curvature.CONVEX:
        raise DimensionMismatch("eval_convex needs a convex surface")
    pt = _check_point(x, surface.dim)
    return float(surface_values(surface, pt[None, :])[0])


def predict(model: IccnlsModel, x) -> float:
    """Two-component prediction g_concave(x) + g_convex(x) at one point."""
    pt = _check_point(x, model.d)
    return eval_concave(model.concave, pt) + eval_convex(model.convex, pt)


def predict_cnls(surface: ComponentSurface, x) -> float:
    """Upper-envelope prediction of the single convex fit."""
    return eval_convex(surface, x)


def predict_batch(model: IccnlsModel, X) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized (g_concave, g_convex, prediction) at a batch of points."""
    pts = _check_batch(X, model.d)
    g_c = surface_values(model.concave, pts)
    g_v = surface_values(model.convex, pts)
    return g_c, g_v, g_c + g_v
