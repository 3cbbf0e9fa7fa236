"""Post-fit certification: shape feasibility, residual orthogonality, and
gauge comparison of two decompositions."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import ComponentSurface, Curvature, Dataset, FitReport, IccnlsModel
from .errors import FingerprintMismatch, IndexMisalignment


@dataclass(frozen=True)
class ShapeCertificate:
    """Worst signed violation of the pairwise support inequalities."""

    max_violation: float
    worst_pair: Optional[tuple[int, int]]
    passed: bool
    scale: float


@dataclass(frozen=True)
class OrthogonalityCertificate:
    """Residual moment sums against the affine regressors."""

    sum_residual: float
    weighted_residuals: tuple[float, ...]
    passed: bool


@dataclass(frozen=True)
class GaugeComparison:
    """Are two decompositions the same up to an additive constant transfer?"""

    equivalent_up_to_constant: bool
    c: float
    slope_gap: float
    intercept_deviation: float


def certify_shape(
    surface: ComponentSurface, dataset: Dataset, tol: float = 1e-6
) -> ShapeCertificate:
    """Check every pairwise inequality of one component at the training points.

    Convex surfaces require piece_h(x_i) <= piece_i(x_i) for all h != i,
    concave surfaces the reverse. The violation is normalized against
    scale = 1 + the largest piece magnitude at the data, so the pass
    threshold is tol * scale.
    """
    if surface.n_pieces != dataset.n:
        raise IndexMisalignment(
            f"{surface.n_pieces} pieces for {dataset.n} observations"
        )
    V = dataset.features @ surface.slope_matrix.T + surface.intercept_vector
    own = np.diag(V)
    if surface.curvature is Curvature.CONVEX:
        viol = V - own[:, None]  # piece_h(x_i) - piece_i(x_i) <= 0
    else:
        viol = own[:, None] - V
    np.fill_diagonal(viol, -np.inf)
    flat = int(np.argmax(viol))
    i, h = divmod(flat, dataset.n)
    max_violation = float(viol[i, h])
    scale = 1.0 + float(np.abs(V).max())
    passed = max_violation <= tol * scale
    worst = (int(i), int(h)) if np.isfinite(max_violation) else None
    return ShapeCertificate(max_violation, worst, bool(passed), scale)


def certify_orthogonality(
    report: FitReport, dataset: Dataset, tol: float = 1e-6
) -> OrthogonalityCertificate:
    """Check the residual moments sum(eps) and sum(eps * x_j) of a fit.

    Each moment is normalized against 1 + the corresponding absolute target
    moment, mirroring how the equality rows scale with the data.
    """
    eps = np.asarray(report.residuals, dtype=float)
    if eps.shape[0] != dataset.n:
        raise IndexMisalignment(f"{eps.shape[0]} residuals for {dataset.n} observations")
    y = dataset.target
    s0 = float(np.sum(eps))
    scale0 = 1.0 + float(np.sum(np.abs(y)))
    weighted = []
    ok = abs(s0) <= tol * scale0
    for j in range(dataset.d):
        sj = float(np.sum(eps * dataset.features[:, j]))
        scale_j = 1.0 + float(np.sum(np.abs(dataset.features[:, j] * y)))
        ok = ok and abs(sj) <= tol * scale_j
        weighted.append(sj)
    return OrthogonalityCertificate(s0, tuple(weighted), bool(ok))


def gauge_compare(
    model_a: IccnlsModel, model_b: IccnlsModel, tol: float = 1e-4
) -> GaugeComparison:
    """Decide whether two fits differ only by the additive-constant transfer.

    The transfer moves a constant c from the convex to the concave intercepts
    (concave + c, convex - c) and leaves every slope and every combined value
    unchanged. Models trained on different data raise FingerprintMismatch.
    """
    if model_a.train_fingerprint != model_b.train_fingerprint or model_a.d != model_b.d:
        raise FingerprintMismatch("models were trained on different data")
    if model_a.n_pieces != model_b.n_pieces:
        raise IndexMisalignment("models carry different piece counts")
    slope_gap = max(
        float(np.abs(model_a.concave.slope_matrix - model_b.concave.slope_matrix).max()),
        float(np.abs(model_a.convex.slope_matrix - model_b.convex.slope_matrix).max()),
    )
    dc = model_a.concave.intercept_vector - model_b.concave.intercept_vector
    dv = model_a.convex.intercept_vector - model_b.convex.intercept_vector
    c = float(np.mean(dc))
    deviation = max(
        float(np.abs(dc - c).max()),
        float(np.abs(dv + c).max()),
    )
    equivalent = slope_gap <= tol and deviation <= tol
    return GaugeComparison(bool(equivalent), c, slope_gap, deviation)
