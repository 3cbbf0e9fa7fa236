"""Fit entry points: single convex fit, monotone decomposition, identified
decomposition, and the regularization sweep."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .assembly import Variant, assemble_qp, observation_matrix
from .core import (
    AffinePiece,
    ComponentSurface,
    Curvature,
    Dataset,
    FitConfig,
    FitReport,
    IccnlsModel,
    SolverStatus,
)
from .errors import EmptyInput, InfeasibleProblem, SolverFailed
from .metrics import count_hyperplanes, count_surface_hyperplanes, dispersion_ratio, mae, rmse
from .solver import solve


@dataclass(frozen=True)
class _Standardization:
    mean: np.ndarray
    scale: np.ndarray


def _standardize(dataset: Dataset) -> tuple[Dataset, _Standardization]:
    mean = dataset.features.mean(axis=0)
    scale = dataset.features.std(axis=0)
    scale = np.where(scale > 0, scale, 1.0)  # constant columns pass through
    X = (dataset.features - mean) / scale
    work = Dataset(X, dataset.target, dataset.feature_names)
    return work, _Standardization(mean, scale)


def _destandardize_piece(intercept, slope, std: _Standardization):
    raw_slope = slope / std.scale
    raw_intercept = intercept - float(np.sum(slope * std.mean / std.scale))
    return raw_intercept, raw_slope


def _build_surface(curvature, layout, z, std) -> ComponentSurface:
    intercepts = layout.intercepts(curvature, z)
    slopes = layout.net_slopes(curvature, z)
    pieces = []
    for a, beta in zip(intercepts, slopes):
        if std is not None:
            a, beta = _destandardize_piece(a, beta, std)
        pieces.append(AffinePiece(a, beta))
    return ComponentSurface(curvature, tuple(pieces))


def _default_init(layout, dataset, seed) -> Optional[np.ndarray]:
    if seed is None:
        return None
    rng = np.random.default_rng(seed)
    spread = 1.0 + float(np.std(dataset.target))
    return rng.normal(scale=spread, size=layout.total_vars)


def _run_fit(dataset: Dataset, config: FitConfig, variant: Variant, init_seed, round_tol):
    work = dataset
    std = None
    if config.standardize:
        work, std = _standardize(dataset)
    problem = assemble_qp(work, config, variant)
    init = _default_init(problem.layout, work, init_seed)
    solution = solve(problem, tol=config.solver_tol, max_iter=config.max_iter, init=init)

    z = solution.point
    fitted = observation_matrix(work, problem.layout) @ z
    residuals = dataset.target - fitted

    if variant is Variant.CNLS:
        surface = _build_surface(Curvature.CONVEX, problem.layout, z, std)
        result = surface
        hyperplanes = count_surface_hyperplanes(surface, round_tol)
    else:
        concave = _build_surface(Curvature.CONCAVE, problem.layout, z, std)
        convex = _build_surface(Curvature.CONVEX, problem.layout, z, std)
        result = IccnlsModel(
            concave=concave,
            convex=convex,
            d=dataset.d,
            train_fingerprint=dataset.fingerprint(),
            config_used=config,
            feature_names=dataset.feature_names,
        )
        hyperplanes = count_hyperplanes(result, round_tol)

    mae_val = mae(residuals)
    # below the solver's own certification scale the fit cannot distinguish
    # its residuals from zero, so the ratio is reported as undefined (n.a.)
    zero_floor = config.solver_tol * (1.0 + float(np.abs(dataset.target).max()))
    ratio = None if mae_val <= zero_floor else dispersion_ratio(residuals)
    report = FitReport(
        fitted=fitted,
        residuals=residuals,
        rmse=rmse(residuals),
        mae=mae_val,
        ratio=ratio,
        hyperplane_count=hyperplanes,
        solver_status=solution.status,
        iterations=solution.iterations,
        primal_residual=solution.primal_residual,
        dual_residual=solution.dual_residual,
    )
    if solution.status is not SolverStatus.OPTIMAL:
        raise SolverFailed(
            f"{variant.value} fit ended with status {solution.status.value}",
            model=result,
            report=report,
        )
    return result, report


def fit_cnls(
    dataset: Dataset,
    config: FitConfig,
    *,
    init_seed: Optional[int] = None,
    round_tol: float = 1e-4,
) -> tuple[ComponentSurface, FitReport]:
    """Single convex piecewise-affine least-squares fit.

    Returns the convex surface and its report. Raises SolverFailed (with the
    partial surface and report attached) when the solver does not certify
    optimality.
    """
    return _run_fit(dataset, config, Variant.CNLS, init_seed, round_tol)


def fit_mnls(
    dataset: Dataset,
    config: FitConfig,
    *,
    init_seed: Optional[int] = None,
    round_tol: float = 1e-4,
) -> tuple[IccnlsModel, FitReport]:
    """Concave + convex decomposition with nonnegative slopes per component.

    No orthogonality rows: the decomposition is identified only through the
    sign constraints.
    """
    return _run_fit(dataset, config, Variant.MNLS, init_seed, round_tol)


def fit_iccnls(
    dataset: Dataset,
    config: FitConfig,
    *,
    init_seed: Optional[int] = None,
    round_tol: float = 1e-4,
) -> tuple[IccnlsModel, FitReport]:
    """Identified concave + convex decomposition via residual orthogonality."""
    return _run_fit(dataset, config, Variant.ICCNLS, init_seed, round_tol)


@dataclass(frozen=True)
class SweepRow:
    """One grid cell of the regularization sweep."""

    lam: float
    mix: float
    rmse: Optional[float]
    mae: Optional[float]
    ratio: Optional[float]
    hyperplane_count: Optional[int]
    status: str


def _sweep_cell(dataset, base_config, lam, mix, round_tol) -> SweepRow:
    config = replace(base_config, lam=lam, mix=mix)
    try:
        _, report = fit_iccnls(dataset, config, round_tol=round_tol)
        status = report.solver_status.value
    except SolverFailed as exc:
        report = exc.report
        status = report.solver_status.value
    except InfeasibleProblem:
        return SweepRow(lam, mix, None, None, None, None, SolverStatus.INFEASIBLE.value)
    return SweepRow(
        lam,
        mix,
        report.rmse,
        report.mae,
        report.ratio,
        report.hyperplane_count,
        status,
    )


def sweep(
    dataset: Dataset,
    lambdas,
    mixes,
    base_config: FitConfig,
    *,
    round_tol: float = 1e-4,
    threads: Optional[int] = None,
) -> list[SweepRow]:
    """Identified fits over the (lam, mix) grid, rows ordered by lam then mix.

    Failed cells become flagged rows instead of aborting the sweep. Cells are
    independent, so they may run on a thread pool; ICCNLS_THREADS (or the
    threads argument) caps the worker count, default 1.
    """
    lams = sorted(float(v) for v in lambdas)
    mixs = sorted(float(v) for v in mixes)
    if not lams or not mixs:
        raise EmptyInput("sweep needs at least one lam and one mix value")
    cells = [(lam, mix) for lam in lams for mix in mixs]
    if threads is None:
        threads = int(os.environ.get("ICCNLS_THREADS", "1") or "1")
    threads = max(1, threads)
    if threads == 1:
        return [_sweep_cell(dataset, base_config, lam, mix, round_tol) for lam, mix in cells]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [
            pool.submit(_sweep_cell, dataset, base_config, lam, mix, round_tol)
            for lam, mix in cells
        ]
        return [f.result() for f in futures]
