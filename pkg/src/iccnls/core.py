"""Core value types: datasets, affine pieces, fitted models, fit configuration."""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field, fields
from functools import cached_property
from typing import Optional

import numpy as np

from .errors import DimensionMismatch, EmptyInput, NonFiniteValue


class Curvature(enum.Enum):
    CONCAVE = "concave"
    CONVEX = "convex"


class SolverStatus(str, enum.Enum):
    OPTIMAL = "Optimal"
    MAX_ITER = "MaxIter"
    INFEASIBLE = "Infeasible"


def _frozen_array(values, dtype=float) -> np.ndarray:
    arr = np.asarray(values, dtype=dtype)
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class AffinePiece:
    """One affine function x -> intercept + slope @ x."""

    intercept: float
    slope: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "intercept", float(self.intercept))
        slope = _frozen_array(self.slope)
        if slope.ndim != 1:
            raise DimensionMismatch(f"slope must be 1-d, got shape {slope.shape}")
        if not np.isfinite(self.intercept) or not np.all(np.isfinite(slope)):
            raise NonFiniteValue("affine piece has non-finite coefficients")
        object.__setattr__(self, "slope", slope)

    @property
    def dim(self) -> int:
        return self.slope.shape[0]

    def value(self, x: np.ndarray) -> float:
        return self.intercept + float(np.dot(self.slope, x))


@dataclass(frozen=True)
class ComponentSurface:
    """A piecewise-affine surface: lower envelope if concave, upper if convex.

    Evaluation semantics live in the prediction module; this type only holds
    the pieces and guarantees they share one ambient dimension.
    """

    curvature: Curvature
    pieces: tuple[AffinePiece, ...]

    def __post_init__(self):
        pieces = tuple(self.pieces)
        if not pieces:
            raise EmptyInput("a surface needs at least one piece")
        d = pieces[0].dim
        for p in pieces:
            if p.dim != d:
                raise DimensionMismatch("pieces disagree on dimension")
        object.__setattr__(self, "pieces", pieces)

    @property
    def n_pieces(self) -> int:
        return len(self.pieces)

    @property
    def dim(self) -> int:
        return self.pieces[0].dim

    @cached_property
    def intercept_vector(self) -> np.ndarray:
        return _frozen_array([p.intercept for p in self.pieces])

    @cached_property
    def slope_matrix(self) -> np.ndarray:
        return _frozen_array(np.stack([p.slope for p in self.pieces]))


@dataclass(frozen=True)
class Dataset:
    """Validated observations: features (n, d), target (n,), column names."""

    features: np.ndarray
    target: np.ndarray
    feature_names: tuple[str, ...]

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def fingerprint(self) -> str:
        """sha256 over shapes, names, and raw float64 bytes of the data."""
        h = hashlib.sha256()
        h.update(f"{self.n},{self.d}".encode())
        h.update("\x1f".join(self.feature_names).encode())
        h.update(np.ascontiguousarray(self.features, dtype=np.float64).tobytes())
        h.update(np.ascontiguousarray(self.target, dtype=np.float64).tobytes())
        return h.hexdigest()


def validate_dataset(features, target, feature_names=None) -> Dataset:
    """Build a Dataset from raw arrays, rejecting ragged/non-finite input.

    Raises DimensionMismatch for ragged rows or length clashes and
    NonFiniteValue for NaN/inf entries.
    """
    try:
        X = np.asarray(features, dtype=float)
    except (TypeError, ValueError) as exc:
        raise DimensionMismatch(f"features are not rectangular numeric data: {exc}") from exc
    if X.ndim != 2:
        raise DimensionMismatch(f"features must be 2-d (n, d), got shape {X.shape}")
    try:
        y = np.asarray(target, dtype=float)
    except (TypeError, ValueError) as exc:
        raise DimensionMismatch(f"target is not numeric: {exc}") from exc
    if y.ndim != 1:
        raise DimensionMismatch(f"target must be 1-d, got shape {y.shape}")
    if X.shape[0] != y.shape[0]:
        raise DimensionMismatch(
            f"{X.shape[0]} feature rows vs {y.shape[0]} target entries"
        )
    if X.shape[0] == 0:
        raise EmptyInput("dataset has no rows")
    if not np.all(np.isfinite(X)):
        raise NonFiniteValue("features contain NaN or infinity")
    if not np.all(np.isfinite(y)):
        raise NonFiniteValue("target contains NaN or infinity")
    if feature_names is None:
        names = tuple(f"x{j + 1}" for j in range(X.shape[1]))
    else:
        names = tuple(str(c) for c in feature_names)
        if len(names) != X.shape[1]:
            raise DimensionMismatch(
                f"{len(names)} feature names for {X.shape[1]} columns"
            )
    return Dataset(_frozen_array(X), _frozen_array(y), names)


@dataclass(frozen=True)
class FitConfig:
    """Estimation knobs shared by every fit entry point.

    lam           regularization weight, >= 0 (0 disables the penalty)
    mix           elastic-net mix in [0, 1]: 1 pure l1, 0 pure l2
    monotone      add gradient-sign rows (nonnegative slopes) per component
    standardize   z-score features internally, map pieces back to raw units
    solver_tol    KKT tolerance passed to the solver
    max_iter      interior-point iteration cap
    gauge_ridge   tiny l2 weight injected when lam == 0 to pin the
                  decomposition gauge (identified two-component fits only)
    """

    lam: float = 0.0
    mix: float = 0.0
    monotone: bool = False
    standardize: bool = False
    solver_tol: float = 1e-6
    max_iter: int = 200
    gauge_ridge: float = 1e-8

    def __post_init__(self):
        if not (self.lam >= 0 and np.isfinite(self.lam)):
            raise ValueError(f"lam must be finite and >= 0, got {self.lam}")
        if not (0.0 <= self.mix <= 1.0):
            raise ValueError(f"mix must lie in [0, 1], got {self.mix}")
        if not (self.solver_tol > 0):
            raise ValueError(f"solver_tol must be > 0, got {self.solver_tol}")
        if not (isinstance(self.max_iter, int) and self.max_iter > 0):
            raise ValueError(f"max_iter must be a positive integer, got {self.max_iter}")
        if not (self.gauge_ridge >= 0):
            raise ValueError(f"gauge_ridge must be >= 0, got {self.gauge_ridge}")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class FitReport:
    """Per-fit diagnostics; residuals == target - fitted exactly."""

    fitted: np.ndarray
    residuals: np.ndarray
    rmse: float
    mae: float
    ratio: Optional[float]
    hyperplane_count: int
    solver_status: SolverStatus
    iterations: int
    primal_residual: float
    dual_residual: float

    def __post_init__(self):
        object.__setattr__(self, "fitted", _frozen_array(self.fitted))
        object.__setattr__(self, "residuals", _frozen_array(self.residuals))


@dataclass(frozen=True)
class IccnlsModel:
    """Fitted two-component decomposition: f = concave part + convex part."""

    concave: ComponentSurface
    convex: ComponentSurface
    d: int
    train_fingerprint: str
    config_used: FitConfig
    feature_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.concave.curvature is not Curvature.CONCAVE:
            raise DimensionMismatch("concave slot holds a non-concave surface")
        if self.convex.curvature is not Curvature.CONVEX:
            raise DimensionMismatch("convex slot holds a non-convex surface")
        if self.concave.dim != self.d or self.convex.dim != self.d:
            raise DimensionMismatch("surface dimension disagrees with model d")
        if self.concave.n_pieces != self.convex.n_pieces:
            raise DimensionMismatch("components carry different piece counts")
        if self.feature_names and len(self.feature_names) != self.d:
            raise DimensionMismatch("feature_names length disagrees with d")

    @property
    def n_pieces(self) -> int:
        return self.concave.n_pieces
