"""Data ingestion, synthetic data generation, and model persistence."""

from __future__ import annotations

import csv
import enum
import json
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (
    AffinePiece,
    ComponentSurface,
    Curvature,
    Dataset,
    FitConfig,
    IccnlsModel,
    validate_dataset,
)
from .errors import (
    CorruptModel,
    DimensionMismatch,
    EmptyFile,
    EmptyInput,
    MissingColumn,
    UnparsableNumeric,
)

MODEL_FORMAT_VERSION = "iccnls-model/1"


class ColumnRole(enum.Enum):
    NUMERIC = "numeric"
    CATEGORICAL = "categorical"
    TARGET = "target"
    IGNORE = "ignore"


@dataclass(frozen=True)
class ColumnSpec:
    """Role assignment for one named CSV column."""

    name: str
    role: ColumnRole


def _read_rows(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows:
        raise EmptyFile(f"{path}: file is empty")
    header, data = rows[0], rows[1:]
    if not data:
        raise EmptyFile(f"{path}: header only, no data rows")
    return header, data


def _parse_float(cell: str, row_idx: int, column: str) -> float:
    try:
        return float(cell)
    except ValueError as exc:
        raise UnparsableNumeric(
            f"data row {row_idx}, column {column!r}: cannot parse {cell!r} as a number"
        ) from exc


def load_csv(path, specs: list[ColumnSpec]) -> Dataset:
    """Read a headered CSV into a validated Dataset.

    Exactly one Target spec is required. Categorical columns are one-hot
    encoded with the first-seen level dropped (columns named "col=level");
    a single-valued categorical column is dropped entirely with a warning.
    Header columns without a spec are ignored. Decimal separator is ".".
    """
    targets = [s for s in specs if s.role is ColumnRole.TARGET]
    if len(targets) != 1:
        raise ValueError(f"need exactly one Target column spec, got {len(targets)}")
    header, data = _read_rows(path)
    positions = {name: idx for idx, name in enumerate(header)}
    for spec in specs:
        if spec.name not in positions:
            raise MissingColumn(f"column {spec.name!r} not found in header {header}")
    by_name = {s.name: s for s in specs}

    for r, row in enumerate(data, start=1):
        if len(row) != len(header):
            raise DimensionMismatch(
                f"data row {r} has {len(row)} cells, header has {len(header)}"
            )

    feature_columns: list[np.ndarray] = []
    feature_names: list[str] = []
    for name in header:
        spec = by_name.get(name)
        if spec is None or spec.role in (ColumnRole.IGNORE, ColumnRole.TARGET):
            continue
        col_idx = positions[name]
        cells = [row[col_idx] for row in data]
        if spec.role is ColumnRole.NUMERIC:
            values = np.array(
                [_parse_float(c, r, name) for r, c in enumerate(cells, start=1)]
            )
            feature_columns.append(values)
            feature_names.append(name)
        else:  # categorical: one-hot, first-seen level dropped
            levels: list[str] = []
            for c in cells:
                if c not in levels:
                    levels.append(c)
            if len(levels) == 1:
                warnings.warn(
                    f"categorical column {name!r} is single-valued and was dropped",
                    stacklevel=2,
                )
                continue
            arr = np.array(cells)
            for level in levels[1:]:
                feature_columns.append((arr == level).astype(float))
                feature_names.append(f"{name}={level}")

    target_idx = positions[targets[0].name]
    y = np.array(
        [
            _parse_float(row[target_idx], r, targets[0].name)
            for r, row in enumerate(data, start=1)
        ]
    )
    if not feature_columns:
        raise EmptyInput("no usable feature columns after applying the specs")
    X = np.column_stack(feature_columns)
    return validate_dataset(X, y, feature_names)


def generate_synthetic(n: int, seed: int, noise_sd: float = 0.5) -> Dataset:
    """Seeded benchmark generator.

    Uses numpy's default_rng (PCG64) with the given seed; draws the full
    (n, 3) feature block uniformly on [0, 10] first, then the n noise terms
    N(0, noise_sd^2). The response is
        y = 0.2 x1^2 - 0.3 x2^2 + sin(2 x1) cos(0.5 x2) + noise;
    x3 never enters the response and stays in the data as a pure noise
    feature.
    """
    if n < 1:
        raise EmptyInput(f"n must be >= 1, got {n}")
    if noise_sd < 0:
        raise ValueError(f"noise_sd must be >= 0, got {noise_sd}")
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.0, 10.0, size=(n, 3))
    noise = rng.normal(0.0, noise_sd, size=n) if noise_sd > 0 else np.zeros(n)
    y = (
        0.2 * X[:, 0] ** 2
        - 0.3 * X[:, 1] ** 2
        + np.sin(2.0 * X[:, 0]) * np.cos(0.5 * X[:, 1])
        + noise
    )
    return validate_dataset(X, y, ("x1", "x2", "x3"))


def write_dataset_csv(dataset: Dataset, path, target_name: str = "y") -> None:
    """Write a dataset back out as a headered CSV at full precision."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(list(dataset.feature_names) + [target_name])
        for i in range(dataset.n):
            writer.writerow(
                [repr(float(v)) for v in dataset.features[i]]
                + [repr(float(dataset.target[i]))]
            )


def load_points_csv(path, feature_names: tuple[str, ...]) -> np.ndarray:
    """Read query points whose header must carry exactly the model's features."""
    header, data = _read_rows(path)
    positions = {}
    for name in feature_names:
        if name not in header:
            raise MissingColumn(f"query file lacks feature column {name!r}")
        positions[name] = header.index(name)
    out = np.empty((len(data), len(feature_names)))
    for r, row in enumerate(data, start=1):
        if len(row) != len(header):
            raise DimensionMismatch(
                f"data row {r} has {len(row)} cells, header has {len(header)}"
            )
        for j, name in enumerate(feature_names):
            out[r - 1, j] = _parse_float(row[positions[name]], r, name)
    return out


def _surface_payload(surface: ComponentSurface) -> dict:
    return {
        "intercepts": [float(p.intercept) for p in surface.pieces],
        "slopes": [[float(v) for v in p.slope] for p in surface.pieces],
    }


def save_model(model: IccnlsModel, path) -> None:
    """Serialize a fitted model as JSON.

    Floats go through Python's shortest round-trip repr (17 significant
    digits when needed), so load_model(save_model(m)) reproduces every
    coefficient exactly.
    """
    payload = {
        "version": MODEL_FORMAT_VERSION,
        "d": model.d,
        "feature_names": list(model.feature_names),
        "train_fingerprint": model.train_fingerprint,
        "config": model.config_used.to_dict(),
        "concave": _surface_payload(model.concave),
        "convex": _surface_payload(model.convex),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _surface_from_payload(payload, curvature: Curvature, d: int) -> ComponentSurface:
    intercepts = payload["intercepts"]
    slopes = payload["slopes"]
    if len(intercepts) != len(slopes):
        raise CorruptModel("intercept and slope lists disagree in length")
    pieces = []
    for a, beta in zip(intercepts, slopes):
        if len(beta) != d:
            raise CorruptModel(f"slope of width {len(beta)} in a d={d} model")
        pieces.append(AffinePiece(float(a), np.asarray(beta, dtype=float)))
    return ComponentSurface(curvature, tuple(pieces))


def load_model(path) -> IccnlsModel:
    """Load and validate a model JSON; raises CorruptModel on any mismatch."""
    p = Path(path)
    try:
        payload = json.loads(p.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CorruptModel(f"{path}: not readable as model JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise CorruptModel(f"{path}: top level is not an object")
    version = payload.get("version")
    if version != MODEL_FORMAT_VERSION:
        raise CorruptModel(
            f"{path}: version {version!r}, expected {MODEL_FORMAT_VERSION!r}"
        )
    required = {"d", "feature_names", "train_fingerprint", "config", "concave", "convex"}
    missing = required - payload.keys()
    if missing:
        raise CorruptModel(f"{path}: missing fields {sorted(missing)}")
    try:
        d = int(payload["d"])
        config = FitConfig(**payload["config"])
        concave = _surface_from_payload(payload["concave"], Curvature.CONCAVE, d)
        convex = _surface_from_payload(payload["convex"], Curvature.CONVEX, d)
        return IccnlsModel(
            concave=concave,
            convex=convex,
            d=d,
            train_fingerprint=str(payload["train_fingerprint"]),
            config_used=config,
            feature_names=tuple(str(s) for s in payload["feature_names"]),
        )
    except CorruptModel:
        raise
    except Exception as exc:
        raise CorruptModel(f"{path}: schema validation failed: {exc}") from exc
