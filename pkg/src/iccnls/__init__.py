"""Shape-constrained least squares with concave + convex decompositions.

Fits piecewise-affine regression functions under pairwise support
constraints: a single convex fit, a monotone concave + convex decomposition,
and an identified decomposition pinned down by residual orthogonality.
Includes elastic-net subgradient regularization, envelope prediction,
certification diagnostics, CSV/model IO, and a CLI (``iccnls``).
"""

from .assembly import (
    QpProblem,
    VariableLayout,
    Variant,
    assemble_objective,
    assemble_orthogonality_block,
    assemble_qp,
    assemble_shape_block,
    observation_matrix,
)
from .core import (
    AffinePiece,
    ComponentSurface,
    Curvature,
    Dataset,
    FitConfig,
    FitReport,
    IccnlsModel,
    SolverStatus,
    validate_dataset,
)
from .data_io import (
    ColumnRole,
    ColumnSpec,
    generate_synthetic,
    load_csv,
    load_model,
    load_points_csv,
    save_model,
    write_dataset_csv,
)
from .diagnostics import (
    GaugeComparison,
    OrthogonalityCertificate,
    ShapeCertificate,
    certify_orthogonality,
    certify_shape,
    gauge_compare,
)
from .errors import (
    CorruptModel,
    DimensionMismatch,
    EmptyFile,
    EmptyInput,
    FingerprintMismatch,
    IccnlsError,
    IndexMisalignment,
    InfeasibleProblem,
    MissingColumn,
    NonFiniteValue,
    SolverFailed,
    TooLarge,
    UnparsableNumeric,
    UnsupportedCombination,
)
from .estimators import SweepRow, fit_cnls, fit_iccnls, fit_mnls, sweep
from .metrics import (
    component_hyperplane_counts,
    count_hyperplanes,
    count_surface_hyperplanes,
    dispersion_ratio,
    mae,
    rmse,
)
from .prediction import (
    eval_concave,
    eval_convex,
    predict,
    predict_batch,
    predict_cnls,
    surface_values,
)
from .solver import Solution, kkt_residuals, solve, solve_reference

__version__ = "0.1.0"

__all__ = [
    "AffinePiece",
    "ColumnRole",
    "ColumnSpec",
    "ComponentSurface",
    "CorruptModel",
    "Curvature",
    "Dataset",
    "DimensionMismatch",
    "EmptyFile",
    "EmptyInput",
    "FingerprintMismatch",
    "FitConfig",
    "FitReport",
    "GaugeComparison",
    "IccnlsError",
    "IccnlsModel",
    "IndexMisalignment",
    "InfeasibleProblem",
    "MissingColumn",
    "NonFiniteValue",
    "OrthogonalityCertificate",
    "QpProblem",
    "ShapeCertificate",
    "Solution",
    "SolverFailed",
    "SolverStatus",
    "SweepRow",
    "TooLarge",
    "UnparsableNumeric",
    "UnsupportedCombination",
    "VariableLayout",
    "Variant",
    "assemble_objective",
    "assemble_orthogonality_block",
    "assemble_qp",
    "assemble_shape_block",
    "certify_orthogonality",
    "certify_shape",
    "component_hyperplane_counts",
    "count_hyperplanes",
    "count_surface_hyperplanes",
    "dispersion_ratio",
    "eval_concave",
    "eval_convex",
    "fit_cnls",
    "fit_iccnls",
    "fit_mnls",
    "gauge_compare",
    "generate_synthetic",
    "kkt_residuals",
    "load_csv",
    "load_model",
    "load_points_csv",
    "mae",
    "observation_matrix",
    "predict",
    "predict_batch",
    "predict_cnls",
    "rmse",
    "save_model",
    "solve",
    "solve_reference",
    "surface_values",
    "sweep",
    "validate_dataset",
    "write_dataset_csv",
]
