"""Quadratic-program assembly for the shape-constrained least-squares fits.

Conventions fixed here and relied on everywhere else:

* objective value = 0.5 * z' Q z + lin' z + constant, with the constant
  (sum of squared targets) carried separately so reported objectives are the
  true sum of squares plus penalties;
* inequalities are A z <= b, equalities C z = e;
* per observation i the fit carries one affine piece per component, and with
  an l1 term active each slope is split as beta = beta_pos - beta_neg with
  both halves nonnegative (the split replaces the plain slope variables);
* inequality rows are stacked as: shape rows per component (components in
  layout order, pairs (i, h) with i major and h ascending, h != i), then
  gradient-sign rows, then split nonnegativity rows.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .core import Curvature, Dataset, FitConfig
from .errors import UnsupportedCombination


class Variant(str, enum.Enum):
    CNLS = "cnls"
    MNLS = "mnls"
    ICCNLS = "iccnls"


@dataclass(frozen=True)
class VariableLayout:
    """Flat indexing of the QP variables.

    Per component, observation i occupies a contiguous block starting at
    ``component_offset + i * piece_width``: the intercept first, then either
    the d slope entries or, in split form, d positive parts followed by
    d negative parts.
    """

    variant: Variant
    n: int
    d: int
    use_l1_split: bool

    @property
    def components(self) -> tuple[Curvature, ...]:
        if self.variant is Variant.CNLS:
            return (Curvature.CONVEX,)
        return (Curvature.CONCAVE, Curvature.CONVEX)

    @property
    def piece_width(self) -> int:
        return 1 + (2 * self.d if self.use_l1_split else self.d)

    @property
    def total_vars(self) -> int:
        return len(self.components) * self.n * self.piece_width

    def component_offset(self, curvature: Curvature) -> int:
        comps = self.components
        if curvature not in comps:
            raise UnsupportedCombination(
                f"layout for {self.variant.value} has no {curvature.value} component"
            )
        return comps.index(curvature) * self.n * self.piece_width

    def alpha_col(self, curvature: Curvature, i):
        return self.component_offset(curvature) + np.asarray(i) * self.piece_width

    def slope_cols(self, curvature: Curvature, i):
        """Plain slope columns; only meaningful without the split."""
        if self.use_l1_split:
            raise UnsupportedCombination("split layout has no plain slope columns")
        base = self.alpha_col(curvature, i)
        return np.asarray(base)[..., None] + 1 + np.arange(self.d)

    def slope_pos_cols(self, curvature: Curvature, i):
        if not self.use_l1_split:
            raise UnsupportedCombination("plain layout has no split slope columns")
        base = self.alpha_col(curvature, i)
        return np.asarray(base)[..., None] + 1 + np.arange(self.d)

    def slope_neg_cols(self, curvature: Curvature, i):
        if not self.use_l1_split:
            raise UnsupportedCombination("plain layout has no split slope columns")
        base = self.alpha_col(curvature, i)
        return np.asarray(base)[..., None] + 1 + self.d + np.arange(self.d)

    def piece_indices(self, curvature: Curvature, i: int) -> dict:
        """Index map for one observation's piece in one component."""
        entry = {"alpha": int(self.alpha_col(curvature, i))}
        if self.use_l1_split:
            entry["beta_pos"] = [int(c) for c in self.slope_pos_cols(curvature, i).ravel()]
            entry["beta_neg"] = [int(c) for c in self.slope_neg_cols(curvature, i).ravel()]
        else:
            entry["beta"] = [int(c) for c in self.slope_cols(curvature, i).ravel()]
        return entry

    def all_slope_cols_flat(self) -> np.ndarray:
        """Every slope-carrying column (both split halves when split)."""
        cols = []
        all_i = np.arange(self.n)
        for curv in self.components:
            if self.use_l1_split:
                cols.append(self.slope_pos_cols(curv, all_i).ravel())
                cols.append(self.slope_neg_cols(curv, all_i).ravel())
            else:
                cols.append(self.slope_cols(curv, all_i).ravel())
        return np.concatenate(cols)

    def net_slopes(self, curvature: Curvature, z: np.ndarray) -> np.ndarray:
        """(n, d) slope matrix of a component, collapsing the split if present."""
        all_i = np.arange(self.n)
        if self.use_l1_split:
            pos = z[self.slope_pos_cols(curvature, all_i)]
            neg = z[self.slope_neg_cols(curvature, all_i)]
            return pos - neg
        return z[self.slope_cols(curvature, all_i)]

    def intercepts(self, curvature: Curvature, z: np.ndarray) -> np.ndarray:
        return z[self.alpha_col(curvature, np.arange(self.n))]


@dataclass(frozen=True)
class QpProblem:
    """One assembled QP in the conventions of this module."""

    quad: sp.csr_matrix
    lin: np.ndarray
    ineq_lhs: sp.csr_matrix
    ineq_rhs: np.ndarray
    eq_lhs: sp.csr_matrix
    eq_rhs: np.ndarray
    layout: Optional[VariableLayout]
    constant: float = 0.0

    @property
    def n_vars(self) -> int:
        return self.quad.shape[0]

    @property
    def n_ineq(self) -> int:
        return self.ineq_lhs.shape[0]

    @property
    def n_eq(self) -> int:
        return self.eq_lhs.shape[0]

    def objective_value(self, z: np.ndarray) -> float:
        return float(0.5 * z @ (self.quad @ z) + self.lin @ z + self.constant)


def _pair_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    # all ordered pairs (i, h), i != h, i major, h ascending
    grid = np.tile(np.arange(n), (n, 1))
    mask = ~np.eye(n, dtype=bool)
    h = grid[mask]
    i = np.repeat(np.arange(n), n - 1)
    return i, h


def _slope_entries(layout, curvature, rows, obs, coeff, cols_acc, rows_acc, vals_acc):
    """Append slope-term entries coeff * beta_obs[j] for each j, split-aware."""
    d = layout.d
    if layout.use_l1_split:
        pos = layout.slope_pos_cols(curvature, obs)
        neg = layout.slope_neg_cols(curvature, obs)
        for j in range(d):
            rows_acc.append(rows)
            cols_acc.append(pos[:, j])
            vals_acc.append(coeff[:, j])
            rows_acc.append(rows)
            cols_acc.append(neg[:, j])
            vals_acc.append(-coeff[:, j])
    else:
        cols = layout.slope_cols(curvature, obs)
        for j in range(d):
            rows_acc.append(rows)
            cols_acc.append(cols[:, j])
            vals_acc.append(coeff[:, j])


def assemble_shape_block(dataset: Dataset, curvature: Curvature, layout: VariableLayout):
    """Pairwise envelope-support rows for one component, as (A, b) with A z <= b.

    Convex rows say piece_h evaluated at x_i never rises above piece_i there
    (so each point's own piece attains the upper envelope); concave rows are
    the same pattern with the opposite sign. Row (i, h) sits at index
    i * (n - 1) + rank of h among 0..n-1 with i removed.
    """
    n, d = dataset.n, dataset.d
    i_idx, h_idx = _pair_indices(n)
    m_rows = i_idx.size
    sign = 1.0 if curvature is Curvature.CONVEX else -1.0
    rows_acc, cols_acc, vals_acc = [], [], []
    r = np.arange(m_rows)
    ones = np.full(m_rows, sign)

    rows_acc.append(r)
    cols_acc.append(layout.alpha_col(curvature, h_idx))
    vals_acc.append(ones)
    rows_acc.append(r)
    cols_acc.append(layout.alpha_col(curvature, i_idx))
    vals_acc.append(-ones)

    coeff = sign * dataset.features[i_idx]  # (m_rows, d), evaluated at x_i
    _slope_entries(layout, curvature, r, h_idx, coeff, cols_acc, rows_acc, vals_acc)
    _slope_entries(layout, curvature, r, i_idx, -coeff, cols_acc, rows_acc, vals_acc)

    A = sp.coo_matrix(
        (np.concatenate(vals_acc), (np.concatenate(rows_acc), np.concatenate(cols_acc))),
        shape=(m_rows, layout.total_vars),
    ).tocsr()
    return A, np.zeros(m_rows)


def observation_matrix(dataset: Dataset, layout: VariableLayout) -> sp.csr_matrix:
    """Sparse (n, total_vars) map from z to fitted values f(x_i)."""
    n, d = dataset.n, dataset.d
    rows_acc, cols_acc, vals_acc = [], [], []
    r = np.arange(n)
    for curv in layout.components:
        rows_acc.append(r)
        cols_acc.append(layout.alpha_col(curv, r))
        vals_acc.append(np.ones(n))
        _slope_entries(layout, curv, r, r, dataset.features, cols_acc, rows_acc, vals_acc)
    return sp.coo_matrix(
        (np.concatenate(vals_acc), (np.concatenate(rows_acc), np.concatenate(cols_acc))),
        shape=(n, layout.total_vars),
    ).tocsr()


def assemble_orthogonality_block(dataset: Dataset, layout: VariableLayout):
    """Residual-orthogonality equalities with the residuals eliminated.

    Row 0 fixes sum_i f(x_i) = sum_i y_i; row j fixes the x_j-weighted sums.
    Together they say the residual vector is orthogonal to the affine
    regressors, which is what identifies the additive decomposition.
    """
    if layout.variant is not Variant.ICCNLS:
        raise UnsupportedCombination(
            "orthogonality rows only apply to the identified two-component fit"
        )
    W = observation_matrix(dataset, layout)
    U = np.column_stack([np.ones(dataset.n), dataset.features])  # (n, d+1)
    C = sp.csr_matrix(U.T @ W)
    e = U.T @ dataset.target
    return C, e


def _elasticnet_quad_entries(layout, weight, rows_acc, cols_acc, vals_acc):
    """Quadratic entries of weight * sum_i ||beta_i||_2^2 on the net slopes."""
    all_i = np.arange(layout.n)
    for curv in layout.components:
        if layout.use_l1_split:
            pos = layout.slope_pos_cols(curv, all_i).ravel()
            neg = layout.slope_neg_cols(curv, all_i).ravel()
            k = pos.size
            rows_acc.extend([pos, neg, pos, neg])
            cols_acc.extend([pos, neg, neg, pos])
            vals_acc.extend(
                [
                    np.full(k, 2.0 * weight),
                    np.full(k, 2.0 * weight),
                    np.full(k, -2.0 * weight),
                    np.full(k, -2.0 * weight),
                ]
            )
        else:
            cols = layout.slope_cols(curv, all_i).ravel()
            rows_acc.append(cols)
            cols_acc.append(cols)
            vals_acc.append(np.full(cols.size, 2.0 * weight))


def assemble_objective(dataset: Dataset, config: FitConfig, layout: VariableLayout):
    """Return (quad, lin, constant) for SSE plus the configured penalty.

    SSE expands to 0.5 z' (2 W'W) z - 2 y'W z + y'y. The l2 part of the
    penalty acts on the net slopes (beta_pos - beta_neg under the split);
    the l1 part is the linear coefficient lam * mix on every split half.
    """
    if config.lam * config.mix > 0 and not layout.use_l1_split:
        raise UnsupportedCombination(
            "an l1 or elastic-net term requires the split slope layout"
        )
    W = observation_matrix(dataset, layout)
    y = dataset.target
    quad = (2.0 * (W.T @ W)).tocoo()
    lin = -2.0 * (W.T @ y)
    constant = float(y @ y)

    rows_acc = [quad.row]
    cols_acc = [quad.col]
    vals_acc = [quad.data]
    l2_weight = config.lam * (1.0 - config.mix)
    if l2_weight > 0:
        _elasticnet_quad_entries(layout, l2_weight, rows_acc, cols_acc, vals_acc)
    l1_weight = config.lam * config.mix
    if l1_weight > 0:
        all_i = np.arange(layout.n)
        for curv in layout.components:
            lin[layout.slope_pos_cols(curv, all_i).ravel()] += l1_weight
            lin[layout.slope_neg_cols(curv, all_i).ravel()] += l1_weight

    m = layout.total_vars
    quad = sp.coo_matrix(
        (np.concatenate(vals_acc), (np.concatenate(rows_acc), np.concatenate(cols_acc))),
        shape=(m, m),
    ).tocsr()
    return quad, lin, constant


def _sign_rows(layout: VariableLayout):
    """Gradient-sign rows -beta_ij <= 0 for every component, observation, axis."""
    rows_acc, cols_acc, vals_acc = [], [], []
    all_i = np.arange(layout.n)
    nd = layout.n * layout.d
    base = 0
    for curv in layout.components:
        r = base + np.arange(nd)
        if layout.use_l1_split:
            pos = layout.slope_pos_cols(curv, all_i).ravel()
            neg = layout.slope_neg_cols(curv, all_i).ravel()
            rows_acc.extend([r, r])
            cols_acc.extend([pos, neg])
            vals_acc.extend([np.full(nd, -1.0), np.full(nd, 1.0)])
        else:
            cols = layout.slope_cols(curv, all_i).ravel()
            rows_acc.append(r)
            cols_acc.append(cols)
            vals_acc.append(np.full(nd, -1.0))
        base += nd
    A = sp.coo_matrix(
        (np.concatenate(vals_acc), (np.concatenate(rows_acc), np.concatenate(cols_acc))),
        shape=(base, layout.total_vars),
    ).tocsr()
    return A, np.zeros(base)


def _split_nonneg_rows(layout: VariableLayout):
    """-beta_pos <= 0 and -beta_neg <= 0, one row per split variable."""
    cols = []
    all_i = np.arange(layout.n)
    for curv in layout.components:
        cols.append(layout.slope_pos_cols(curv, all_i).ravel())
        cols.append(layout.slope_neg_cols(curv, all_i).ravel())
    cols = np.concatenate(cols)
    m_rows = cols.size
    A = sp.coo_matrix(
        (np.full(m_rows, -1.0), (np.arange(m_rows), cols)),
        shape=(m_rows, layout.total_vars),
    ).tocsr()
    return A, np.zeros(m_rows)


def _filter_redundant_equalities(C: sp.csr_matrix, e: np.ndarray):
    """Drop equality rows linearly dependent on earlier ones (with a warning).

    A dependent row is only dropped when its right-hand side matches the
    implied combination, so genuine inconsistency still reaches the solver.
    """
    dense = C.toarray()
    keep: list[int] = []
    for j in range(dense.shape[0]):
        if not keep:
            independent = np.linalg.norm(dense[j]) > 0
        else:
            kept = dense[keep]
            rank_before = np.linalg.matrix_rank(kept)
            rank_after = np.linalg.matrix_rank(np.vstack([kept, dense[j]]))
            independent = rank_after > rank_before
        if independent:
            keep.append(j)
            continue
        if keep:
            coef, *_ = np.linalg.lstsq(dense[keep].T, dense[j], rcond=None)
            implied = coef @ e[keep]
        else:
            implied = 0.0
        scale = 1.0 + np.abs(e).max(initial=0.0)
        if abs(implied - e[j]) <= 1e-9 * scale:
            warnings.warn(
                f"dropping redundant equality row {j} (linearly dependent)",
                stacklevel=3,
            )
        else:
            keep.append(j)  # inconsistent duplicate: keep, let the solver flag it
    if len(keep) == dense.shape[0]:
        return C, e
    return sp.csr_matrix(dense[keep]), e[keep]


def assemble_qp(dataset: Dataset, config: FitConfig, variant: Variant) -> QpProblem:
    """Assemble the full QP for one fit variant under one configuration.

    The split layout is used exactly when lam * mix > 0. Gradient-sign rows
    appear for the monotone variant (always) or when config.monotone is set.
    For the identified fit with lam == 0, a gauge ridge of weight
    config.gauge_ridge is added on the slope diagonal so the decomposition
    gauge does not drift; fitted values are unaffected beyond solver
    tolerance.
    """
    use_split = config.lam * config.mix > 0
    layout = VariableLayout(variant, dataset.n, dataset.d, use_split)

    blocks = [assemble_shape_block(dataset, curv, layout) for curv in layout.components]
    if variant is Variant.MNLS or config.monotone:
        blocks.append(_sign_rows(layout))
    if use_split:
        blocks.append(_split_nonneg_rows(layout))
    ineq_lhs = sp.vstack([a for a, _ in blocks], format="csr")
    ineq_rhs = np.concatenate([b for _, b in blocks])

    if variant is Variant.ICCNLS:
        eq_lhs, eq_rhs = assemble_orthogonality_block(dataset, layout)
        eq_lhs, eq_rhs = _filter_redundant_equalities(eq_lhs, eq_rhs)
    else:
        eq_lhs = sp.csr_matrix((0, layout.total_vars))
        eq_rhs = np.zeros(0)

    quad, lin, constant = assemble_objective(dataset, config, layout)
    if variant is Variant.ICCNLS and config.lam == 0 and config.gauge_ridge > 0:
        ridge = sp.coo_matrix(quad.shape)
        rows_acc, cols_acc, vals_acc = [], [], []
        _elasticnet_quad_entries(layout, config.gauge_ridge, rows_acc, cols_acc, vals_acc)
        ridge = sp.coo_matrix(
            (np.concatenate(vals_acc), (np.concatenate(rows_acc), np.concatenate(cols_acc))),
            shape=quad.shape,
        )
        quad = (quad + ridge.tocsr()).tocsr()

    return QpProblem(
        quad=quad,
        lin=lin,
        ineq_lhs=ineq_lhs,
        ineq_rhs=ineq_rhs,
        eq_lhs=eq_lhs,
        eq_rhs=eq_rhs,
        layout=layout,
        constant=constant,
    )
