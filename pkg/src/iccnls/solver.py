"""Two independent QP solvers sharing one contract.

``solve`` is the production path: an infeasible-start Mehrotra
predictor-corrector interior-point method on the reduced KKT system, with
static regularization, iterative refinement, and a final min-norm polish of
the detected active set. ``solve_reference`` is a dense active-set method for
small instances, kept algorithmically independent so the two can cross-check
each other.

Status semantics: Optimal means every tolerance condition below holds;
MaxIter returns the best iterate found; Infeasible is raised for an
inconsistent equality system (detected up front by rank/least-squares check).

Tolerance conditions at tolerance t for a point z with duals (mu, nu):
  max(A z - b)        <= t * (1 + max|b|)
  max|C z - e|        <= t * (1 + max|e|)
  max|P z + q + A'mu + C'nu| <= t * (1 + largest term magnitude)
  max_i s_i * mu_i    <= t * (1 + |objective|)
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.optimize
import scipy.sparse as sp

from .assembly import QpProblem, Variant
from .core import Curvature, SolverStatus
from .errors import InfeasibleProblem, TooLarge

_REFERENCE_TOL = 1e-9
_REFERENCE_MAX_VARS = 200
_REFERENCE_MAX_ROWS = 400
_POLISH_MAX_ROWS = 30000


@dataclass(frozen=True)
class Solution:
    """Solver output: the point, the duals, and convergence diagnostics."""

    point: np.ndarray
    ineq_duals: np.ndarray
    eq_duals: np.ndarray
    status: SolverStatus
    iterations: int
    primal_residual: float
    dual_residual: float
    objective_value: float


def _as_dense(mat) -> np.ndarray:
    if sp.issparse(mat):
        return mat.toarray()
    return np.asarray(mat, dtype=float)


def _stationarity(problem: QpProblem, z, mu, nu) -> tuple[float, float]:
    """Return (residual inf-norm, scale) of the stationarity condition."""
    terms = [problem.quad @ z, problem.lin]
    if problem.n_ineq:
        terms.append(problem.ineq_lhs.T @ mu)
    if problem.n_eq:
        terms.append(problem.eq_lhs.T @ nu)
    resid = np.sum(terms, axis=0)
    scale = 1.0 + max(np.abs(t).max(initial=0.0) for t in terms)
    return float(np.abs(resid).max(initial=0.0)), scale


def kkt_residuals(problem: QpProblem, candidate: Solution) -> dict:
    """Raw KKT residuals of a candidate solution.

    primal_inf: worst inequality violation / equality residual (0 if clean);
    dual_inf:   stationarity residual inf-norm;
    comp_slack: worst |slack_i * mu_i| complementarity product.
    """
    z, mu, nu = candidate.point, candidate.ineq_duals, candidate.eq_duals
    primal = 0.0
    comp = 0.0
    if problem.n_ineq:
        gap = problem.ineq_lhs @ z - problem.ineq_rhs
        primal = max(primal, float(gap.max(initial=0.0)))
        comp = float(np.abs(mu * gap).max(initial=0.0))
    if problem.n_eq:
        primal = max(primal, float(np.abs(problem.eq_lhs @ z - problem.eq_rhs).max()))
    dual, _ = _stationarity(problem, z, mu, nu)
    return {"primal_inf": primal, "dual_inf": dual, "comp_slack": comp}


def _normalized_merit(problem, z, s, mu, nu) -> float:
    """Worst normalized residual, used to rank iterates."""
    b, e = problem.ineq_rhs, problem.eq_rhs
    worst = 0.0
    if problem.n_ineq:
        viol = float((problem.ineq_lhs @ z - b).max(initial=0.0))
        worst = max(worst, viol / (1.0 + np.abs(b).max(initial=0.0)))
        obj = problem.objective_value(z)
        worst = max(worst, float(np.abs(s * mu).max(initial=0.0)) / (1.0 + abs(obj)))
    if problem.n_eq:
        worst = max(
            worst,
            float(np.abs(problem.eq_lhs @ z - e).max()) / (1.0 + np.abs(e).max(initial=0.0)),
        )
    dual, dual_scale = _stationarity(problem, z, mu, nu)
    return max(worst, dual / dual_scale)


def _tolerances_met(problem, z, s, mu, nu, tol) -> bool:
    return _normalized_merit(problem, z, s, mu, nu) <= tol


def _equality_consistent(C: np.ndarray, e: np.ndarray) -> tuple[bool, np.ndarray]:
    """Least-norm solution of C z = e and whether the system is consistent."""
    if C.shape[0] == 0:
        return True, np.zeros(C.shape[1])
    z, *_ = np.linalg.lstsq(C, e, rcond=None)
    ok = np.abs(C @ z - e).max() <= 1e-8 * (1.0 + np.abs(e).max(initial=0.0))
    return bool(ok), z


def _solution(problem, z, mu, nu, status, iterations) -> Solution:
    primal = 0.0
    if problem.n_ineq:
        primal = max(primal, float((problem.ineq_lhs @ z - problem.ineq_rhs).max(initial=0.0)))
    if problem.n_eq:
        primal = max(primal, float(np.abs(problem.eq_lhs @ z - problem.eq_rhs).max()))
    dual, _ = _stationarity(problem, z, mu, nu)
    return Solution(
        point=z,
        ineq_duals=mu,
        eq_duals=nu,
        status=status,
        iterations=iterations,
        primal_residual=max(primal, 0.0),
        dual_residual=dual,
        objective_value=problem.objective_value(z),
    )


def _solve_equality_qp(problem: QpProblem, tol: float) -> Solution:
    """Direct KKT solve when there are no inequalities."""
    P = _as_dense(problem.quad)
    q = problem.lin
    C = _as_dense(problem.eq_lhs)
    e = problem.eq_rhs
    m, s_eq = P.shape[0], C.shape[0]
    K = np.zeros((m + s_eq, m + s_eq))
    K[:m, :m] = P
    if s_eq:
        K[:m, m:] = C.T
        K[m:, :m] = C
    rhs = np.concatenate([-q, e])
    x, *_ = np.linalg.lstsq(K, rhs, rcond=None)
    z, nu = x[:m], x[m:]
    mu = np.zeros(0)
    ok = _tolerances_met(problem, z, np.zeros(0), mu, nu, tol)
    status = SolverStatus.OPTIMAL if ok else SolverStatus.MAX_ITER
    return _solution(problem, z, mu, nu, status, 1)


class _KktSolver:
    """Regularized dense KKT factorization with iterative refinement.

    The static shift delta keeps the factorization stable on the exactly
    singular gauge direction; refinement against the unregularized operator
    removes the perturbation. delta is scaled from the objective block (not
    the barrier-weighted block, which blows up near convergence) so it stays
    far below the smallest genuine curvature.
    """

    def __init__(self, M: np.ndarray, C: np.ndarray, delta: float):
        self.M = M
        self.C = C
        self.m = M.shape[0]
        self.s = C.shape[0]
        self.delta = delta
        self._factor()

    def _factor(self):
        n = self.m + self.s
        K = np.zeros((n, n))
        K[: self.m, : self.m] = self.M + self.delta * np.eye(self.m)
        if self.s:
            K[: self.m, self.m :] = self.C.T
            K[self.m :, : self.m] = self.C
            K[self.m :, self.m :] = -self.delta * np.eye(self.s)
        with warnings.catch_warnings():
            # an exactly singular factor is expected on the first try at some
            # iterates; the solve path detects it and escalates delta
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            self.lu = scipy.linalg.lu_factor(K, check_finite=False)

    def _apply_exact(self, x: np.ndarray) -> np.ndarray:
        xz, xn = x[: self.m], x[self.m :]
        top = self.M @ xz
        if self.s:
            top = top + self.C.T @ xn
            bottom = self.C @ xz
            return np.concatenate([top, bottom])
        return top

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        x = scipy.linalg.lu_solve(self.lu, rhs, check_finite=False)
        for attempt in range(3):
            if np.all(np.isfinite(x)):
                break
            self.delta *= 1e3
            self._factor()
            x = scipy.linalg.lu_solve(self.lu, rhs, check_finite=False)
        if not np.all(np.isfinite(x)):
            return x  # caller detects and bails out
        rhs_scale = 1.0 + np.abs(rhs).max(initial=0.0)
        for _ in range(4):
            res = rhs - self._apply_exact(x)
            if np.abs(res).max(initial=0.0) <= 1e-13 * rhs_scale:
                break
            corr = scipy.linalg.lu_solve(self.lu, res, check_finite=False)
            if not np.all(np.isfinite(corr)):
                break
            x = x + corr
        return x


def _max_step(v: np.ndarray, dv: np.ndarray) -> float:
    neg = dv < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-v[neg] / dv[neg]))


def _polish_candidates(problem: QpProblem, s, mu):
    """Candidate active-set masks, ordered from the most plausible.

    On degenerate faces slack and dual vanish together at the sqrt of the
    duality gap, so the classic mu > s test alone flips coins there; slack
    thresholds at several scales catch those rows, and validation inside the
    polish rejects over-eager masks.
    """
    base = mu > s
    scale = 1.0 + np.abs(problem.ineq_rhs).max(initial=0.0)
    masks = [base | (s <= 1e-4 * scale), base | (s <= 1e-6 * scale), base,
             base | (s <= 1e-2 * scale),
             # pure slack masks: mu > s over-selects when the objective is
             # large (comp products stay loose), these drop those rows
             s <= 1e-6 * scale, s <= 1e-8 * scale, s <= 1e-4 * scale]
    # fully tied face: on maximally degenerate problems every row is active
    # and no fixed slack threshold finds that from a half-converged iterate
    masks.append(np.ones(s.shape[0], dtype=bool))
    # adaptive cut at the largest relative jump of the sorted slacks, for
    # iterates whose own scale does not match any fixed threshold
    order = np.sort(s)
    ratios = order[1:] / np.maximum(order[:-1], 1e-300)
    if ratios.size and ratios.max() > 1e2:
        masks.append(s <= order[int(np.argmax(ratios))])
    seen = set()
    out = []
    for mask in masks:
        key = mask.tobytes()
        if key not in seen:
            seen.add(key)
            out.append(mask)
    return out


def _polish(problem: QpProblem, active: np.ndarray):
    """Re-solve the KKT system on one candidate active set, min-norm selection.

    Builds the null space of the active constraints through an
    eigendecomposition of G'G (cheap: variables x variables), solves the
    reduced equality QP by pseudo-inverse, and recovers min-norm duals from
    the same decomposition. Returns (z, mu, nu) or None when the candidate
    does not validate.
    """
    r, m = problem.n_ineq, problem.n_vars
    n_act = int(active.sum())
    if n_act + problem.n_eq > _POLISH_MAX_ROWS:
        return None
    A_act = _as_dense(problem.ineq_lhs[active]) if n_act else np.zeros((0, m))
    C = _as_dense(problem.eq_lhs)
    G = np.vstack([A_act, C])
    rhs = np.concatenate([problem.ineq_rhs[active], problem.eq_rhs])
    P = _as_dense(problem.quad)
    q = problem.lin

    if G.shape[0] == 0:
        z_pol, *_ = np.linalg.lstsq(P, -q, rcond=None)
        mu_pol = np.zeros(r)
        nu_pol = np.zeros(0)
    else:
        # eigendecomposition of G'G gives range/null split and the pseudo-inverse
        gtg = G.T @ G
        evals, evecs = np.linalg.eigh(gtg)
        cutoff = max(evals.max(initial=0.0), 1.0) * 1e-13
        nonzero = evals > cutoff
        inv_vals = np.where(nonzero, 1.0 / np.where(nonzero, evals, 1.0), 0.0)

        def gtg_pinv(v):
            return evecs @ (inv_vals * (evecs.T @ v))

        z_part = gtg_pinv(G.T @ rhs)
        if np.abs(G @ z_part - rhs).max(initial=0.0) > 1e-7 * (
            1.0 + np.abs(rhs).max(initial=0.0)
        ):
            return None
        N = evecs[:, ~nonzero]
        if N.shape[1]:
            Hr = N.T @ P @ N
            gr = N.T @ (P @ z_part + q)
            hvals, hvecs = np.linalg.eigh(Hr)
            hcut = max(hvals.max(initial=0.0), 1.0) * 1e-11
            hnz = hvals > hcut
            hinv = np.where(hnz, 1.0 / np.where(hnz, hvals, 1.0), 0.0)
            u = -hvecs @ (hinv * (hvecs.T @ gr))
            z_pol = z_part + N @ u
        else:
            z_pol = z_part
        g_pol = P @ z_pol + q
        w_mn = -(G @ gtg_pinv(g_pol))
        mu_act = w_mn[:n_act]
        dual_scale = 1.0 + np.abs(w_mn).max(initial=0.0)
        s_eq = C.shape[0]
        if mu_act.min(initial=0.0) >= -1e-6 * dual_scale:
            mu_pol = np.zeros(r)
            mu_pol[active] = np.maximum(mu_act, 0.0)
            nu_pol = w_mn[n_act:]
        else:
            # degenerate face: the min-norm dual picks negative entries even
            # when the cone holds a valid certificate, so refit with the sign
            # constraint (much slower, hence only as fallback and only at
            # sizes where it stays in the millisecond range)
            if m * (n_act + 2 * s_eq) > 300_000:
                return None
            cols = [A_act.T] if n_act else []
            if s_eq:
                cols.extend([C.T, -C.T])
            w, res = _reference_duals(np.hstack(cols), g_pol)
            if res > 1e-8 * (1.0 + np.abs(g_pol).max(initial=0.0)):
                return None
            mu_pol = np.zeros(r)
            mu_pol[active] = w[:n_act]
            nu_pol = (w[n_act : n_act + s_eq] - w[n_act + s_eq :]) if s_eq else np.zeros(0)

    if r:
        gap = problem.ineq_lhs @ z_pol - problem.ineq_rhs
        if gap.max(initial=0.0) > 1e-7 * (1.0 + np.abs(problem.ineq_rhs).max(initial=0.0)):
            return None
    if not np.all(np.isfinite(z_pol)):
        return None
    return z_pol, mu_pol, nu_pol


def solve(problem: QpProblem, tol: float = 1e-6, max_iter: int = 200, *, init=None) -> Solution:
    """Interior-point solve of one assembled QP.

    Deterministic for fixed inputs. ``init`` optionally sets the starting
    primal point (the path, not the answer, depends on it). Equality
    inconsistency raises InfeasibleProblem; hitting max_iter returns the best
    iterate with status MaxIter.
    """
    if tol <= 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    if max_iter <= 0:
        raise ValueError(f"max_iter must be a positive integer, got {max_iter}")
    m, r, s_eq = problem.n_vars, problem.n_ineq, problem.n_eq
    C_dense = _as_dense(problem.eq_lhs)
    consistent, z_eq = _equality_consistent(C_dense, problem.eq_rhs)
    if not consistent:
        raise InfeasibleProblem("equality system C z = e is inconsistent")
    if r == 0:
        return _solve_equality_qp(problem, tol)

    A = problem.ineq_lhs.tocsr()
    b = problem.ineq_rhs
    P = problem.quad.tocsr()
    P_dense = _as_dense(P)
    q = problem.lin
    e = problem.eq_rhs
    p_scale = 1.0 + np.abs(P_dense.diagonal()).max(initial=0.0)
    delta0 = 1e-12 * p_scale
    delta_z = 1e-10 * p_scale

    z = np.array(init, dtype=float) if init is not None else z_eq.copy()
    if z.shape != (m,):
        raise ValueError(f"init must have shape ({m},), got {z.shape}")
    slack0 = b - A @ z
    s = np.maximum(slack0, 1.0)
    mu = np.ones(r)
    nu = np.zeros(s_eq)

    best = (np.inf, z.copy(), s.copy(), mu.copy(), nu.copy())
    iterations = 0
    # once past tol, keep going while progress is cheap: extra accuracy is
    # what lets the polish detect the active set and snap tied pieces
    target = max(tol * 1e-4, 1e-12)
    prev_merit = np.inf
    stall = 0
    for iterations in range(max_iter + 1):
        merit = _normalized_merit(problem, z, s, mu, nu)
        if merit < best[0]:
            best = (merit, z.copy(), s.copy(), mu.copy(), nu.copy())
        if merit <= target:
            break
        if merit <= tol:
            stall = stall + 1 if merit > 0.5 * prev_merit else 0
            if stall >= 2:
                break
        prev_merit = merit
        if iterations == max_iter:
            break

        Az = A @ z
        r_p = Az + s - b
        r_e = (C_dense @ z - e) if s_eq else np.zeros(0)
        r_d = P @ z + q + A.T @ mu + (C_dense.T @ nu if s_eq else 0.0)
        gap = float(s @ mu) / r

        D = mu / s
        M = P_dense + (A.T @ sp.diags(D) @ A).toarray()
        # static primal shift: P can be flat along whole subspaces (lam = 0,
        # the constant-transfer direction), and solves with ill-conditioned D
        # otherwise leak runaway drift along them; the final active-set
        # polish recovers the accuracy this shift costs on tie directions
        M[np.diag_indices_from(M)] += delta_z
        kkt = _KktSolver(M, C_dense, delta0)

        def newton_step(r_c):
            rhs_z = -r_d - A.T @ (D * r_p - r_c / s)
            rhs = np.concatenate([rhs_z, -r_e])
            x = kkt.solve(rhs)
            dz, dnu = x[:m], x[m:]
            dmu = D * (A @ dz + r_p) - r_c / s
            ds = -(r_c + s * dmu) / mu
            return dz, ds, dmu, dnu

        # predictor
        r_c_aff = s * mu
        dz_a, ds_a, dmu_a, dnu_a = newton_step(r_c_aff)
        if not all(np.all(np.isfinite(v)) for v in (dz_a, ds_a, dmu_a)):
            break
        if max(np.abs(ds_a).max(), np.abs(dmu_a).max()) > 1e100:
            break  # direction is garbage; the cross term below would overflow
        alpha_p_aff = min(1.0, _max_step(s, ds_a))
        alpha_d_aff = min(1.0, _max_step(mu, dmu_a))
        gap_aff = float((s + alpha_p_aff * ds_a) @ (mu + alpha_d_aff * dmu_a)) / r
        sigma = float(np.clip((max(gap_aff, 0.0) / gap) ** 3, 1e-10, 1.0))

        # corrector; the cross term can poison the direction when the affine
        # step is heavily clipped, so fall back to pure centering if it
        # shortens the step
        r_c = s * mu + ds_a * dmu_a - sigma * gap
        dz, ds, dmu, dnu = newton_step(r_c)
        step_aff = min(1.0, _max_step(s, ds_a), _max_step(mu, dmu_a))
        step_corr = min(1.0, _max_step(s, ds), _max_step(mu, dmu))
        if step_corr < 0.5 * step_aff:
            r_c = s * mu - sigma * gap
            dz, ds, dmu, dnu = newton_step(r_c)
        if not all(np.all(np.isfinite(v)) for v in (dz, ds, dmu, dnu)):
            break
        eta = min(0.99995, max(0.995, 1.0 - gap))
        alpha_p = min(1.0, eta * _max_step(s, ds))
        alpha_d = min(1.0, eta * _max_step(mu, dmu))
        z = z + alpha_p * dz
        s = np.maximum(s + alpha_p * ds, 1e-300)
        mu = np.maximum(mu + alpha_d * dmu, 1e-300)
        nu = nu + alpha_d * dnu

    merit, z, s, mu, nu = best
    for mask in _polish_candidates(problem, s, mu):
        polished = _polish(problem, mask)
        if polished is None:
            continue
        z_p, mu_p, nu_p = polished
        s_p = np.maximum(problem.ineq_rhs - problem.ineq_lhs @ z_p, 0.0)
        merit_p = _normalized_merit(problem, z_p, s_p, mu_p, nu_p)
        if merit_p <= merit:
            z, s, mu, nu, merit = z_p, s_p, mu_p, nu_p, merit_p
        if merit <= 1e-12:
            break
    status = SolverStatus.OPTIMAL if merit <= tol else SolverStatus.MAX_ITER
    return _solution(problem, z, mu, nu, status, iterations)


# ---------------------------------------------------------------------------
# dense active-set reference


def _reference_feasible_start(problem: QpProblem, A, b, C, e) -> np.ndarray:
    """Feasible point for the active-set method.

    Assembled problems admit cheap starts: the all-zero point when there are
    no equalities (every piece identically zero), otherwise the equal-pieces
    least-squares start reconstructed from the orthogonality rows themselves
    (their columns carry the feature values). A projection loop covers
    layout-free problems.
    """
    m = A.shape[1]
    tol_f = 1e-10

    def feasible(z):
        ok_ineq = (A @ z - b).max(initial=0.0) <= tol_f * (1.0 + np.abs(b).max(initial=0.0))
        ok_eq = True
        if C.shape[0]:
            ok_eq = np.abs(C @ z - e).max() <= tol_f * (1.0 + np.abs(e).max(initial=0.0))
        return ok_ineq and ok_eq

    z = np.zeros(m)
    if feasible(z):
        return z

    layout = problem.layout
    if (
        layout is not None
        and layout.variant is Variant.ICCNLS
        and C.shape[0] == layout.d + 1
    ):
        # recover the feature matrix from the orthogonality columns
        alpha_cols = layout.alpha_col(Curvature.CONCAVE, np.arange(layout.n))
        U = C[:, alpha_cols].T  # (n, d+1): rows [1, x_i]
        theta, *_ = np.linalg.lstsq(U.T @ U, e, rcond=None)
        z = np.zeros(m)
        all_i = np.arange(layout.n)
        z[layout.alpha_col(Curvature.CONCAVE, all_i)] = theta[0]
        slopes = theta[1:]
        if layout.use_l1_split:
            pos = np.maximum(slopes, 0.0)
            neg = np.maximum(-slopes, 0.0)
            z[layout.slope_pos_cols(Curvature.CONCAVE, all_i)] = pos
            z[layout.slope_neg_cols(Curvature.CONCAVE, all_i)] = neg
        else:
            z[layout.slope_cols(Curvature.CONCAVE, all_i)] = slopes
        if feasible(z):
            return z

    # generic projection fallback: eliminate equalities, project onto the
    # most violated halfspace until feasible
    consistent, z_part = _equality_consistent(C, e)
    if not consistent:
        raise InfeasibleProblem("equality system C z = e is inconsistent")
    if C.shape[0]:
        N = scipy.linalg.null_space(C)
    else:
        z_part = np.zeros(m)
        N = np.eye(m)
    if N.shape[1] == 0:
        if feasible(z_part):
            return z_part
        raise InfeasibleProblem("equalities pin the point but inequalities exclude it")
    A_red = A @ N
    b_red = b - A @ z_part
    u = np.zeros(N.shape[1])
    norms = np.einsum("ij,ij->i", A_red, A_red)
    for _ in range(5000):
        viol = A_red @ u - b_red
        worst = int(np.argmax(viol))
        if viol[worst] <= tol_f * (1.0 + np.abs(b).max(initial=0.0)):
            return z_part + N @ u
        if norms[worst] <= 0:
            raise InfeasibleProblem("constraint row is zero but its bound excludes 0")
        u = u - (viol[worst] / norms[worst]) * A_red[worst]
    raise InfeasibleProblem("no feasible point located (problem may be infeasible)")


def _reference_duals(G_act_t, g):
    """Sign-constrained stationarity fit: min ||G' w + g|| with mu >= 0.

    Columns of G_act_t are [A_active' | C' | -C'] so equality duals stay
    free while inequality duals are nonnegative. Returns (w, residual).
    """
    if G_act_t.shape[1] == 0:
        return np.zeros(0), float(np.linalg.norm(g))
    try:
        w, res = scipy.optimize.nnls(G_act_t, -g)
    except RuntimeError:  # iteration cap, no certificate obtained
        return np.zeros(G_act_t.shape[1]), np.inf
    return w, float(res)


def solve_reference(problem: QpProblem) -> Solution:
    """Dense active-set solve at tolerance 1e-9 for small problems.

    Working-set iteration with the reduced equality QP solved through a
    null-space eigendecomposition (pseudo-inverse on flat directions, which
    canonicalizes degenerate steps), nonnegative-least-squares optimality
    certification, and most-negative-multiplier drops. Raises TooLarge beyond
    200 variables / 400 inequality rows.
    """
    m, r, s_eq = problem.n_vars, problem.n_ineq, problem.n_eq
    if m > _REFERENCE_MAX_VARS or r > _REFERENCE_MAX_ROWS:
        raise TooLarge(
            f"reference solver handles <= {_REFERENCE_MAX_VARS} variables and "
            f"<= {_REFERENCE_MAX_ROWS} inequality rows, got {m} / {r}"
        )
    P = _as_dense(problem.quad)
    q = problem.lin
    A = _as_dense(problem.ineq_lhs)
    b = problem.ineq_rhs
    C = _as_dense(problem.eq_lhs)
    e = problem.eq_rhs
    tol = _REFERENCE_TOL

    consistent, _ = _equality_consistent(C, e)
    if not consistent:
        raise InfeasibleProblem("equality system C z = e is inconsistent")

    z = _reference_feasible_start(problem, A, b, C, e)
    work: list[int] = []
    seen: set[frozenset] = set()
    max_pass = 200 * (m + r + 1) if r else 50
    status = SolverStatus.MAX_ITER
    mu = np.zeros(r)
    nu = np.zeros(s_eq)
    passes = 0

    for passes in range(1, max_pass + 1):
        g = P @ z + q
        G_W = np.vstack([A[work], C]) if (work or s_eq) else np.zeros((0, m))
        N = scipy.linalg.null_space(G_W) if G_W.shape[0] else np.eye(m)

        if N.shape[1] == 0:
            p = np.zeros(m)
        elif np.abs(N.T @ g).max() <= 1e-10 * (1.0 + np.abs(g).max(initial=0.0)):
            # reduced gradient already vanishes: the Newton step on barely
            # curved directions (curvature ~ ridge scale) would only amplify
            # roundoff into jitter that never passes the step-length test
            p = np.zeros(m)
        else:
            Hr = N.T @ P @ N
            gr = N.T @ g
            hvals, hvecs = np.linalg.eigh(Hr)
            hcut = max(hvals.max(initial=0.0), 1.0) * 1e-12
            flat = hvals <= hcut
            g_tilde = hvecs.T @ gr
            flat_grad = np.where(flat, g_tilde, 0.0)
            if np.abs(flat_grad).max(initial=0.0) > 1e-10 * (1.0 + np.abs(g).max(initial=0.0)):
                # zero-curvature descent: ray step until blocked
                u = -hvecs @ flat_grad
                p = N @ u
                ap = A @ p
                moving = ap > 1e-13 * (1.0 + np.abs(ap).max(initial=0.0))
                moving[work] = False
                if not np.any(moving):
                    raise InfeasibleProblem(
                        "objective unbounded below on the feasible set"
                    )
                steps = (b[moving] - A[moving] @ z) / ap[moving]
                steps = np.maximum(steps, 0.0)
                alpha = steps.min()
                block = np.flatnonzero(moving)[int(np.argmin(steps))]
                z = z + alpha * p
                work.append(int(block))
                continue
            hinv = np.where(flat, 0.0, 1.0 / np.where(flat, 1.0, hvals))
            u = -hvecs @ (hinv * g_tilde)
            p = N @ u

        if np.abs(p).max(initial=0.0) <= 1e-11 * (1.0 + np.abs(z).max(initial=0.0)):
            # candidate stationary point on the working set: certify or drop
            cols = [A[work].T] if work else []
            if s_eq:
                cols.extend([C.T, -C.T])
            G_act_t = np.hstack(cols) if cols else np.zeros((m, 0))
            w, res = _reference_duals(G_act_t, g)
            if res <= max(tol * (1.0 + np.abs(g).max(initial=0.0)), 1e-11):
                k = len(work)
                mu = np.zeros(r)
                if k:
                    mu[np.array(work, dtype=int)] = w[:k]
                nu = (w[k : k + s_eq] - w[k + s_eq :]) if s_eq else np.zeros(0)
                status = SolverStatus.OPTIMAL
                break
            if not work:
                break  # stationarity unreachable without inequality duals
            lam, *_ = np.linalg.lstsq(np.vstack([A[work], C]).T, -g, rcond=None)
            mu_work = lam[: len(work)]
            worst = int(np.argmin(mu_work))
            if mu_work[worst] >= -1e-11 * (1.0 + np.abs(lam).max(initial=0.0)):
                break  # numerically stuck: report MaxIter honestly
            key = frozenset(work)
            work.pop(worst)
            if frozenset(work) in seen:
                break
            seen.add(key)
            continue

        ap = A @ p
        candidates = ap > 1e-13 * (1.0 + np.abs(ap).max(initial=0.0))
        if work:
            candidates[np.array(work, dtype=int)] = False
        if np.any(candidates):
            num = np.maximum(b[candidates] - A[candidates] @ z, 0.0)
            steps = num / ap[candidates]
            alpha = min(1.0, steps.min())
            if steps.min() < 1.0:
                block = np.flatnonzero(candidates)[int(np.argmin(steps))]
                work.append(int(block))
        else:
            alpha = 1.0
        z = z + alpha * p

    return _solution(problem, z, mu, nu, status, iterations=passes)
