"""Weighted linear models on feature vectors.

OLS and Ridge go through dense solves; LASSO is cyclic coordinate descent
with soft-thresholding; the two-step estimator runs LASSO for support
selection and refits OLS on the selected columns (plus the constant feature,
index 0, which is never penalized).

Objective conventions, used consistently by the solver, `lasso_lambda_max`
and the KKT helpers:

    OLS    minimizes  sum_t w_t (y_t - f_t . theta)^2
    Ridge  adds       + lam * ||theta||_2^2           (all coordinates)
    LASSO  minimizes  (1/2) sum_t w_t (y_t - f_t . theta)^2
                      + lam * sum_{j penalized} |theta_j|

With the 1/2 factor, lam_max is exactly the largest absolute weighted
covariance between a penalized column and the unpenalized-fit residual, and
the off-support KKT bound is |sum_t w_t f_tj r_t| <= lam.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
import scipy.linalg

from .errors import ConvergenceError, RankDeficientError
from .sig_kernel import WeightVector

CD_TOL = 1e-8
CD_MAX_SWEEPS = 10_000


@dataclass(frozen=True)
class WeightedDesign:
    """Feature matrix, targets and per-sample weights for one regression.

    Weights must be nonnegative with a positive sum; pipeline-built designs
    carry softmax weights summing to 1, but any positive scale is accepted
    (the fits are invariant to a common weight scale with lam co-scaled).
    """

    features: np.ndarray
    targets: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        X = np.asarray(self.features, dtype=np.float64)
        y = np.asarray(self.targets, dtype=np.float64)
        w = self.weights
        if isinstance(w, WeightVector):
            w = w.weights
        w = np.asarray(w, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError(f"features must be 2-d, got shape {X.shape}")
        if y.shape != (X.shape[0],) or w.shape != (X.shape[0],):
            raise ValueError(
                f"row mismatch: features {X.shape}, targets {y.shape}, weights {w.shape}"
            )
        if np.any(w < 0) or w.sum() <= 0:
            raise ValueError("weights must be nonnegative with a positive sum")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y)) and np.all(np.isfinite(w))):
            raise ValueError("design entries must be finite")
        for name, arr in (("features", X), ("targets", y), ("weights", w)):
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class LinearModelFit:
    """Fitted coefficients with their support and training metadata.

    weighted_loss is the unpenalized weighted sum of squared residuals at the
    returned coefficients (comparable across model kinds); penalized
    objective values live in meta.
    """

    coefficients: np.ndarray
    support: tuple[int, ...]
    model_kind: str
    lam: float
    weighted_loss: float
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        theta = np.asarray(self.coefficients, dtype=np.float64).copy()
        theta.flags.writeable = False
        object.__setattr__(self, "coefficients", theta)
        object.__setattr__(self, "support", tuple(int(i) for i in self.support))


def predict(fit: LinearModelFit, features: np.ndarray) -> float:
    """Model prediction: dot product of coefficients and features."""
    features = np.asarray(features, dtype=np.float64)
    if features.shape != fit.coefficients.shape:
        raise ValueError(
            f"feature length {features.shape} != coefficient length {fit.coefficients.shape}"
        )
    return float(np.dot(fit.coefficients, features))


def _support(theta: np.ndarray) -> tuple[int, ...]:
    return tuple(int(i) for i in np.flatnonzero(theta))


def _weighted_loss(d: WeightedDesign, theta: np.ndarray) -> float:
    r = d.targets - d.features @ theta
    return float(np.sum(d.weights * r * r))


def _solve_weighted_ols(
    X: np.ndarray, y: np.ndarray, w: np.ndarray, column_labels: Sequence[int]
) -> np.ndarray:
    """Weighted least squares via pivoted QR, rejecting rank deficiency.

    column_labels map local column positions to the caller's indices so the
    rank-deficiency error names the offending columns meaningfully.
    """
    sw = np.sqrt(w)
    A = X * sw[:, None]
    b = y * sw
    Q, R, piv = scipy.linalg.qr(A, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size == 0:
        raise ValueError("design has no columns")
    tol = max(A.shape) * np.finfo(np.float64).eps * (diag[0] if diag[0] > 0 else 1.0)
    rank = int(np.sum(diag > tol))
    p = X.shape[1]
    if rank < p:
        dependent = tuple(sorted(int(column_labels[j]) for j in piv[rank:]))
        raise RankDeficientError(
            f"design is rank deficient (rank {rank} < {p} columns); "
            f"dependent columns: {list(dependent)}",
            dependent_columns=dependent,
        )
    theta_piv = scipy.linalg.solve_triangular(R, Q.T @ b)
    theta = np.empty(p)
    theta[piv] = theta_piv
    return theta


def fit_ols(d: WeightedDesign) -> LinearModelFit:
    """Weighted ordinary least squares.

    Requires full column rank on the positively weighted rows; a
    RankDeficientError names the dependent columns by index otherwise.
    """
    theta = _solve_weighted_ols(d.features, d.targets, d.weights, range(d.n_features))
    return LinearModelFit(
        coefficients=theta,
        support=_support(theta),
        model_kind="ols",
        lam=0.0,
        weighted_loss=_weighted_loss(d, theta),
    )


def fit_ridge(d: WeightedDesign, lam: float) -> LinearModelFit:
    """Weighted ridge regression; penalizes every coordinate, unique for lam > 0."""
    if not lam > 0:
        raise ValueError(f"ridge penalty must be > 0, got {lam}")
    X, y, w = d.features, d.targets, d.weights
    G = X.T @ (X * w[:, None]) + lam * np.eye(d.n_features)
    rhs = X.T @ (w * y)
    theta = np.linalg.solve(G, rhs)
    return LinearModelFit(
        coefficients=theta,
        support=_support(theta),
        model_kind="ridge",
        lam=float(lam),
        weighted_loss=_weighted_loss(d, theta),
        meta={"objective": _weighted_loss(d, theta) + lam * float(theta @ theta)},
    )


def _soft_threshold(x: float, t: float) -> float:
    if x > t:
        return x - t
    if x < -t:
        return x + t
    return 0.0


def lasso_lambda_max(d: WeightedDesign, unpenalized: Sequence[int] = (0,)) -> float:
    """Smallest lam at which every penalized coefficient is exactly zero.

    Equals the largest |weighted covariance| between a penalized column and
    the residual of the weighted fit on the unpenalized columns alone, padded
    by one part in 1e12 so the all-zero guarantee survives the last-ulp
    differences between this formula and the solver's own arithmetic.
    """
    X, y, w = d.features, d.targets, d.weights
    unpen = sorted(set(int(i) for i in unpenalized) & set(range(d.n_features)))
    if unpen:
        theta_u = _solve_weighted_ols(X[:, unpen], y, w, unpen)
        r0 = y - X[:, unpen] @ theta_u
    else:
        r0 = y
    penalized = [j for j in range(d.n_features) if j not in unpen]
    if not penalized:
        return 0.0
    return float(np.max(np.abs(X[:, penalized].T @ (w * r0)))) * (1.0 + 1e-12)


def lasso_objective(
    d: WeightedDesign, theta: np.ndarray, lam: float, unpenalized: Sequence[int] = (0,)
) -> float:
    """(1/2) weighted SSE + lam * l1-norm of the penalized coefficients."""
    penalty = sum(abs(float(theta[j])) for j in range(theta.size) if j not in set(unpenalized))
    return 0.5 * _weighted_loss(d, theta) + lam * penalty


def kkt_violation(
    d: WeightedDesign, theta: np.ndarray, lam: float, unpenalized: Sequence[int] = (0,)
) -> float:
    """Largest violation of the LASSO subgradient optimality conditions.

    For active penalized coordinates the weighted gradient must equal
    -lam * sign(theta_j); inactive ones must satisfy |gradient| <= lam;
    unpenalized coordinates must have zero gradient.
    """
    X, y, w = d.features, d.targets, d.weights
    r = y - X @ theta
    grad = -(X.T @ (w * r))
    unpen = set(int(i) for i in unpenalized)
    worst = 0.0
    for j in range(theta.size):
        if j in unpen:
            worst = max(worst, abs(grad[j]))
        elif theta[j] != 0.0:
            worst = max(worst, abs(grad[j] + lam * np.sign(theta[j])))
        else:
            worst = max(worst, max(0.0, abs(grad[j]) - lam))
    return float(worst)


def _duality_gap_estimate(
    X: np.ndarray, y: np.ndarray, w: np.ndarray, theta: np.ndarray, lam: float,
    penalized: np.ndarray,
) -> float:
    sw = np.sqrt(w)
    A = X * sw[:, None]
    b = y * sw
    resid = b - A @ theta
    primal = 0.5 * float(resid @ resid) + lam * float(np.sum(np.abs(theta[penalized])))
    # dual feasibility needs exact orthogonality to unpenalized columns (to
    # every column when lam is 0): project the residual before scaling it
    # into the feasible box
    free = ~penalized if lam > 0.0 else np.ones_like(penalized)
    u = resid
    if free.any():
        A_f = A[:, free]
        coeffs, *_ = np.linalg.lstsq(A_f, resid, rcond=None)
        u = resid - A_f @ coeffs
    if lam > 0.0:
        corr = np.abs(A[:, penalized].T @ u) if penalized.any() else np.zeros(1)
        u = min(1.0, lam / max(float(np.max(corr, initial=0.0)), 1e-300)) * u
    dual = 0.5 * float(b @ b) - 0.5 * float((b - u) @ (b - u))
    return primal - dual


def fit_lasso(
    d: WeightedDesign,
    lam: float,
    unpenalized: Sequence[int] = (0,),
    tol: float = CD_TOL,
    max_sweeps: int = CD_MAX_SWEEPS,
    initial: np.ndarray | None = None,
) -> LinearModelFit:
    """Weighted LASSO by cyclic coordinate descent with soft-thresholding.

    Columns are standardized internally to unit weighted second moment for
    conditioning; coefficients are reported in the original scale, with the
    constant feature (index 0 by default) excluded from the penalty.
    Deterministic: coordinates sweep in index order from a zero start (or the
    warm start given in `initial`, original scale). Raises ConvergenceError
    (carrying a duality-gap estimate) if the maximum coefficient change stays
    above tol for max_sweeps sweeps.
    """
    if lam < 0:
        raise ValueError(f"penalty must be >= 0, got {lam}")
    X, y, w = d.features, d.targets, d.weights
    p = X.shape[1]
    unpen = set(int(i) for i in unpenalized)
    penalized_mask = np.array([j not in unpen for j in range(p)])

    second_moment = np.sqrt(np.maximum((w[:, None] * X * X).sum(axis=0), 0.0))
    inert = second_moment == 0.0  # zero columns never activate
    scale = np.where(inert, 1.0, second_moment)
    U = X / scale
    thresholds = np.where(penalized_mask, lam / scale, 0.0)

    if initial is None:
        beta = np.zeros(p)
    else:
        theta0 = np.asarray(initial, dtype=np.float64)
        if theta0.shape != (p,):
            raise ValueError(f"initial coefficients must have shape ({p},), got {theta0.shape}")
        beta = theta0 * scale
    # Covariance-form updates: with G = U'WU (unit diagonal off the inert
    # columns) and c = U'Wy, the coordinate minimizer is soft(beta_j + c_j
    # - G_j . beta, threshold_j); each update costs O(p) instead of O(m).
    G = U.T @ (w[:, None] * U)
    c = U.T @ (w * y)

    def objective_at(b: np.ndarray) -> float:
        # residual form: the covariance-space quadratic cancels catastrophically
        # for large coefficients along near-null directions
        r = y - U @ b
        return 0.5 * float(np.sum(w * r * r)) + float(np.sum(thresholds * np.abs(b)))

    sqrt_w = np.sqrt(w)
    scaled_y = sqrt_w * y

    def refine(current: np.ndarray) -> np.ndarray | None:
        """Stationary solve on the current active pattern.

        For a fixed support/sign pattern the optimum solves
        A'A beta = A'y_s - t*sign with A the weighted standardized block;
        solving through A's SVD keeps the error at eps*cond(A) (normal
        equations would square it) and returns the min-norm point on exactly
        degenerate blocks (duplicate columns at lam ~ 0). Sign-inconsistent
        coordinates are dropped and the system re-solved. The caller adopts
        the candidate only if it lowers the objective and certifies as a
        fixed point, so this can never derail the sweeps.
        """
        support = [
            j for j in range(p)
            if not inert[j] and (current[j] != 0.0 or not penalized_mask[j])
        ]
        for _ in range(p + 1):
            if not support:
                return np.zeros(p)
            A = sqrt_w[:, None] * U[:, support]
            signs = np.array(
                [np.sign(current[j]) if penalized_mask[j] else 0.0 for j in support]
            )
            penalty_grad = thresholds[support] * signs
            try:
                left, spectrum, right_t = np.linalg.svd(A, full_matrices=False)
            except np.linalg.LinAlgError:
                return None
            keep = spectrum > max(A.shape) * np.finfo(np.float64).eps * spectrum[0]
            if not keep.any():
                return np.zeros(p)
            inv_s = 1.0 / spectrum[keep]
            data_part = right_t[keep].T @ (inv_s * (left[:, keep].T @ scaled_y))
            penalty_part = right_t[keep].T @ (inv_s**2 * (right_t[keep] @ penalty_grad))
            solved = data_part - penalty_part
            if not np.all(np.isfinite(solved)):
                return None
            # sign consistency only binds where the penalty actually acts
            bad = [
                k for k, j in enumerate(support)
                if thresholds[j] > 0.0 and np.sign(solved[k]) != signs[k] and solved[k] != 0.0
            ]
            if not bad:
                candidate = np.zeros(p)
                candidate[support] = solved
                return candidate
            dropped = {support[k] for k in bad}
            support = [j for j in support if j not in dropped]
        return None

    def sweep(state: np.ndarray) -> float:
        """One cyclic pass, in place; returns the max original-scale change."""
        max_change = 0.0
        for j in range(p):
            if inert[j]:
                continue
            rho = state[j] + c[j] - float(G[j] @ state)
            new = _soft_threshold(rho, thresholds[j]) if penalized_mask[j] else rho
            if new != state[j]:
                max_change = max(max_change, abs(new - state[j]) / scale[j])
                state[j] = new
        return max_change

    converged = False
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        if sweep(beta) < tol:
            converged = True
            break
        # Ill-conditioned active blocks (near-duplicate effective columns,
        # e.g. under sharply concentrated kernel weights) contract cyclic
        # sweeps at a 1 - O(eps) rate. Periodically solve the active
        # pattern's stationary system exactly and adopt the solution if it
        # certifies as a fixed point: a trial sweep at the candidate must
        # itself move less than tol (also lower the objective), so accepted
        # candidates end the crawl immediately and rejected ones change
        # nothing.
        if sweeps % 32 == 0:
            candidate = refine(beta)
            if candidate is not None and objective_at(candidate) < objective_at(beta):
                trial_state = candidate.copy()
                if sweep(trial_state) < tol:
                    beta = trial_state
                    converged = True
                    sweeps += 1  # the certifying sweep
                    break
    theta = beta / scale
    if not converged:
        gap = _duality_gap_estimate(X, y, w, theta, lam, penalized_mask)
        raise ConvergenceError(
            f"coordinate descent did not converge in {max_sweeps} sweeps "
            f"(duality-gap estimate {gap:.3e})",
            duality_gap=gap,
        )
    return LinearModelFit(
        coefficients=theta,
        support=_support(theta),
        model_kind="lasso",
        lam=float(lam),
        weighted_loss=_weighted_loss(d, theta),
        meta={
            "sweeps": sweeps,
            "objective": lasso_objective(d, theta, lam, unpenalized),
            "unpenalized": tuple(sorted(unpen)),
        },
    )


def fit_two_step(
    d: WeightedDesign,
    lam: float,
    unpenalized: Sequence[int] = (0,),
    tol: float = CD_TOL,
    max_sweeps: int = CD_MAX_SWEEPS,
    initial: np.ndarray | None = None,
) -> LinearModelFit:
    """LASSO support selection followed by an OLS refit on that support.

    The constant feature joins the stage-2 support unconditionally; all other
    coefficients outside the stage-1 support are exactly zero. An empty
    stage-1 selection yields the weighted-mean-only model, flagged in meta.
    """
    stage1 = fit_lasso(
        d, lam, unpenalized=unpenalized, tol=tol, max_sweeps=max_sweeps, initial=initial
    )
    in_range = set(int(i) for i in unpenalized) & set(range(d.n_features))
    cols = sorted(set(stage1.support) | in_range)
    theta = np.zeros(d.n_features)
    theta_cols = _solve_weighted_ols(d.features[:, cols], d.targets, d.weights, cols)
    theta[cols] = theta_cols
    selected_beyond_constant = [c for c in stage1.support if c not in in_range]
    return LinearModelFit(
        coefficients=theta,
        support=_support(theta),
        model_kind="two_step_lasso",
        lam=float(lam),
        weighted_loss=_weighted_loss(d, theta),
        meta={
            "stage1_support": stage1.support,
            "stage1_weighted_loss": stage1.weighted_loss,
            "stage1_coefficients": stage1.coefficients,
            "constant_only": not selected_beyond_constant,
            "refit_columns": tuple(cols),
        },
    )
