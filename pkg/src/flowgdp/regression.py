"""GDP regression on flow features: OLS, log-GDP GLM, Ridge, LASSO, VIF and residual diagnostics.

Penalised fits z-score the predictors (population standard deviation) and
center the response internally; coefficients are reported back in original
units. Penalties follow the unnormalised convention

    Ridge:  SSE + lam * sum(b_j**2)
    LASSO:  SSE + lam * sum(|b_j|)

with ``b_j`` the slopes on the standardized predictors. The coordinate
descent works on ``SSE/(2N) + alpha*sum|b_j|``, i.e. ``alpha = lam / (2N)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import linalg, stats

from . import _kernels
from .errors import (
    NonPositiveResponse,
    SingularDesign,
    Unconverged,
    ZeroVariance,
    ZeroVariancePredictor,
)
from .model import FEATURE_NAMES, FeatureTable

RANK_RTOL = 1e-11
LASSO_TOL = 1e-8
LASSO_MAX_SWEEPS = 100_000
LASSO_CHUNK = 500
KKT_RTOL = 1e-9


@dataclass(frozen=True)
class DesignMatrix:
    X: np.ndarray
    y: np.ndarray
    columns: tuple[str, ...]
    row_keys: tuple = ()

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "columns", tuple(self.columns))
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"X has {X.shape[0]} rows but y has {y.shape[0]}")
        if X.shape[1] != len(self.columns):
            raise ValueError("column names do not match X")
        if len(set(self.columns)) != len(self.columns):
            raise ValueError("column names must be unique")
        if not np.all(np.isfinite(X)) or not np.all(np.isfinite(y)):
            raise ValueError("design contains undefined (non-finite) entries")

    @property
    def n_obs(self) -> int:
        return self.X.shape[0]

    @property
    def n_predictors(self) -> int:
        return self.X.shape[1]

    def with_response(self, y) -> "DesignMatrix":
        return DesignMatrix(self.X, y, self.columns, self.row_keys)

    def subset(self, rows) -> "DesignMatrix":
        keys = tuple(self.row_keys[i] for i in np.flatnonzero(_as_mask(rows, self.n_obs))) \
            if self.row_keys else ()
        return DesignMatrix(self.X[rows], self.y[rows], self.columns, keys)

    @classmethod
    def from_features(cls, table: FeatureTable, gdp: dict, columns: Sequence[str] = FEATURE_NAMES):
        """Build from a feature table and a ``{(city, year): gdp}`` lookup.

        Rows with an undefined ratio or without GDP are dropped.
        """
        idx = [table.columns.index(c) for c in columns]
        keep = [k for k, key in enumerate(table.keys)
                if table.defined_mask[k] and key in gdp]
        return cls(
            table.values[np.ix_(keep, idx)],
            np.array([gdp[table.keys[k]] for k in keep], dtype=float),
            tuple(columns),
            tuple(table.keys[k] for k in keep),
        )


def _as_mask(rows, n):
    m = np.zeros(n, dtype=bool)
    m[rows] = True
    return m


@dataclass
class RegressionReport:
    method: str
    columns: tuple[str, ...]
    intercept: float
    coef: np.ndarray
    fitted: np.ndarray
    residuals: np.ndarray
    r_squared: float
    rmse: float
    response: str = "gdp"
    standardized_coef: np.ndarray | None = None
    leverage: np.ndarray | None = None
    standardized_residuals: np.ndarray | None = None
    vif: np.ndarray | None = None
    lam: float | None = None
    n_params: int = 0
    sweeps: int | None = None
    objective_trace: list = field(default_factory=list)

    @property
    def coefficients(self) -> dict[str, float]:
        return {"intercept": float(self.intercept),
                **{c: float(b) for c, b in zip(self.columns, self.coef)}}

    @property
    def selected_features(self) -> list[str]:
        return [c for c, b in zip(self.columns, self.coef) if b != 0.0]

    def predict(self, X) -> np.ndarray:
        return self.intercept + np.asarray(X, dtype=float) @ self.coef

    def to_dict(self) -> dict:
        named = lambda arr: None if arr is None else {c: float(v) for c, v in zip(self.columns, arr)}
        listed = lambda arr: None if arr is None else [float(v) for v in arr]
        return {
            "method": self.method,
            "response": self.response,
            "n_obs": int(len(self.residuals)),
            "coefficients": self.coefficients,
            "standardized_coefficients": named(self.standardized_coef),
            "r_squared": float(self.r_squared),
            "rmse": float(self.rmse),
            "vif": named(self.vif),
            "lambda": None if self.lam is None else float(self.lam),
            "selected_features": self.selected_features,
            "residuals": listed(self.residuals),
            "standardized_residuals": listed(self.standardized_residuals),
            "leverage": listed(self.leverage),
        }


# --- least-squares core ------------------------------------------------------


def _qr_lstsq(A: np.ndarray, y: np.ndarray, names: Sequence[str]):
    """Least squares via column-pivoted QR on an equilibrated matrix.

    Returns ``(solution, Q)`` with ``Q`` the thin orthonormal basis of the
    column space (used for leverage).
    """
    norms = np.linalg.norm(A, axis=0)
    if np.any(norms == 0):
        zero = [names[k] for k in np.flatnonzero(norms == 0)]
        raise SingularDesign("design has an all-zero column", zero)
    As = A / norms
    Q, R, perm = linalg.qr(As, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > RANK_RTOL * diag[0]))
    if rank < A.shape[1]:
        raise SingularDesign("design matrix is rank deficient",
                             [names[k] for k in perm[rank:]])
    z = linalg.solve_triangular(R, Q.T @ y)
    sol = np.empty(A.shape[1])
    sol[perm] = z
    return sol / norms, Q


def _r_squared(y, resid) -> float:
    sse = float(resid @ resid)
    yc = y - y.mean()
    sst = float(yc @ yc)
    if sst == 0.0:
        return 1.0 if sse == 0.0 else 0.0
    return 1.0 - sse / sst


def _standardized_residuals(resid, leverage, n_params):
    n = len(resid)
    dof = n - n_params
    sse = float(resid @ resid)
    if dof <= 0 or sse == 0.0:
        return np.zeros(n)
    s = np.sqrt(sse / dof)
    denom = s * np.sqrt(np.clip(1.0 - leverage, 0.0, None))
    out = np.zeros(n)
    ok = denom > 0
    out[ok] = resid[ok] / denom[ok]
    return out


def _ols_core(X: np.ndarray, y: np.ndarray, names: Sequence[str]):
    n, p = X.shape
    if n <= p + 1:
        raise SingularDesign(f"need more observations ({n}) than parameters ({p + 1})")
    A = np.column_stack([np.ones(n), X])
    sol, Q = _qr_lstsq(A, y, ("intercept", *names))
    fitted = A @ sol
    resid = y - fitted
    leverage = np.einsum("ij,ij->i", Q, Q)
    return sol, fitted, resid, leverage


def fit_ols(X: DesignMatrix, *, method: str = "ols", response: str = "gdp") -> RegressionReport:
    """Ordinary least squares with intercept."""
    sol, fitted, resid, leverage = _ols_core(X.X, X.y, X.columns)
    rep = RegressionReport(
        method=method, columns=X.columns, intercept=float(sol[0]), coef=sol[1:],
        fitted=fitted, residuals=resid, r_squared=_r_squared(X.y, resid),
        rmse=float(np.sqrt(resid @ resid / X.n_obs)), response=response,
        leverage=leverage, n_params=X.n_predictors + 1,
    )
    rep.standardized_residuals = _standardized_residuals(resid, leverage, rep.n_params)
    rep.standardized_coef = _standardized_or_none(rep, X)
    return rep


def _standardized_or_none(report, X):
    try:
        return standardize_coefficients(report, X)
    except ZeroVariance:
        return None


def standardize_coefficients(report: RegressionReport, X: DesignMatrix) -> np.ndarray:
    """Slopes in standard-deviation units: ``b_j * sd(x_j) / sd(y)``.

    ``y`` is on the scale the model was fit on (log scale for the GLM).
    """
    y = np.log(X.y) if report.response == "ln_gdp" else X.y
    sx = X.X.std(axis=0, ddof=1)
    sy = y.std(ddof=1)
    if np.any(sx == 0):
        bad = [X.columns[k] for k in np.flatnonzero(sx == 0)]
        raise ZeroVariancePredictor(f"predictors with zero variance: {bad}")
    if sy == 0:
        raise ZeroVariance("response has zero variance")
    return report.coef * sx / sy


def vif(X: DesignMatrix) -> np.ndarray:
    """Variance inflation factor per predictor; ``inf`` for perfectly collinear ones."""
    p = X.n_predictors
    if p < 2:
        raise ValueError("VIF needs at least two predictors")
    out = np.empty(p)
    for k in range(p):
        others = [j for j in range(p) if j != k]
        target = X.X[:, k]
        resid = None
        while others:
            try:
                _, _, resid, _ = _ols_core(X.X[:, others], target, [str(j) for j in others])
                break
            except SingularDesign as exc:
                # drop redundant auxiliary columns; they add nothing to the span
                drop = {int(c) for c in exc.dependent_columns if c != "intercept"}
                if not drop:
                    break
                others = [j for j in others if j not in drop]
        if resid is None:
            out[k] = np.inf if others else 1.0
            continue
        r2 = _r_squared(target, resid)
        out[k] = np.inf if r2 >= 1.0 else 1.0 / (1.0 - r2)
    return out


def fit_log_glm(X: DesignMatrix) -> RegressionReport:
    """OLS on ln(y); R-squared is on the log scale."""
    if np.any(X.y <= 0):
        raise NonPositiveResponse(f"{int(np.sum(X.y <= 0))} responses are <= 0; ln undefined")
    return fit_ols(X.with_response(np.log(X.y)), method="glm", response="ln_gdp")


# --- penalised fits -----------------------------------------------------------


def _standardize(X: DesignMatrix):
    mean = X.X.mean(axis=0)
    sd = X.X.std(axis=0)
    if np.any(sd == 0):
        bad = [X.columns[k] for k in np.flatnonzero(sd == 0)]
        raise ZeroVariancePredictor(f"predictors with zero variance: {bad}")
    ymean = X.y.mean()
    return (X.X - mean) / sd, X.y - ymean, mean, sd, ymean


def _penalised_report(method, X, lam, slopes_std, mean, sd, ymean, leverage, n_params):
    coef = slopes_std / sd
    intercept = float(ymean - mean @ coef)
    fitted = intercept + X.X @ coef
    resid = X.y - fitted
    rep = RegressionReport(
        method=method, columns=X.columns, intercept=intercept, coef=coef,
        fitted=fitted, residuals=resid, r_squared=_r_squared(X.y, resid),
        rmse=float(np.sqrt(resid @ resid / X.n_obs)), lam=float(lam),
        leverage=leverage, n_params=n_params,
    )
    rep.standardized_residuals = _standardized_residuals(resid, leverage, n_params)
    rep.standardized_coef = _standardized_or_none(rep, X)
    return rep


def fit_ridge(X: DesignMatrix, lam: float) -> RegressionReport:
    """Ridge regression, ``SSE + lam*||b||^2`` on standardized predictors, intercept unpenalised."""
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    if lam == 0:
        rep = fit_ols(X, method="ridge")
        rep.lam = 0.0
        return rep
    Xs, yc, mean, sd, ymean = _standardize(X)
    p = X.n_predictors
    A = np.vstack([Xs, np.sqrt(lam) * np.eye(p)])
    b = np.concatenate([yc, np.zeros(p)])
    slopes, _ = _qr_lstsq(A, b, X.columns)
    # hat diagonal of the penalised smoother, plus the intercept's 1/n
    G = np.linalg.solve(Xs.T @ Xs + lam * np.eye(p), Xs.T)
    leverage = np.einsum("ij,ji->i", Xs, G) + 1.0 / X.n_obs
    return _penalised_report("ridge", X, lam, slopes, mean, sd, ymean, leverage,
                             n_params=1 + int(round(leverage.sum() - 1.0)))


def lasso_lambda_max(X: DesignMatrix) -> float:
    """Smallest lambda at which every LASSO slope is exactly zero."""
    Xs, yc, *_ = _standardize(X)
    return float(2.0 * np.max(np.abs(Xs.T @ yc)))


def _lasso_objective(Xs, yc, alpha, coef):
    r = yc - Xs @ coef
    return float(0.5 * (r @ r) / len(yc) + alpha * np.abs(coef).sum())


def _active_set_solution(Xs, yc, alpha, coef):
    """Exact LASSO minimiser started from the sign pattern of ``coef``, or None.

    On a fixed active set with signs ``s`` the stationarity condition is
    linear, ``Xa'(y - Xa b)/N = alpha*s``. Coordinates whose sign flips are
    dropped and the worst violator of ``|X_j'r/N| <= alpha`` is added until
    the optimality conditions hold; a bounded number of passes, then give up.
    """
    n, p = Xs.shape
    active = list(np.flatnonzero(coef != 0))
    signs = dict(zip(active, np.sign(coef[active])))
    slack = 1e-15 * max(1.0, float(np.abs(yc).max()))
    for _ in range(3 * p):
        if not active or len(active) >= n:
            return None
        idx = np.array(active)
        s = np.array([signs[j] for j in active])
        Q, R = np.linalg.qr(Xs[:, idx])
        d = np.abs(np.diag(R))
        if d.min() <= RANK_RTOL * d.max():
            return None
        z = Q.T @ yc - n * alpha * linalg.solve_triangular(R, s, trans="T")
        b = linalg.solve_triangular(R, z)
        flipped = [j for j, bj, sj in zip(active, b, s) if np.sign(bj) != sj]
        if flipped:
            active = [j for j in active if j not in flipped]
            continue
        grad = Xs.T @ (yc - Xs[:, idx] @ b) / n
        viol = [(abs(grad[j]), j) for j in range(p)
                if j not in active and abs(grad[j]) > alpha * (1.0 + KKT_RTOL) + slack]
        if not viol:
            out = np.zeros_like(coef)
            out[idx] = b
            return out
        _, j = max(viol)
        active.append(j)
        active.sort()
        signs[j] = np.sign(grad[j])
    return None


def fit_lasso(X: DesignMatrix, lam: float, *, tol: float = LASSO_TOL,
              max_sweeps: int = LASSO_MAX_SWEEPS) -> RegressionReport:
    """LASSO, ``SSE + lam*||b||_1`` on standardized predictors.

    Cyclic coordinate descent finds the support; every few hundred sweeps
    (and at the end) the exact solution for the current sign pattern is
    tried and kept when it passes the optimality check. This finishes
    ill-conditioned problems where plain coordinate descent crawls.
    """
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    Xs, yc, mean, sd, ymean = _standardize(X)
    alpha = lam / (2.0 * X.n_obs)
    coef = np.zeros(X.n_predictors)
    trace = [_lasso_objective(Xs, yc, alpha, coef)]
    sweeps, converged = 0, False
    if lam >= 2.0 * np.max(np.abs(Xs.T @ yc)):
        # zero satisfies the optimality conditions; skip the sweeps
        converged = True
    while not converged and sweeps < max_sweeps:
        chunk = min(LASSO_CHUNK, max_sweeps - sweeps)
        coef, done, tr, converged = _kernels.lasso_cd(Xs, yc, alpha, coef, tol, chunk)
        coef = np.asarray(coef)
        sweeps += done
        trace.extend(tr[1:])
        exact = _active_set_solution(Xs, yc, alpha, coef)
        if exact is not None:
            obj = _lasso_objective(Xs, yc, alpha, exact)
            if obj <= trace[-1] * (1.0 + 1e-12):
                coef = exact
                trace.append(obj)
                converged = True
    if not converged:
        raise Unconverged("LASSO coordinate descent did not reach tolerance", sweeps, trace[-10:])
    active = np.flatnonzero(coef != 0)
    A = np.column_stack([np.ones(X.n_obs), Xs[:, active]])
    Q, _ = np.linalg.qr(A)
    leverage = np.einsum("ij,ij->i", Q, Q)
    rep = _penalised_report("lasso", X, lam, coef, mean, sd, ymean, leverage,
                            n_params=len(active) + 1)
    rep.sweeps = sweeps
    rep.objective_trace = [float(v) for v in trace]
    return rep


def calibrate_lambda(X: DesignMatrix, method: str, grid: Sequence[float]):
    """Pick lambda by leave-one-out RMSE; ties go to the larger lambda.

    Returns ``(best_lambda, scores)`` with ``scores`` aligned to ``grid``.
    """
    grid = [float(g) for g in grid]
    if not grid:
        raise ValueError("lambda grid is empty")
    if any(g < 0 for g in grid):
        raise ValueError("lambda values must be >= 0")
    if X.n_obs < 3:
        raise ValueError("need at least 3 observations for leave-one-out")
    fit = {"ridge": fit_ridge, "lasso": fit_lasso}[method.lower()]
    n = X.n_obs
    scores = np.empty(len(grid))
    for g, lam in enumerate(grid):
        sq = 0.0
        for i in range(n):
            train = np.ones(n, dtype=bool)
            train[i] = False
            rep = fit(X.subset(train), lam)
            err = X.y[i] - rep.predict(X.X[i:i + 1])[0]
            sq += err * err
        scores[g] = np.sqrt(sq / n)
    best = scores.min()
    tied = [g for g in range(len(grid)) if scores[g] <= best * (1 + 1e-12)]
    best_lam = max(grid[g] for g in tied)
    return best_lam, scores


# --- diagnostics --------------------------------------------------------------


@dataclass
class DiagnosticsBundle:
    fitted: np.ndarray
    residuals: np.ndarray
    standardized_residuals: np.ndarray
    theoretical_quantiles: np.ndarray
    scale_location: np.ndarray
    leverage: np.ndarray
    correlation_labels: tuple[str, ...]
    correlation: np.ndarray

    def to_dict(self) -> dict:
        order = np.argsort(self.standardized_residuals, kind="stable")
        corr = [[None if not np.isfinite(v) else float(v) for v in row] for row in self.correlation]
        return {
            "residual_vs_fitted": [[float(f), float(r)] for f, r in zip(self.fitted, self.residuals)],
            "qq": [[float(q), float(self.standardized_residuals[k])]
                   for q, k in zip(self.theoretical_quantiles, order)],
            "scale_location": [[float(f), float(s)] for f, s in zip(self.fitted, self.scale_location)],
            "leverage": [float(h) for h in self.leverage],
            "correlation_labels": list(self.correlation_labels),
            "correlation": corr,
        }


def normal_plotting_positions(n: int) -> np.ndarray:
    a = 0.375 if n <= 10 else 0.5
    return stats.norm.ppf((np.arange(1, n + 1) - a) / (n + 1 - 2 * a))


def diagnostics(report: RegressionReport, X: DesignMatrix) -> DiagnosticsBundle:
    """Residual plots' data plus the predictor/residual Pearson correlation matrix."""
    resid = report.residuals
    M = np.column_stack([X.X, resid])
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.corrcoef(M, rowvar=False)
    return DiagnosticsBundle(
        fitted=report.fitted,
        residuals=resid,
        standardized_residuals=report.standardized_residuals,
        theoretical_quantiles=normal_plotting_positions(len(resid)),
        scale_location=np.sqrt(np.abs(report.standardized_residuals)),
        leverage=report.leverage,
        correlation_labels=(*X.columns, "residual"),
        correlation=np.atleast_2d(corr),
    )
