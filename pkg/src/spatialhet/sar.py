"""Maximum-likelihood spatial lag and spatial error models.

Both models concentrate the likelihood on the spatial parameter, evaluate
``log|I - a W|`` from the eigenvalues of W, and maximize with a golden-section
search over the admissible interval ``(1/w_min, 1/w_max)``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, stats

from .errors import BoundaryOptimum, DataError, IslandsPresent, NumericalError
from .frame import ModelSpec, SpatialFrame
from .ols import aicc_from_loglik, gaussian_loglik, least_squares, ols_arrays, significance_code
from .search import golden_section
from .weights import ROW_STANDARDIZED, WeightsMatrix

LAG, ERROR = "lag", "error"
BOUND_DELTA = 1e-6


@dataclass(frozen=True, eq=False)
class SarFit:
    model_kind: str
    spatial_parameter: float
    spatial_std_error: float
    terms: tuple
    coefficients: np.ndarray
    std_errors: np.ndarray
    sigma2: float
    log_likelihood: float
    ols_log_likelihood: float
    aic: float
    aicc: float
    lr_statistic: float
    lr_p_value: float
    residuals: np.ndarray
    fitted: np.ndarray
    y: np.ndarray = field(repr=False)
    parameter_bounds: tuple = (-1.0, 1.0)
    n: int = 0
    name: str = ""

    @property
    def z_values(self) -> np.ndarray:
        return self.coefficients / self.std_errors

    @property
    def p_values(self) -> np.ndarray:
        return 2 * stats.norm.sf(np.abs(self.z_values))

    def summary_table(self, delimiter: str = ",") -> str:
        buf = io.StringIO()
        w = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
        w.writerow(["term", "estimate", "std_error", "z_value", "p_value", "signif"])
        for i, t in enumerate(self.terms):
            w.writerow([t, repr(float(self.coefficients[i])), repr(float(self.std_errors[i])),
                        repr(float(self.z_values[i])), repr(float(self.p_values[i])),
                        significance_code(self.p_values[i])])
        label = "Rho" if self.model_kind == LAG else "Lambda"
        w.writerow([label, repr(self.spatial_parameter), repr(self.spatial_std_error), "", "", ""])
        w.writerow(["LR test value", repr(self.lr_statistic), "p-value", repr(self.lr_p_value), "", ""])
        w.writerow(["Log likelihood", repr(self.log_likelihood), "", "", "", ""])
        w.writerow(["AIC", repr(self.aic), "AIC (OLS)", repr(-2 * self.ols_log_likelihood + 2 * (len(self.terms) + 1)), "", ""])
        return buf.getvalue()


def weights_eigenvalues(W: WeightsMatrix) -> np.ndarray:
    """Eigenvalues of W (complex in general, real when W is similar to a symmetric matrix)."""
    dense = W.dense()
    if W.style == ROW_STANDARDIZED:
        # W = D^-1 C with C symmetric -> similar to D^-1/2 C D^-1/2
        rs = dense.sum(axis=1)
        C = dense * rs[:, None]
        if np.allclose(C, C.T, rtol=0, atol=1e-12 * max(1.0, np.abs(C).max())):
            s = 1.0 / np.sqrt(rs)
            return linalg.eigvalsh(C * s[:, None] * s[None, :]).astype(complex)
    elif np.array_equal(dense, dense.T):
        return linalg.eigvalsh(dense).astype(complex)
    return linalg.eigvals(dense)


def log_det(param: float, eigenvalues: np.ndarray) -> float:
    """``log|det(I - param * W)|`` from the eigenvalues of W."""
    return float(np.sum(np.log(np.abs(1.0 - param * eigenvalues))))


def parameter_bounds(eigenvalues: np.ndarray) -> tuple:
    re = eigenvalues.real
    lo, hi = re.min(), re.max()
    if not (lo < 0 < hi):
        raise NumericalError("weights eigenvalues do not straddle zero")
    return 1.0 / lo, 1.0 / hi


def _prepare(frame: SpatialFrame, spec: ModelSpec, W: WeightsMatrix):
    if W.n != frame.n:
        raise DataError("weights and frame sizes differ")
    if W.islands:
        raise IslandsPresent(W.islands)
    X, y, terms = frame.design(spec)
    try:
        eig = weights_eigenvalues(W)
    except linalg.LinAlgError as exc:
        raise NumericalError(f"eigen decomposition of W failed: {exc}") from exc
    return X, y, terms, eig


def error_concentrated_loglik(lam: float, X, y, W: WeightsMatrix, eig) -> float:
    ys = y - lam * W.lag(y)
    Xs = X - lam * (W.sparse @ X)
    beta, *_ = np.linalg.lstsq(Xs, ys, rcond=None)
    e = ys - Xs @ beta
    return gaussian_loglik(float(e @ e), y.size) + log_det(lam, eig)


def lag_concentrated_loglik(rho: float, X, y, W: WeightsMatrix, eig, Wy=None) -> float:
    Wy = W.lag(y) if Wy is None else Wy
    yr = y - rho * Wy
    beta, *_ = np.linalg.lstsq(X, yr, rcond=None)
    e = yr - X @ beta
    return gaussian_loglik(float(e @ e), y.size) + log_det(rho, eig)


def _maximize(fun, bounds, tol: float = 1e-8, n_scan: int = 41) -> float:
    """Coarse scan to bracket the best region, then golden-section refinement."""
    lo, hi = bounds[0] + BOUND_DELTA, bounds[1] - BOUND_DELTA
    grid = np.linspace(lo, hi, n_scan)
    vals = np.array([fun(g) for g in grid])
    k = int(np.nanargmax(vals))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, n_scan - 1)]
    res = golden_section(lambda t: -fun(t), a, b, tol=tol)
    best = res.x
    if best - lo < 1e-5 or hi - best < 1e-5:
        raise BoundaryOptimum(f"optimum {best:.6g} lies on the parameter bound {bounds}")
    return best


def _error_covariance(lam, Xs, sigma2, W: WeightsMatrix):
    n = W.n
    B = np.eye(n) - lam * W.dense()
    WB = W.dense() @ np.linalg.inv(B)
    tr1 = np.trace(WB)
    tr2 = np.sum(WB * WB.T) + np.sum(WB * WB)
    info_ls = np.array([[n / (2 * sigma2 ** 2), tr1 / sigma2], [tr1 / sigma2, tr2]])
    var_ls = np.linalg.inv(info_ls)
    var_beta = sigma2 * np.linalg.inv(Xs.T @ Xs)
    return var_beta, var_ls[1, 1]


def _lag_covariance(rho, X, beta, sigma2, W: WeightsMatrix):
    n, p = X.shape
    A = np.eye(n) - rho * W.dense()
    WA = W.dense() @ np.linalg.inv(A)
    WAXb = WA @ (X @ beta)
    info = np.zeros((p + 2, p + 2))
    info[:p, :p] = X.T @ X / sigma2
    info[:p, p] = info[p, :p] = X.T @ WAXb / sigma2
    info[p, p] = np.trace(WA @ WA) + np.sum(WA * WA) + WAXb @ WAXb / sigma2
    info[p, p + 1] = info[p + 1, p] = np.trace(WA) / sigma2
    info[p + 1, p + 1] = n / (2 * sigma2 ** 2)
    cov = np.linalg.inv(info)
    return cov[:p, :p], cov[p, p]


def _finish(kind, param, param_var, terms, beta, var_beta, sigma2, loglik, X, y, resid, fitted, bounds):
    n, p = X.shape
    ols = ols_arrays(X, y, terms, "Intercept" in terms)
    lr = 2.0 * (loglik - ols.log_likelihood)
    k = p + 2
    return SarFit(
        model_kind=kind, spatial_parameter=float(param), spatial_std_error=float(np.sqrt(max(param_var, 0.0))),
        terms=tuple(terms), coefficients=beta, std_errors=np.sqrt(np.diag(var_beta)), sigma2=float(sigma2),
        log_likelihood=float(loglik), ols_log_likelihood=ols.log_likelihood,
        aic=2 * k - 2 * loglik, aicc=aicc_from_loglik(loglik, k, n),
        lr_statistic=float(lr), lr_p_value=float(stats.chi2.sf(max(lr, 0.0), 1)),
        residuals=resid, fitted=fitted, y=y, parameter_bounds=bounds, n=n,
        name="sar_lag" if kind == LAG else "sar_error",
    )


def fit_spatial_error(frame: SpatialFrame, spec: ModelSpec, W: WeightsMatrix, lam: float | None = None) -> SarFit:
    """Spatial error model ``y = X b + u, u = lambda W u + e``.

    ``lam`` fixes the spatial parameter instead of estimating it.
    Residuals are the innovations ``(I - lambda W)(y - X b)``.
    """
    if W.style != ROW_STANDARDIZED:
        raise DataError("spatial error model requires row-standardized weights")
    X, y, terms, eig = _prepare(frame, spec, W)
    bounds = parameter_bounds(eig)
    if lam is None:
        lam = _maximize(lambda t: error_concentrated_loglik(t, X, y, W, eig), bounds)
    ys = y - lam * W.lag(y)
    Xs = X - lam * (W.sparse @ X)
    beta, _ = least_squares(Xs, ys)
    resid = ys - Xs @ beta
    sigma2 = float(resid @ resid) / y.size
    loglik = gaussian_loglik(float(resid @ resid), y.size) + log_det(lam, eig)
    var_beta, var_lam = _error_covariance(lam, Xs, sigma2, W)
    fitted = y - resid
    return _finish(ERROR, lam, var_lam, terms, beta, var_beta, sigma2, loglik, X, y, resid, fitted, bounds)


def fit_spatial_lag(frame: SpatialFrame, spec: ModelSpec, W: WeightsMatrix, rho: float | None = None) -> SarFit:
    """Spatial lag model ``y = rho W y + X b + e``; W must be row-standardized."""
    if W.style != ROW_STANDARDIZED:
        raise DataError("spatial lag model requires row-standardized weights")
    X, y, terms, eig = _prepare(frame, spec, W)
    bounds = parameter_bounds(eig)
    Wy = W.lag(y)
    if rho is None:
        rho = _maximize(lambda t: lag_concentrated_loglik(t, X, y, W, eig, Wy), bounds)
    yr = y - rho * Wy
    beta, _ = least_squares(X, yr)
    resid = yr - X @ beta
    sigma2 = float(resid @ resid) / y.size
    loglik = gaussian_loglik(float(resid @ resid), y.size) + log_det(rho, eig)
    var_beta, var_rho = _lag_covariance(rho, X, beta, sigma2, W)
    fitted = y - resid
    return _finish(LAG, rho, var_rho, terms, beta, var_beta, sigma2, loglik, X, y, resid, fitted, bounds)


def choose_sar(frame: SpatialFrame, spec: ModelSpec, W: WeightsMatrix) -> SarFit:
    """Fit both models and keep the one with the higher log-likelihood (ties go to the error model)."""
    err = fit_spatial_error(frame, spec, W)
    lag = fit_spatial_lag(frame, spec, W)
    return lag if lag.log_likelihood > err.log_likelihood else err
