"""Global ordinary least squares."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import DataError, MixedResponses, RankDeficient
from .frame import ModelSpec, SpatialFrame


def gaussian_loglik(rss: float, n: int) -> float:
    """Gaussian log-likelihood at the ML variance estimate ``rss / n``."""
    return -0.5 * n * (np.log(2 * np.pi) + np.log(rss / n) + 1.0)


def aicc_from_loglik(loglik: float, k: int, n: int) -> float:
    """Small-sample corrected AIC with ``k`` estimated parameters."""
    if n - k - 1 <= 0:
        return float("inf")
    return -2.0 * loglik + 2.0 * k + 2.0 * k * (k + 1) / (n - k - 1)


def significance_code(p: float) -> str:
    if p < 0.01:
        return "***"
    if p < 0.05:
        return "**"
    if p < 0.1:
        return "*"
    return ""


@dataclass(frozen=True, eq=False)
class OlsFit:
    terms: tuple
    coefficients: np.ndarray
    std_errors: np.ndarray
    t_values: np.ndarray
    p_values: np.ndarray
    residuals: np.ndarray
    fitted: np.ndarray
    y: np.ndarray = field(repr=False)
    r2: float = 0.0
    adj_r2: float = 0.0
    residual_std_error: float = 0.0
    f_statistic: float = float("nan")
    f_df: tuple = (0, 0)
    log_likelihood: float = 0.0
    aic: float = 0.0
    aicc: float = 0.0
    n: int = 0
    p: int = 0
    name: str = "ols"

    @property
    def rss(self) -> float:
        return float(self.residuals @ self.residuals)

    def summary_table(self, delimiter: str = ",") -> str:
        """Coefficient table: term, estimate, std. error, t value, p value, significance code."""
        buf = io.StringIO()
        w = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
        w.writerow(["term", "estimate", "std_error", "t_value", "p_value", "signif"])
        for i, t in enumerate(self.terms):
            w.writerow([t, repr(float(self.coefficients[i])), repr(float(self.std_errors[i])),
                        repr(float(self.t_values[i])), repr(float(self.p_values[i])),
                        significance_code(self.p_values[i])])
        w.writerow(["Observations", self.n, "", "", "", ""])
        w.writerow(["R2", repr(self.r2), "", "", "", ""])
        w.writerow(["Adjusted R2", repr(self.adj_r2), "", "", "", ""])
        w.writerow(["Residual Std. Error", repr(self.residual_std_error), f"df={self.n - self.p}", "", "", ""])
        w.writerow(["F Statistic", repr(float(self.f_statistic)), f"df=({self.f_df[0]}, {self.f_df[1]})", "", "", ""])
        w.writerow(["Log Likelihood", repr(self.log_likelihood), "", "", "", ""])
        w.writerow(["AIC", repr(self.aic), "", "", "", ""])
        return buf.getvalue()


def least_squares(X: np.ndarray, y: np.ndarray):
    """QR solve; returns ``(beta, R)``. Raises :class:`RankDeficient` on a singular design."""
    n, p = X.shape
    if n <= p:
        raise DataError(f"need n > p, got n={n}, p={p}")
    Q, R = np.linalg.qr(X)
    diag = np.abs(np.diag(R))
    if diag.min() <= diag.max() * max(n, p) * np.finfo(float).eps * 10:
        raise RankDeficient("design matrix is rank deficient")
    beta = np.linalg.solve(R, Q.T @ y)
    return beta, R


def ols_arrays(X: np.ndarray, y: np.ndarray, terms, has_intercept: bool, name: str = "ols") -> OlsFit:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    beta, R = least_squares(X, y)
    fitted = X @ beta
    resid = y - fitted
    rss = float(resid @ resid)
    Rinv = np.linalg.solve(R, np.eye(p))
    sigma2 = rss / (n - p)
    se = np.sqrt(sigma2 * (Rinv ** 2).sum(axis=1))
    with np.errstate(divide="ignore", invalid="ignore"):
        tval = beta / se
    pval = 2 * stats.t.sf(np.abs(tval), n - p)
    tss = float(((y - y.mean()) ** 2).sum()) if has_intercept else float(y @ y)
    r2 = 1.0 - rss / tss if tss > 0 else 0.0
    r2 = min(max(r2, 0.0), 1.0)
    df_model = p - int(has_intercept)
    adj = 1.0 - (1.0 - r2) * (n - int(has_intercept)) / (n - p)
    if df_model > 0 and rss > 0:
        fstat = ((tss - rss) / df_model) / (rss / (n - p))
    elif df_model > 0:
        fstat = float("inf")
    else:
        fstat = float("nan")
    loglik = gaussian_loglik(rss, n) if rss > 0 else float("inf")
    k = p + 1
    return OlsFit(
        terms=tuple(terms), coefficients=beta, std_errors=se, t_values=tval, p_values=pval,
        residuals=resid, fitted=fitted, y=y, r2=r2, adj_r2=adj,
        residual_std_error=float(np.sqrt(sigma2)), f_statistic=fstat, f_df=(df_model, n - p),
        log_likelihood=loglik, aic=2 * k - 2 * loglik, aicc=aicc_from_loglik(loglik, k, n),
        n=n, p=p, name=name,
    )


def fit_ols(frame: SpatialFrame, spec: ModelSpec) -> OlsFit:
    """Global OLS of ``spec.response`` on ``spec.predictors``."""
    X, y, terms = frame.design(spec)
    return ols_arrays(X, y, terms, spec.include_intercept)


def compare_aic(fits, criterion: str = "aicc"):
    """Rank fitted models by an information criterion, lowest first.

    ``fits`` is a mapping of name to fit or a sequence of fits with a ``name``
    attribute. Every fit must have been estimated on the same response.
    Returns a list of ``(name, value)`` pairs.
    """
    items = list(fits.items()) if isinstance(fits, dict) else [(f.name, f) for f in fits]
    if not items:
        return []
    y0 = np.asarray(items[0][1].y)
    for name, f in items[1:]:
        y = np.asarray(f.y)
        if y.shape != y0.shape or not np.array_equal(y, y0):
            raise MixedResponses(f"model {name!r} was fitted on a different response")
    ranked = [(name, float(getattr(f, criterion))) for name, f in items]
    ranked.sort(key=lambda t: (t[1], t[0]))
    return ranked
