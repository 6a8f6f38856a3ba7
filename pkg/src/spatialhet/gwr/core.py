"""Basic and locally-compensated ridge GWR."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import BisectionFailure, DataError, LocalRankDeficiency
from ..frame import ModelSpec, SpatialFrame
from .kernels import ADAPTIVE, FIXED, BandwidthSpec, KernelSpec, kernel_matrix, resolve_bandwidths

# equilibrated Gram matrices with eigenvalue ratio below this are treated as singular
_SINGULAR_RATIO = 1e-14


@dataclass(frozen=True, eq=False)
class GwrFit:
    terms: tuple
    local_coefficients: np.ndarray
    local_std_errors: np.ndarray
    hat_diagonal: np.ndarray
    effective_params: float
    residuals: np.ndarray
    fitted: np.ndarray
    y: np.ndarray = field(repr=False)
    rss: float = 0.0
    sigma2: float = 0.0
    aicc: float = float("inf")
    aic: float = float("inf")
    cv_score: float = float("inf")
    r2: float = 0.0
    adj_r2: float = 0.0
    local_r2: np.ndarray = None
    local_condition_numbers: np.ndarray = None
    local_ridge: np.ndarray = None
    kernel: KernelSpec = None
    local_bandwidths: np.ndarray = None
    variable_bandwidths: tuple = None
    variable_shares: tuple = None
    rss_trace: tuple = ()
    converged: bool = True
    name: str = "gwr_basic"

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def p(self) -> int:
        return len(self.terms)


class GwrProblem:
    """Design, response and distance structure shared by every fit on one dataset."""

    def __init__(self, X: np.ndarray, y: np.ndarray, coords: np.ndarray, terms):
        self.X = np.asarray(X, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.coords = np.asarray(coords, dtype=float)
        self.terms = tuple(terms)
        n, p = self.X.shape
        self.n, self.p = n, p
        diff = self.coords[:, None, :] - self.coords[None, :, :]
        self.D = np.sqrt((diff ** 2).sum(-1))
        self.sorted_D = np.sort(self.D, axis=1)
        self.max_distance = float(self.D.max())
        pos = self.D[self.D > 0]
        self.min_distance = float(pos.min()) if pos.size else 0.0
        self.XX = (self.X[:, :, None] * self.X[:, None, :]).reshape(n, p * p)
        self.Xy = self.X * self.y[:, None]
        self.has_intercept = bool(p and np.all(self.X[:, 0] == 1.0) and terms[0] == "Intercept")

    def subproblem(self, X: np.ndarray, y: np.ndarray, terms) -> "GwrProblem":
        """Same locations and distances, different design and response."""
        new = object.__new__(GwrProblem)
        new.__dict__.update(self.__dict__)
        new.X = np.asarray(X, dtype=float)
        new.y = np.asarray(y, dtype=float)
        new.terms = tuple(terms)
        new.p = new.X.shape[1]
        new.XX = (new.X[:, :, None] * new.X[:, None, :]).reshape(new.n, new.p * new.p)
        new.Xy = new.X * new.y[:, None]
        new.has_intercept = bool(new.p and np.all(new.X[:, 0] == 1.0) and new.terms[0] == "Intercept")
        return new

    @classmethod
    def from_frame(cls, frame: SpatialFrame, spec: ModelSpec) -> "GwrProblem":
        X, y, terms = frame.design(spec)
        return cls(X, y, frame.coords, terms)

    def weights(self, kernel: KernelSpec) -> np.ndarray:
        bw = kernel.bandwidth
        if bw.mode == ADAPTIVE and bw.value > self.n:
            raise DataError(f"adaptive k={bw.value} exceeds n={self.n}")
        return kernel_matrix(self.D, self.sorted_D, kernel)

    def gram(self, Wk: np.ndarray) -> np.ndarray:
        return (Wk @ self.XX).reshape(self.n, self.p, self.p)

    def share_of_max(self, bandwidth: BandwidthSpec) -> float:
        """Bandwidth as a share of its maximum: distance / max distance, or k / n."""
        if bandwidth.mode == FIXED:
            return bandwidth.value / self.max_distance
        return bandwidth.value / self.n


def equilibrate(G: np.ndarray) -> np.ndarray:
    d = np.sqrt(np.einsum("...ii->...i", G))
    with np.errstate(divide="ignore", invalid="ignore"):
        return G / (d[..., :, None] * d[..., None, :])


def gram_condition(Ge: np.ndarray) -> np.ndarray:
    """Condition number of the local design from its equilibrated Gram matrices."""
    ok = np.all(np.isfinite(Ge), axis=(-2, -1))
    out = np.full(Ge.shape[0], np.inf)
    if ok.any():
        ev = np.linalg.eigvalsh(Ge[ok])
        lo, hi = ev[:, 0], ev[:, -1]
        cn = np.full(lo.shape, np.inf)
        good = lo > hi * _SINGULAR_RATIO
        cn[good] = np.sqrt(hi[good] / lo[good])
        out[ok] = cn
    return out


def _safe_solve(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Batched solve; singular systems give NaN rows instead of raising."""
    try:
        return np.linalg.solve(A, b[..., None])[..., 0]
    except np.linalg.LinAlgError:
        out = np.full(b.shape, np.nan)
        for i in range(A.shape[0]):
            try:
                out[i] = np.linalg.solve(A[i], b[i])
            except np.linalg.LinAlgError:
                pass
        return out


def aicc_value(rss: float, n: int, tr_s: float) -> float:
    """Corrected AIC for a GWR-type linear smoother with trace ``tr_s``."""
    if n - 2 - tr_s <= 0 or rss <= 0:
        return float("inf")
    sigma = np.sqrt(rss / n)
    return 2 * n * np.log(sigma) + n * np.log(2 * np.pi) + n * (n + tr_s) / (n - 2 - tr_s)


def _penalty(prob: GwrProblem, G: np.ndarray, ridge: np.ndarray) -> np.ndarray:
    """Ridge on the equilibrated scale mapped back to data units; the intercept is not penalized."""
    diag = np.einsum("...ii->...i", G)
    mask = np.ones(prob.p)
    if prob.has_intercept:
        mask[0] = 0.0
    P = np.zeros_like(G)
    idx = np.arange(prob.p)
    P[:, idx, idx] = ridge[:, None] * diag * mask
    return P


def criterion(prob: GwrProblem, kernel: KernelSpec, which: str = "aicc") -> float:
    """Bandwidth-selection score; ``inf`` when any local system is singular."""
    Wk = prob.weights(kernel)
    G = prob.gram(Wk)
    if np.any(gram_condition(equilibrate(G)) == np.inf):
        return float("inf")
    r = Wk @ prob.Xy
    if which == "cv":
        wii = np.diagonal(Wk)
        G0 = G - wii[:, None, None] * (prob.X[:, :, None] * prob.X[:, None, :])
        r0 = r - wii[:, None] * prob.Xy
        beta0 = _safe_solve(G0, r0)
        pred = np.einsum("ij,ij->i", prob.X, beta0)
        score = float(((prob.y - pred) ** 2).sum())
        return score if np.isfinite(score) else float("inf")
    if which != "aicc":
        raise ValueError(f"unknown criterion {which!r}")
    beta = _safe_solve(G, r)
    a = _safe_solve(G, prob.X)
    hat = np.diagonal(Wk) * np.einsum("ij,ij->i", prob.X, a)
    resid = prob.y - np.einsum("ij,ij->i", prob.X, beta)
    value = aicc_value(float(resid @ resid), prob.n, float(hat.sum()))
    return value if np.isfinite(value) else float("inf")


def _fit(prob: GwrProblem, kernel: KernelSpec, ridge=None, check_rank: bool = True, name: str = "gwr_basic") -> GwrFit:
    n, p = prob.n, prob.p
    Wk = prob.weights(kernel)
    G = prob.gram(Wk)
    cn = gram_condition(equilibrate(G))
    ridge = np.zeros(n) if ridge is None else np.asarray(ridge, dtype=float)
    if np.any(ridge > 0):
        G = G + _penalty(prob, G, ridge)
    elif check_rank and np.any(~np.isfinite(cn)):
        i = int(np.flatnonzero(~np.isfinite(cn))[0])
        raise LocalRankDeficiency(i, cn[i])
    r = Wk @ prob.Xy
    beta = _safe_solve(G, r)
    Cinv = np.linalg.inv(G)
    a = np.einsum("ikl,il->ik", Cinv, prob.X)
    wii = np.diagonal(Wk)
    hat = wii * np.einsum("ij,ij->i", prob.X, a)
    fitted = np.einsum("ij,ij->i", prob.X, beta)
    resid = prob.y - fitted
    rss = float(resid @ resid)
    tr_s = float(hat.sum())
    dof = n - tr_s
    sigma2 = rss / dof if dof > 0 else float("nan")

    G2 = ((Wk * Wk) @ prob.XX).reshape(n, p, p)
    cov = Cinv @ G2 @ Cinv
    se = np.sqrt(np.clip(sigma2 * np.einsum("ikk->ik", cov), 0, None))

    # leave-one-out: drop the self weight from each local system
    G0 = G - wii[:, None, None] * (prob.X[:, :, None] * prob.X[:, None, :])
    r0 = r - wii[:, None] * prob.Xy
    beta0 = _safe_solve(G0, r0)
    cv = float(((prob.y - np.einsum("ij,ij->i", prob.X, beta0)) ** 2).sum())
    if not np.isfinite(cv):
        cv = float("inf")

    sw = Wk.sum(axis=1)
    ybar_w = (Wk @ prob.y) / sw
    tss_w = (Wk * (prob.y[None, :] - ybar_w[:, None]) ** 2).sum(axis=1)
    rss_w = Wk @ (resid ** 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        local_r2 = 1.0 - rss_w / tss_w
    tss = float(((prob.y - prob.y.mean()) ** 2).sum())
    r2 = 1.0 - rss / tss if tss > 0 else 0.0
    adj = 1.0 - (1.0 - r2) * (n - 1) / dof if dof > 0 else float("nan")
    aicc = aicc_value(rss, n, tr_s)
    aic = (n * np.log(rss / n) + n * np.log(2 * np.pi) + n + tr_s) if rss > 0 else float("-inf")
    return GwrFit(
        terms=prob.terms, local_coefficients=beta, local_std_errors=se, hat_diagonal=hat,
        effective_params=tr_s, residuals=resid, fitted=fitted, y=prob.y, rss=rss, sigma2=sigma2,
        aicc=aicc, aic=aic, cv_score=cv, r2=r2, adj_r2=adj, local_r2=local_r2,
        local_condition_numbers=cn, local_ridge=ridge, kernel=kernel,
        local_bandwidths=resolve_bandwidths(prob.sorted_D, kernel.bandwidth), name=name,
    )


def _check_kernel(prob: GwrProblem, kernel: KernelSpec) -> None:
    if kernel.bandwidth.mode == ADAPTIVE:
        k = kernel.bandwidth.value
        if k < prob.p + 1:
            raise DataError(f"adaptive k={k} is below p + 1 = {prob.p + 1}")
        if k > prob.n:
            raise DataError(f"adaptive k={k} exceeds n={prob.n}")


def fit_gwr(frame: SpatialFrame, spec: ModelSpec, kernel: KernelSpec) -> GwrFit:
    """Geographically weighted regression with one local weighted least-squares fit per unit.

    Raises :class:`LocalRankDeficiency` naming the first location whose local
    design is singular.
    """
    prob = GwrProblem.from_frame(frame, spec)
    _check_kernel(prob, kernel)
    return _fit(prob, kernel)


def hat_matrix(frame: SpatialFrame, spec: ModelSpec, kernel: KernelSpec, ridge=None) -> np.ndarray:
    """Dense n x n hat matrix S with fitted values ``S @ y``."""
    prob = GwrProblem.from_frame(frame, spec)
    Wk = prob.weights(kernel)
    G = prob.gram(Wk)
    if ridge is not None and np.any(np.asarray(ridge) > 0):
        G = G + _penalty(prob, G, np.asarray(ridge, dtype=float))
    a = np.einsum("ikl,il->ik", np.linalg.inv(G), prob.X)
    return (a @ prob.X.T) * Wk


def local_condition_numbers(frame: SpatialFrame, spec: ModelSpec, kernel: KernelSpec) -> np.ndarray:
    """Condition number of the kernel-weighted, column-equilibrated design at each unit.

    Numerically singular locations are reported as ``inf``.
    """
    prob = GwrProblem.from_frame(frame, spec)
    return gram_condition(equilibrate(prob.gram(prob.weights(kernel))))


def regularized_condition(Ge: np.ndarray, ridge: np.ndarray, penalized: np.ndarray) -> np.ndarray:
    """Condition number of ``Ge + ridge * diag(penalized)`` for a batch of equilibrated Grams."""
    M = Ge.copy()
    idx = np.arange(Ge.shape[-1])
    M[:, idx, idx] += ridge[:, None] * penalized[None, :]
    return gram_condition(M)


def lcr_ridges(Ge: np.ndarray, threshold: float, penalized: np.ndarray, rel_tol: float = 1e-12) -> np.ndarray:
    """Smallest ridge per location bringing the regularized condition number to ``<= threshold``.

    A geometric scan finds the first ridge that satisfies the threshold, then
    bisection narrows the crossing. The returned value always satisfies the
    threshold.
    """
    n = Ge.shape[0]
    ridge = np.zeros(n)
    cn0 = gram_condition(Ge)
    todo = np.flatnonzero(cn0 > threshold)
    if todo.size == 0:
        return ridge
    sub = Ge[todo]
    grid = np.concatenate([[0.0], np.logspace(-12, 8, 161)])
    lo = np.zeros(todo.size)
    hi = np.full(todo.size, np.nan)
    for g_prev, g in zip(grid[:-1], grid[1:]):
        open_ = np.isnan(hi)
        if not open_.any():
            break
        cn = regularized_condition(sub[open_], np.full(open_.sum(), g), penalized)
        hit = cn <= threshold
        idx = np.flatnonzero(open_)
        hi[idx[hit]] = g
        lo[idx[hit]] = g_prev
    if np.isnan(hi).any():
        raise BisectionFailure(int(todo[np.flatnonzero(np.isnan(hi))[0]]))
    for _ in range(200):
        active = (hi - lo) > rel_tol * hi
        if not active.any():
            break
        mid = 0.5 * (lo + hi)
        cn = regularized_condition(sub[active], mid[active], penalized)
        ok = cn <= threshold
        a_idx = np.flatnonzero(active)
        hi[a_idx[ok]] = mid[a_idx[ok]]
        lo[a_idx[~ok]] = mid[a_idx[~ok]]
    ridge[todo] = hi
    return ridge


def fit_lcr_gwr(frame: SpatialFrame, spec: ModelSpec, kernel: KernelSpec, cn_threshold: float = 30.0) -> GwrFit:
    """Locally-compensated ridge GWR.

    Locations whose local condition number exceeds ``cn_threshold`` receive
    the smallest ridge that brings the regularized condition number down to
    the threshold. The ridge is expressed on the equilibrated scale (each
    column scaled to unit weighted length) and never penalizes the intercept.
    ``local_ridge`` records the per-location value; zero means an ordinary
    local fit.
    """
    if not cn_threshold > 1:
        raise DataError("cn_threshold must exceed 1")
    prob = GwrProblem.from_frame(frame, spec)
    _check_kernel(prob, kernel)
    Wk = prob.weights(kernel)
    Ge = equilibrate(prob.gram(Wk))
    penalized = np.ones(prob.p)
    if prob.has_intercept:
        penalized[0] = 0.0
    if np.isinf(cn_threshold):
        ridge = np.zeros(prob.n)
    else:
        Ge = np.where(np.isfinite(Ge), Ge, 0.0)
        ridge = lcr_ridges(Ge, cn_threshold, penalized)
    return _fit(prob, kernel, ridge=ridge, check_rank=False, name="gwr_lcr")


def regularized_local_condition_numbers(fit: GwrFit, frame: SpatialFrame, spec: ModelSpec) -> np.ndarray:
    """Condition numbers of the ridge-adjusted local systems of an LCR fit."""
    prob = GwrProblem.from_frame(frame, spec)
    Ge = equilibrate(prob.gram(prob.weights(fit.kernel)))
    Ge = np.where(np.isfinite(Ge), Ge, 0.0)
    penalized = np.ones(prob.p)
    if prob.has_intercept:
        penalized[0] = 0.0
    return regularized_condition(Ge, fit.local_ridge, penalized)
