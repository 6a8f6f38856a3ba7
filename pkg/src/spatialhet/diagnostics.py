"""Spatial autocorrelation statistics and collinearity diagnostics.

Global and local statistics use random-labelling permutation inference; the
pseudo p-value is ``(extreme + 1) / (n_permutations + 1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, IslandsPresent, ZeroVariance
from .frame import SpatialFrame
from .weights import WeightsMatrix

GREATER, LESS, TWO_SIDED = "greater", "less", "two_sided"
NOT_SIGNIFICANT = "not_significant"


@dataclass(frozen=True)
class AutocorrResult:
    statistic: float
    null_expectation: float
    pseudo_p: float
    n_permutations: int
    alternative: str
    seed: int
    name: str = ""


@dataclass(frozen=True, eq=False)
class LisaResult:
    local: np.ndarray
    pseudo_p: np.ndarray
    labels: tuple
    alpha: float
    n_permutations: int
    seed: int
    statistic: str = "local_moran"
    quadrant: np.ndarray = field(default=None, repr=False)

    def as_columns(self) -> dict:
        return {"local_i": self.local, "pseudo_p": self.pseudo_p, "cluster": list(self.labels)}


def _check_inputs(y, W: WeightsMatrix) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size != W.n:
        raise DataError(f"y has {y.size} values but W has {W.n} rows")
    if y.size < 3:
        raise DataError("autocorrelation statistics need n >= 3")
    if W.islands:
        raise IslandsPresent(W.islands)
    if np.var(y) <= 1e-300 or np.ptp(y) == 0:
        raise ZeroVariance("variable has zero variance")
    return y


def _pseudo_p(observed: float, simulated: np.ndarray, alternative: str, center: float) -> float:
    if alternative == GREATER:
        extreme = np.sum(simulated >= observed)
    elif alternative == LESS:
        extreme = np.sum(simulated <= observed)
    elif alternative == TWO_SIDED:
        extreme = np.sum(np.abs(simulated - center) >= abs(observed - center))
    else:
        raise ValueError(f"unknown alternative {alternative!r}")
    return (int(extreme) + 1) / (simulated.size + 1)


def _permuted(y: np.ndarray, n_perm: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.permuted(np.broadcast_to(y, (n_perm, y.size)), axis=1)


def _moran_value(z: np.ndarray, W: WeightsMatrix) -> np.ndarray:
    # z may be (n,) or (n_perm, n); works along the last axis
    lag = (W.sparse @ z.T).T
    num = (z * lag).sum(axis=-1)
    den = (z * z).sum(axis=-1)
    return z.shape[-1] / W.s0 * num / den


def _geary_value(y: np.ndarray, W: WeightsMatrix) -> np.ndarray:
    coo = W.sparse.tocoo()
    diff = y[..., coo.row] - y[..., coo.col]
    num = (coo.data * diff ** 2).sum(axis=-1)
    dev = y - y.mean(axis=-1, keepdims=True)
    n = y.shape[-1]
    return (n - 1) * num / (2.0 * W.s0 * (dev ** 2).sum(axis=-1))


def morans_i(y, W: WeightsMatrix, n_permutations: int = 999, seed: int = 0,
             alternative: str = GREATER) -> AutocorrResult:
    """Global Moran's I with a permutation pseudo p-value."""
    y = _check_inputs(y, W)
    z = y - y.mean()
    stat = float(_moran_value(z, W))
    sims = _moran_value(_permuted(z, n_permutations, seed), W) if n_permutations else np.empty(0)
    expected = -1.0 / (y.size - 1)
    p = _pseudo_p(stat, sims, alternative, expected) if n_permutations else float("nan")
    return AutocorrResult(stat, expected, p, n_permutations, alternative, seed, "morans_i")


def gearys_c(y, W: WeightsMatrix, n_permutations: int = 999, seed: int = 0,
             alternative: str = LESS) -> AutocorrResult:
    """Global Geary's C; values below 1 indicate positive autocorrelation."""
    y = _check_inputs(y, W)
    stat = float(_geary_value(y, W))
    sims = _geary_value(_permuted(y, n_permutations, seed), W) if n_permutations else np.empty(0)
    p = _pseudo_p(stat, sims, alternative, 1.0) if n_permutations else float("nan")
    return AutocorrResult(stat, 1.0, p, n_permutations, alternative, seed, "gearys_c")


def _conditional_draws(W: WeightsMatrix, n_perm: int, seed: int) -> np.ndarray:
    """One shared set of draws from ``range(n - 1)`` without replacement per permutation."""
    kmax = int(W.cardinalities.max())
    rng = np.random.default_rng(seed)
    base = np.broadcast_to(np.arange(W.n - 1), (n_perm, W.n - 1))
    return rng.permuted(base, axis=1)[:, :kmax]


def _folded_p(observed: np.ndarray, sims: np.ndarray) -> np.ndarray:
    n_perm = sims.shape[1]
    larger = (sims >= observed[:, None]).sum(axis=1)
    larger = np.where(n_perm - larger < larger, n_perm - larger, larger)
    return (larger + 1.0) / (n_perm + 1.0)


def _standardize(y: np.ndarray) -> np.ndarray:
    return (y - y.mean()) / y.std()


def _local_sims(z: np.ndarray, W: WeightsMatrix, draws: np.ndarray, kind: str) -> np.ndarray:
    n, n_perm = W.n, draws.shape[0]
    out = np.empty((n, n_perm))
    for i in range(n):
        nb_w = W.row_weights(i)
        k = nb_w.size
        idx = draws[:, :k]
        idx = idx + (idx >= i)  # skip i itself
        zj = z[idx]
        if kind == "moran":
            out[i] = z[i] * (zj @ nb_w)
        else:
            out[i] = ((z[i] - zj) ** 2) @ nb_w
    return out


def local_morans_i(y, W: WeightsMatrix, alpha: float = 0.05, n_permutations: int = 999,
                   seed: int = 0) -> LisaResult:
    """Local Moran's I with conditional-permutation significance and quadrant labels.

    ``I_i = z_i * sum_j w_ij z_j`` with ``z`` standardized by the population
    standard deviation, so ``sum(I_i) / S0`` equals the global Moran's I.
    """
    y = _check_inputs(y, W)
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    z = _standardize(y)
    lag = W.lag(z)
    local = z * lag
    draws = _conditional_draws(W, n_permutations, seed)
    p = _folded_p(local, _local_sims(z, W, draws, "moran"))
    quad = np.where(z > 0, np.where(lag > 0, 1, 4), np.where(lag > 0, 2, 3))
    names = {1: "high_high", 2: "low_high", 3: "low_low", 4: "high_low"}
    labels = tuple(names[q] if pv <= alpha else NOT_SIGNIFICANT for q, pv in zip(quad, p))
    return LisaResult(local, p, labels, alpha, n_permutations, seed, "local_moran", quad)


def local_geary(y, W: WeightsMatrix, alpha: float = 0.05, n_permutations: int = 999,
                seed: int = 0) -> LisaResult:
    """Local Geary ``c_i = sum_j w_ij (z_i - z_j)^2``.

    Significant units with ``c_i`` below its permutation mean are positive
    associations (high_high, low_low, or other_positive when the unit and its
    lag disagree in sign); those above are labelled negative.
    """
    y = _check_inputs(y, W)
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    z = _standardize(y)
    lag = W.lag(z)
    coo = W.sparse.tocoo()
    local = np.zeros(W.n)
    np.add.at(local, coo.row, coo.data * (z[coo.row] - z[coo.col]) ** 2)
    draws = _conditional_draws(W, n_permutations, seed)
    sims = _local_sims(z, W, draws, "geary")
    p = _folded_p(local, sims)
    positive = local < sims.mean(axis=1)
    labels = []
    for i in range(W.n):
        if p[i] > alpha:
            labels.append(NOT_SIGNIFICANT)
        elif not positive[i]:
            labels.append("negative")
        elif z[i] > 0 and lag[i] > 0:
            labels.append("high_high")
        elif z[i] < 0 and lag[i] < 0:
            labels.append("low_low")
        else:
            labels.append("other_positive")
    return LisaResult(local, p, tuple(labels), alpha, n_permutations, seed, "local_geary")


def vif(frame: SpatialFrame, predictors) -> dict:
    """Variance inflation factors; exact collinearity is reported as ``inf``."""
    predictors = list(predictors)
    if len(predictors) < 2:
        raise DataError("VIF needs at least two predictors")
    X = np.column_stack([frame[p] for p in predictors])
    return dict(zip(predictors, vif_matrix(X)))


def vif_matrix(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    out = np.empty(p)
    for j in range(p):
        xj = X[:, j]
        others = np.column_stack([np.ones(n), np.delete(X, j, axis=1)])
        coef, *_ = np.linalg.lstsq(others, xj, rcond=None)
        resid = xj - others @ coef
        tss = ((xj - xj.mean()) ** 2).sum()
        rss = resid @ resid
        if tss == 0 or rss <= 1e-12 * tss:
            out[j] = np.inf
        else:
            out[j] = tss / rss  # 1 / (1 - R^2)
    return out


def condition_index(X) -> float:
    """Ratio of extreme singular values after scaling columns to unit length."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] < 1:
        raise DataError("design matrix needs at least one column")
    norms = np.linalg.norm(X, axis=0)
    if np.any(norms == 0):
        raise DataError("zero column: cannot scale to unit length")
    s = np.linalg.svd(X / norms, compute_uv=False)
    return _ratio(s, max(X.shape))


def _ratio(s: np.ndarray, dim: int) -> float:
    if s[-1] <= s[0] * dim * np.finfo(float).eps:
        return float("inf")
    return float(s[0] / s[-1])
