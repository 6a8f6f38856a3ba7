"""Predictor screening: forest permutation importance, correlation pruning, VIF filtering."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from sklearn.tree import DecisionTreeRegressor

from .diagnostics import vif_matrix
from .errors import ConstantResponse, DataError
from .frame import ModelSpec, SpatialFrame


@dataclass(frozen=True, eq=False)
class ForestModel:
    """Bagged regression trees with their bootstrap samples.

    ``in_bag[t]`` is the bootstrap index multiset of tree ``t`` (size n);
    ``oob_predictions`` averages, for each unit, the trees that did not see it
    (NaN for a unit that was in every bootstrap sample).
    """

    trees: tuple
    in_bag: tuple
    oob_predictions: np.ndarray
    predictors: tuple
    n_trees: int
    mtry: int
    min_leaf_size: int
    seed: int

    def oob_mask(self, t: int) -> np.ndarray:
        mask = np.ones(self.oob_predictions.size, dtype=bool)
        mask[self.in_bag[t]] = False
        return mask

    def oob_r2(self, y) -> float:
        y = np.asarray(y, dtype=float)
        ok = np.isfinite(self.oob_predictions)
        resid = y[ok] - self.oob_predictions[ok]
        return 1.0 - (resid @ resid) / ((y[ok] - y[ok].mean()) ** 2).sum()

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return np.mean([t.predict(X) for t in self.trees], axis=0)


@dataclass(frozen=True)
class ImportanceReport:
    pct_inc_mse: dict
    oob_mse: float
    ranking: tuple

    def table(self, retained=(), reasons=None, delimiter: str = ",") -> str:
        reasons = reasons or {}
        lines = [delimiter.join(["predictor", "pct_inc_mse", "retained", "drop_reason"])]
        for name in self.ranking:
            lines.append(delimiter.join([
                name, repr(float(self.pct_inc_mse[name])),
                "1" if name in retained else "0", reasons.get(name, ""),
            ]))
        return "\n".join(lines) + "\n"


def _xy(frame: SpatialFrame, spec: ModelSpec):
    spec.validate(frame, require_predictors=True)
    X = np.column_stack([frame[p] for p in spec.predictors])
    y = np.asarray(frame[spec.response], dtype=float)
    return X, y


def fit_forest(frame: SpatialFrame, spec: ModelSpec, n_trees: int = 500, mtry: int | None = None,
               min_leaf_size: int = 5, seed: int = 0, n_jobs: int = 1) -> ForestModel:
    """Random regression forest on bootstrap samples.

    Each tree draws its bootstrap sample and split randomness from its own
    stream ``(seed, tree index)``, so results do not depend on ``n_jobs``.
    ``mtry`` defaults to ``ceil(p / 3)``.
    """
    X, y = _xy(frame, spec)
    n, p = X.shape
    if n < 10:
        raise DataError("a forest needs at least 10 observations")
    if n_trees < 1:
        raise DataError("n_trees must be at least 1")
    if np.ptp(y) == 0:
        raise ConstantResponse("response is constant")
    mtry = mtry or max(1, math.ceil(p / 3))

    def grow(t):
        rng = np.random.default_rng([seed, t])
        idx = np.sort(rng.integers(0, n, size=n))
        tree = DecisionTreeRegressor(max_features=mtry, min_samples_leaf=min_leaf_size,
                                     random_state=int(rng.integers(0, 2**31 - 1)))
        tree.fit(X[idx], y[idx])
        return tree, idx

    if n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            grown = list(pool.map(grow, range(n_trees)))
    else:
        grown = [grow(t) for t in range(n_trees)]

    total = np.zeros(n)
    count = np.zeros(n)
    for tree, idx in grown:
        oob = np.ones(n, dtype=bool)
        oob[idx] = False
        if oob.any():
            total[oob] += tree.predict(X[oob])
            count[oob] += 1
    with np.errstate(invalid="ignore", divide="ignore"):
        oob_pred = np.where(count > 0, total / count, np.nan)
    return ForestModel(
        trees=tuple(t for t, _ in grown), in_bag=tuple(i for _, i in grown), oob_predictions=oob_pred,
        predictors=tuple(spec.predictors), n_trees=n_trees, mtry=mtry, min_leaf_size=min_leaf_size, seed=seed,
    )


def importance(model: ForestModel, frame: SpatialFrame, spec: ModelSpec) -> ImportanceReport:
    """Percent increase in out-of-bag MSE when each predictor is permuted, averaged over trees."""
    X, y = _xy(frame, spec)
    if tuple(spec.predictors) != model.predictors:
        raise DataError("model was fitted on a different predictor set")
    p = X.shape[1]
    sums = np.zeros(p)
    used = 0
    base_total = 0.0
    for t, tree in enumerate(model.trees):
        oob = model.oob_mask(t)
        if oob.sum() < 2:
            continue
        Xo, yo = X[oob], y[oob]
        base = float(np.mean((yo - tree.predict(Xo)) ** 2))
        if base <= 0:
            continue
        rng = np.random.default_rng([model.seed, t, 1])
        for j in range(p):
            Xp = Xo.copy()
            Xp[:, j] = rng.permutation(Xp[:, j])
            perm = float(np.mean((yo - tree.predict(Xp)) ** 2))
            sums[j] += 100.0 * (perm - base) / base
        base_total += base
        used += 1
    if used == 0:
        raise DataError("no tree has a usable out-of-bag sample")
    pct = {name: float(v / used) for name, v in zip(model.predictors, sums)}
    ranking = tuple(sorted(pct, key=lambda k: (-pct[k], k)))
    return ImportanceReport(pct, base_total / used, ranking)


@dataclass
class ScreenResult:
    retained: list
    dropped: dict = field(default_factory=dict)
    warning: str | None = None


def screen_by_importance(report: ImportanceReport, threshold: float = 10.0, order=None) -> ScreenResult:
    """Keep predictors whose %IncMSE exceeds ``threshold``, in their original order."""
    names = list(order) if order is not None else list(report.pct_inc_mse)
    kept = [n for n in names if report.pct_inc_mse[n] > threshold]
    dropped = {n: f"pct_inc_mse {report.pct_inc_mse[n]:.3f} <= {threshold}" for n in names if n not in kept}
    warn = None
    if not kept:
        warn = f"no predictor exceeds the importance threshold {threshold}"
        warnings.warn(warn, UserWarning)
    return ScreenResult(kept, dropped, warn)


def prune_correlated(frame: SpatialFrame, predictors, report: ImportanceReport,
                     corr_threshold: float = 0.8) -> ScreenResult:
    """Drop predictors until no pair has ``|r| > corr_threshold``.

    Each round removes the predictor with the most over-threshold partners;
    ties go to the lower %IncMSE, then the later name. Once every remaining
    predictor has at most one partner, the pair member with the lower %IncMSE
    is dropped.
    """
    names = list(predictors)
    missing = [n for n in names if n not in report.pct_inc_mse]
    if missing:
        raise DataError(f"importance report lacks {missing}")
    if len(names) < 2:
        return ScreenResult(names)
    R = np.abs(np.corrcoef(np.column_stack([frame[n] for n in names]), rowvar=False))
    alive = list(range(len(names)))
    dropped = {}
    imp = report.pct_inc_mse
    while True:
        sub = R[np.ix_(alive, alive)] > corr_threshold
        np.fill_diagonal(sub, False)
        degree = sub.sum(axis=1)
        if degree.max() == 0:
            break
        cands = [alive[i] for i in np.flatnonzero(degree == degree.max())]
        cands.sort(key=lambda i: names[i], reverse=True)
        victim = min(cands, key=lambda i: imp[names[i]])
        partners = [names[alive[i]] for i in np.flatnonzero(sub[alive.index(victim)])]
        dropped[names[victim]] = f"|r| > {corr_threshold} with {', '.join(partners)}"
        alive.remove(victim)
    return ScreenResult([names[i] for i in alive], dropped)


def filter_by_vif(frame: SpatialFrame, predictors, vif_threshold: float = 5.0) -> ScreenResult:
    """Repeatedly drop the highest-VIF predictor while any VIF exceeds ``vif_threshold``."""
    names = list(predictors)
    if len(names) < 2:
        raise DataError("VIF filtering needs at least two predictors")
    dropped = {}
    while len(names) >= 2:
        v = vif_matrix(np.column_stack([frame[n] for n in names]))
        worst = int(np.argmax(v))
        if not v[worst] > vif_threshold:
            break
        dropped[names[worst]] = f"VIF {v[worst]:.3f} > {vif_threshold}"
        names.pop(worst)
    return ScreenResult(names, dropped)


@dataclass
class SelectionFunnel:
    report: ImportanceReport
    screened: ScreenResult
    pruned: ScreenResult
    filtered: ScreenResult

    @property
    def selected(self) -> list:
        return self.filtered.retained

    @property
    def drop_reasons(self) -> dict:
        out = {}
        for stage, res in (("importance", self.screened), ("correlation", self.pruned), ("vif", self.filtered)):
            for name, why in res.dropped.items():
                out[name] = f"{stage}: {why}"
        return out


def select_variables(frame: SpatialFrame, spec: ModelSpec, importance_threshold: float = 10.0,
                     corr_threshold: float = 0.8, vif_threshold: float = 5.0, exclude=(),
                     n_trees: int = 500, min_leaf_size: int = 5, seed: int = 0, n_jobs: int = 1) -> SelectionFunnel:
    """Run screen -> prune -> VIF filter; ``exclude`` removes predictors by hand beforehand."""
    preds = [p for p in spec.predictors if p not in set(exclude)]
    spec = ModelSpec(spec.response, preds, spec.include_intercept)
    model = fit_forest(frame, spec, n_trees=n_trees, min_leaf_size=min_leaf_size, seed=seed, n_jobs=n_jobs)
    report = importance(model, frame, spec)
    screened = screen_by_importance(report, importance_threshold, order=preds)
    pruned = prune_correlated(frame, screened.retained, report, corr_threshold)
    if len(pruned.retained) >= 2:
        filtered = filter_by_vif(frame, pruned.retained, vif_threshold)
    else:
        filtered = ScreenResult(list(pruned.retained))
    return SelectionFunnel(report, screened, pruned, filtered)
