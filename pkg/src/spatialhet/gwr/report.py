"""Exports and residual diagnostics for fitted models."""

from __future__ import annotations

import csv
import io

import numpy as np

from ..diagnostics import gearys_c, morans_i
from ..frame import SpatialFrame, _jsonable
from ..weights import WeightsMatrix
from .core import GwrFit


def residual_autocorrelation(fit, W: WeightsMatrix, statistic: str = "geary", n_permutations: int = 999,
                             seed: int = 0):
    """Geary's C (default) or Moran's I of a fit's residuals."""
    if statistic == "geary":
        return gearys_c(fit.residuals, W, n_permutations=n_permutations, seed=seed)
    if statistic == "moran":
        return morans_i(fit.residuals, W, n_permutations=n_permutations, seed=seed)
    raise ValueError(f"unknown statistic {statistic!r}")


def surface_columns(fit: GwrFit) -> dict:
    cols = {}
    for j, t in enumerate(fit.terms):
        cols[f"beta_{t}"] = fit.local_coefficients[:, j]
    for j, t in enumerate(fit.terms):
        cols[f"se_{t}"] = fit.local_std_errors[:, j]
    cols["local_r2"] = fit.local_r2
    cols["local_cn"] = fit.local_condition_numbers
    cols["local_ridge"] = fit.local_ridge
    return cols


def _fmt(v) -> str:
    v = float(v)
    return repr(v) if np.isfinite(v) else ("inf" if v > 0 else ("-inf" if v < 0 else "nan"))


def surfaces_csv(fit: GwrFit, frame: SpatialFrame, delimiter: str = ",") -> str:
    """One row per unit: id, x, y, coefficient and std. error per term, local R2, CN, ridge."""
    cols = surface_columns(fit)
    buf = io.StringIO()
    w = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    w.writerow(["id", "x", "y", *cols])
    for i, uid in enumerate(frame.unit_ids):
        w.writerow([uid, _fmt(frame.coords[i, 0]), _fmt(frame.coords[i, 1]), *(_fmt(v[i]) for v in cols.values())])
    return buf.getvalue()


def surfaces_geojson(fit: GwrFit, frame: SpatialFrame) -> dict:
    cols = surface_columns(fit)
    features = []
    for i, uid in enumerate(frame.unit_ids):
        props = {"id": uid}
        props.update({k: _jsonable(v[i]) for k, v in cols.items()})
        features.append({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [float(frame.coords[i, 0]), float(frame.coords[i, 1])]},
            "properties": props,
        })
    return {"type": "FeatureCollection", "features": features}


def summary_block(fit: GwrFit) -> str:
    """Kernel, bandwidths, coefficient quintiles and diagnostic information as plain text."""
    lines = [f"Model: {fit.name}", f"Kernel function: {fit.kernel.shape.capitalize()}"]
    if fit.variable_bandwidths is not None:
        lines.append("Bandwidths for each coefficient:")
        for t, bw, share in zip(fit.terms, fit.variable_bandwidths, fit.variable_shares):
            flag = "global" if share >= 0.8 else "local"
            lines.append(f"  {t:<20} {bw}  share={share:.4f} ({flag})")
    else:
        lines.append(f"Bandwidth: {fit.kernel.bandwidth}")
    lines.append("Summary of coefficient estimates:")
    lines.append(f"  {'term':<20}{'Min':>14}{'1st Qu.':>14}{'Median':>14}{'3rd Qu.':>14}{'Max':>14}")
    for j, t in enumerate(fit.terms):
        q = np.quantile(fit.local_coefficients[:, j], [0, 0.25, 0.5, 0.75, 1])
        lines.append(f"  {t:<20}" + "".join(f"{v:>14.6g}" for v in q))
    lines += [
        "Diagnostic information:",
        f"  Number of data points: {fit.n}",
        f"  Effective number of parameters (trace S): {fit.effective_params:.6f}",
        f"  Residual sum of squares: {fit.rss:.6f}",
        f"  R-square value: {fit.r2:.6f}",
        f"  Adjusted R-square value: {fit.adj_r2:.6f}",
        f"  AICc value: {fit.aicc:.6f}",
        f"  CV score: {fit.cv_score:.6f}",
    ]
    if np.any(fit.local_ridge > 0):
        lines.append(f"  Locations with local ridge: {int(np.sum(fit.local_ridge > 0))}")
    if not fit.converged:
        lines.append("  WARNING: backfitting did not converge")
    return "\n".join(lines) + "\n"
