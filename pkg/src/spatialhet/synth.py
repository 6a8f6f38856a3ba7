"""Synthetic lattice data with known coefficient surfaces.

Units sit on a regular grid (row-major, ``cell_size`` meters apart). The
response is ``y = sum_j beta_j(u, v) x_j + e`` with a spatial-error term
``e = (I - lambda W)^-1 eps`` over row-standardized rook contiguity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

from .errors import ConfigError
from .frame import SpatialFrame
from .weights import build_contiguity, grid_adjacency, row_standardize

SURFACE_KINDS = ("constant", "linear", "step", "sinusoid")


@dataclass(frozen=True)
class Surface:
    """Coefficient surface over normalised coordinates ``s`` in [0, 1] along ``axis``.

    constant: ``value``; linear: ``low + (high - low) * s``;
    step: ``low`` where ``s < split`` else ``high``;
    sinusoid: ``value + amplitude * sin(2 pi * position / period)`` with
    ``period`` measured in grid cells.
    """

    kind: str = "constant"
    value: float = 0.0
    low: float = 0.0
    high: float = 1.0
    axis: str = "u"
    split: float = 0.5
    amplitude: float = 1.0
    period: float = 10.0

    def __post_init__(self):
        if self.kind not in SURFACE_KINDS:
            raise ConfigError(f"unknown surface kind {self.kind!r}; expected one of {SURFACE_KINDS}")
        if self.axis not in ("u", "v", "uv"):
            raise ConfigError(f"surface axis must be 'u', 'v' or 'uv', got {self.axis!r}")
        if self.kind == "sinusoid" and not self.period > 0:
            raise ConfigError("sinusoid period must be positive")

    def evaluate(self, col: np.ndarray, row: np.ndarray, n_cols: int, n_rows: int) -> np.ndarray:
        su = col / max(n_cols - 1, 1)
        sv = row / max(n_rows - 1, 1)
        s = {"u": su, "v": sv, "uv": (su + sv) / 2}[self.axis]
        cells = {"u": col, "v": row, "uv": (col + row) / 2}[self.axis]
        if self.kind == "constant":
            return np.full(col.shape, float(self.value))
        if self.kind == "linear":
            return self.low + (self.high - self.low) * s
        if self.kind == "step":
            return np.where(s < self.split, self.low, self.high).astype(float)
        return self.value + self.amplitude * np.sin(2 * np.pi * cells / self.period)


@dataclass(frozen=True)
class SyntheticSpec:
    n_rows: int = 20
    n_cols: int = 20
    cell_size: float = 1000.0
    surfaces: dict = field(default_factory=lambda: {"Intercept": Surface("constant", value=1.0),
                                                    "x1": Surface("constant", value=1.0)})
    error_lambda: float = 0.0
    noise_sd: float = 1.0
    response: str = "y"

    def __post_init__(self):
        if self.n_rows < 2 or self.n_cols < 2:
            raise ConfigError("grid must be at least 2 x 2")
        if not self.surfaces:
            raise ConfigError("at least one coefficient surface is required")
        if not -1 < self.error_lambda < 1:
            raise ConfigError("error_lambda must lie in (-1, 1)")
        if self.noise_sd < 0:
            raise ConfigError("noise_sd must be nonnegative")
        for term, surf in self.surfaces.items():
            if not isinstance(surf, Surface):
                raise ConfigError(f"surface for {term!r} is not a Surface")

    @property
    def n(self) -> int:
        return self.n_rows * self.n_cols

    @property
    def predictors(self) -> list:
        return [t for t in self.surfaces if t != "Intercept"]

    @classmethod
    def from_mapping(cls, cfg: dict) -> "SyntheticSpec":
        """Build from a parsed config: ``[grid]``, ``[error]`` and ``[surfaces.<term>]`` tables."""
        grid = cfg.get("grid", {})
        err = cfg.get("error", {})
        raw = cfg.get("surfaces")
        if not isinstance(raw, dict) or not raw:
            raise ConfigError("generator config needs a [surfaces] table")
        try:
            surfaces = {term: Surface(**opts) for term, opts in raw.items()}
        except TypeError as exc:
            raise ConfigError(f"invalid surface definition: {exc}") from exc
        return cls(
            n_rows=int(grid.get("rows", 20)), n_cols=int(grid.get("cols", 20)),
            cell_size=float(grid.get("cell_size", 1000.0)), surfaces=surfaces,
            error_lambda=float(err.get("lambda", 0.0)), noise_sd=float(err.get("noise_sd", 1.0)),
            response=str(cfg.get("response", "y")),
        )


def unit_ids(spec: SyntheticSpec) -> list:
    return [f"r{r:03d}c{c:03d}" for r in range(spec.n_rows) for c in range(spec.n_cols)]


def synthetic_adjacency(spec: SyntheticSpec, queen: bool = False) -> list:
    return grid_adjacency(unit_ids(spec), spec.n_rows, spec.n_cols, queen=queen)


def generate_synthetic(spec: SyntheticSpec, seed: int) -> SpatialFrame:
    """Draw one dataset; true surfaces are stored as ``true_<term>`` columns."""
    ids = unit_ids(spec)
    rows, cols = np.divmod(np.arange(spec.n), spec.n_cols)
    coords = np.column_stack([cols * spec.cell_size, rows * spec.cell_size]).astype(float)
    x_rng = np.random.default_rng([seed, 1])
    e_rng = np.random.default_rng([seed, 2])

    data = {}
    signal = np.zeros(spec.n)
    truths = {}
    for term, surf in spec.surfaces.items():
        beta = surf.evaluate(cols.astype(float), rows.astype(float), spec.n_cols, spec.n_rows)
        x = np.ones(spec.n) if term == "Intercept" else x_rng.standard_normal(spec.n)
        if term != "Intercept":
            data[term] = x
        truths[f"true_{term}"] = beta
        signal += beta * x

    eps = spec.noise_sd * e_rng.standard_normal(spec.n)
    if spec.error_lambda != 0.0:
        frame0 = SpatialFrame(ids, coords)
        W = row_standardize(build_contiguity(frame0, synthetic_adjacency(spec)))
        A = sparse.identity(spec.n, format="csc") - spec.error_lambda * W.sparse.tocsc()
        eps = spsolve(A, eps)
    data = {spec.response: signal + eps, **data, **truths}
    return SpatialFrame(ids, coords, data)
