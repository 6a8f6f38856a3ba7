"""Golden-section bandwidth selection by AICc or cross-validation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import NumericalError
from ..frame import ModelSpec, SpatialFrame
from ..search import golden_section, integer_golden_section
from .core import GwrProblem, criterion
from .kernels import ADAPTIVE, FIXED, BandwidthSpec, KernelSpec

GLOBAL_SHARE = 0.8
FIXED_SCAN = 41


@dataclass(frozen=True)
class BandwidthSelection:
    """Outcome of a bandwidth search.

    ``share`` is the bandwidth relative to its largest meaningful value
    (max pairwise distance for fixed kernels, n for adaptive ones); a share of
    at least 0.8 marks the relationship as effectively global.
    """

    bandwidth: BandwidthSpec
    score: float
    criterion: str
    kernel_shape: str
    share: float
    trace: tuple = field(default=(), repr=False)

    @property
    def is_global(self) -> bool:
        return self.share >= GLOBAL_SHARE

    @property
    def flag(self) -> str:
        return "global" if self.is_global else "local"

    @property
    def kernel(self) -> KernelSpec:
        return KernelSpec(self.kernel_shape, self.bandwidth)


def search_bounds(prob: GwrProblem, mode: str):
    if mode == FIXED:
        return prob.min_distance, 1.5 * prob.max_distance
    if mode == ADAPTIVE:
        return prob.p + 2, prob.n
    raise ValueError(f"unknown bandwidth mode {mode!r}")


def select_on_problem(prob: GwrProblem, shape: str, mode: str, which: str, bounds=None, tol: float = 1e-6) -> BandwidthSelection:
    if prob.n < prob.p + 2:
        raise NumericalError(f"need n >= p + 2 for bandwidth selection (n={prob.n}, p={prob.p})")
    lo, hi = bounds if bounds is not None else search_bounds(prob, mode)
    if mode == FIXED:
        def score(b):
            return criterion(prob, KernelSpec(shape, BandwidthSpec.fixed(b)), which)
        # coarse geometric scan first: small bandwidths leave local systems
        # singular (score inf), which would mislead a bare golden section
        grid = np.geomspace(lo, hi, FIXED_SCAN)
        scores = [score(b) for b in grid]
        i = min(range(len(grid)), key=lambda j: (scores[j], -grid[j]))
        a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
        res = golden_section(score, a, b, tol=tol * (hi - lo))
        if scores[i] < res.fun:
            res.x, res.fun = float(grid[i]), scores[i]
        res.trace = list(zip(grid.tolist(), scores)) + res.trace
        bw = BandwidthSpec.fixed(res.x)
    else:
        def score(k):
            return criterion(prob, KernelSpec(shape, BandwidthSpec.adaptive(k)), which)
        res = integer_golden_section(score, int(lo), int(hi))
        bw = BandwidthSpec.adaptive(int(res.x))
    if not np.isfinite(res.fun):
        raise NumericalError(f"{which} criterion is not finite anywhere in [{lo}, {hi}]")
    return BandwidthSelection(bw, float(res.fun), which, shape, prob.share_of_max(bw), tuple(res.trace))


def select_bandwidth(frame: SpatialFrame, spec: ModelSpec, kernel_shape: str = "bisquare",
                     mode: str = ADAPTIVE, criterion: str = "aicc") -> BandwidthSelection:
    """Choose the kernel bandwidth minimizing AICc or the leave-one-out CV score.

    Fixed bandwidths are searched continuously on
    ``[min nonzero distance, 1.5 * max distance]`` (a 41-point geometric scan
    brackets the golden section); adaptive neighbour counts
    on ``[p + 2, n]`` by rounded golden section plus a local +-2 refinement.
    """
    prob = GwrProblem.from_frame(frame, spec)
    return select_on_problem(prob, kernel_shape, mode, criterion)


def scan_adaptive(frame: SpatialFrame, spec: ModelSpec, kernel_shape: str = "bisquare", criterion: str = "aicc"):
    """Criterion at every adaptive k in ``[p + 2, n]``; returns ``(ks, scores)``."""
    prob = GwrProblem.from_frame(frame, spec)
    ks = np.arange(prob.p + 2, prob.n + 1)
    scores = np.array([_criterion(prob, kernel_shape, k, criterion) for k in ks])
    return ks, scores


def _criterion(prob, shape, k, which):
    return criterion(prob, KernelSpec(shape, BandwidthSpec.adaptive(int(k))), which)
