"""Distance-decay kernels and bandwidth specifications."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GAUSSIAN, BISQUARE = "gaussian", "bisquare"
FIXED, ADAPTIVE = "fixed", "adaptive"


@dataclass(frozen=True)
class BandwidthSpec:
    """Kernel extent: a fixed distance in meters or an adaptive neighbour count."""

    mode: str
    value: float

    def __post_init__(self):
        if self.mode == FIXED:
            if not self.value > 0:
                raise ValueError("fixed bandwidth must be positive")
        elif self.mode == ADAPTIVE:
            if int(self.value) != self.value or self.value < 2:
                raise ValueError("adaptive bandwidth must be an integer >= 2")
            object.__setattr__(self, "value", int(self.value))
        else:
            raise ValueError(f"unknown bandwidth mode {self.mode!r}")

    @classmethod
    def fixed(cls, distance: float) -> "BandwidthSpec":
        return cls(FIXED, float(distance))

    @classmethod
    def adaptive(cls, k: int) -> "BandwidthSpec":
        return cls(ADAPTIVE, int(k))

    def __str__(self):
        return f"{self.mode}({self.value:g})" if self.mode == FIXED else f"adaptive(k={self.value})"


@dataclass(frozen=True)
class KernelSpec:
    shape: str
    bandwidth: BandwidthSpec

    def __post_init__(self):
        if self.shape not in (GAUSSIAN, BISQUARE):
            raise ValueError(f"unknown kernel shape {self.shape!r}")


def kernel_weight(d, shape: str, b):
    """Kernel weight for distance ``d`` and bandwidth ``b`` (both broadcastable).

    gaussian: ``exp(-0.5 (d/b)^2)``; bisquare: ``(1 - (d/b)^2)^2`` for ``d < b``, else 0.
    """
    u = np.asarray(d, dtype=float) / np.asarray(b, dtype=float)
    if shape == GAUSSIAN:
        w = np.exp(-0.5 * u * u)
    elif shape == BISQUARE:
        w = np.where(u < 1.0, (1.0 - u * u) ** 2, 0.0)
    else:
        raise ValueError(f"unknown kernel shape {shape!r}")
    return w if w.ndim else float(w)


def resolve_bandwidths(sorted_distances: np.ndarray, bandwidth: BandwidthSpec) -> np.ndarray:
    """Per-location kernel radius.

    ``sorted_distances`` holds each row of the distance matrix in ascending
    order, self first. Adaptive k resolves to the distance to the k-th nearest
    other unit; k = n has no such unit and resolves to ``max_i * n / (n - 1)``
    so every unit keeps a nonzero bisquare weight.
    """
    n = sorted_distances.shape[0]
    if bandwidth.mode == FIXED:
        return np.full(n, bandwidth.value)
    k = bandwidth.value
    if k > n:
        raise ValueError(f"adaptive k={k} exceeds n={n}")
    if k <= n - 1:
        return sorted_distances[:, k].copy()
    return sorted_distances[:, n - 1] * n / (n - 1)


def kernel_matrix(distances: np.ndarray, sorted_distances: np.ndarray, kernel: KernelSpec) -> np.ndarray:
    """Row i holds the weights of every observation in the local fit at location i."""
    b = resolve_bandwidths(sorted_distances, kernel.bandwidth)
    return kernel_weight(distances, kernel.shape, b[:, None])
