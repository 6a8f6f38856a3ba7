"""Geographically weighted regression: basic, locally-compensated ridge, multi-scale."""

from .core import (
    GwrFit,
    GwrProblem,
    fit_gwr,
    fit_lcr_gwr,
    hat_matrix,
    local_condition_numbers,
    regularized_local_condition_numbers,
)
from .kernels import ADAPTIVE, BISQUARE, FIXED, GAUSSIAN, BandwidthSpec, KernelSpec, kernel_weight
from .msgwr import fit_msgwr, variable_flags
from .report import residual_autocorrelation, summary_block, surfaces_csv, surfaces_geojson
from .selection import BandwidthSelection, scan_adaptive, select_bandwidth

__all__ = [
    "ADAPTIVE", "BISQUARE", "FIXED", "GAUSSIAN",
    "BandwidthSelection", "BandwidthSpec", "GwrFit", "GwrProblem", "KernelSpec",
    "fit_gwr", "fit_lcr_gwr", "fit_msgwr", "hat_matrix", "kernel_weight",
    "local_condition_numbers", "regularized_local_condition_numbers", "residual_autocorrelation",
    "scan_adaptive", "select_bandwidth", "summary_block", "surfaces_csv", "surfaces_geojson",
    "variable_flags",
]
