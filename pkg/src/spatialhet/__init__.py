"""Spatial regression toolkit for spatially heterogeneous relationships.

Spatial weights, global and local autocorrelation statistics, global OLS,
maximum-likelihood spatial lag/error models, and geographically weighted
regression (basic, locally-compensated ridge, multi-scale), plus data-driven
predictor screening and an end-to-end pipeline.
"""

from .diagnostics import (
    AutocorrResult,
    LisaResult,
    condition_index,
    gearys_c,
    local_geary,
    local_morans_i,
    morans_i,
    vif,
)
from .errors import *  # noqa: F401,F403
from .frame import ModelSpec, SpatialFrame, derive_share, load_frame, read_frame
from .gwr import (
    BandwidthSpec,
    GwrFit,
    KernelSpec,
    fit_gwr,
    fit_lcr_gwr,
    fit_msgwr,
    kernel_weight,
    local_condition_numbers,
    residual_autocorrelation,
    select_bandwidth,
)
from .ols import OlsFit, compare_aic, fit_ols
from .sar import SarFit, choose_sar, fit_spatial_error, fit_spatial_lag
from .synth import Surface, SyntheticSpec, generate_synthetic, synthetic_adjacency
from .varsel import (
    filter_by_vif,
    fit_forest,
    importance,
    prune_correlated,
    screen_by_importance,
    select_variables,
)
from .weights import (
    WeightsMatrix,
    build_contiguity,
    build_distance_band,
    build_knn,
    drop_islands,
    row_standardize,
)

__version__ = "0.1.0"
