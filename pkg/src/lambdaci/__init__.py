"""Distribution-free confidence sets for quantile-defined families.

A simultaneous confidence band for the CDF at the order statistics is
inverted through a closed-form quantile function.  Supported families are
the one-parameter Tukey Lambda law and the four-parameter generalized Lambda
distribution in the CSW parameterization.
"""

from .bands import (
    BandKind,
    BandSpec,
    ConfidenceBand,
    band_covers,
    bernoulli_kl,
    cached_band,
    compute_band,
    dw_critical_value,
    dw_statistic,
    penalty_c,
    penalty_cnu,
    penalty_d,
)
from .baselines import (
    BootstrapKind,
    BootstrapSpec,
    DegenerateRegionError,
    EstimationError,
    PointEstimateCSW,
    UnreliableResultError,
    bootstrap_ci,
    bootstrap_shape_region,
    csw_point_estimates,
    lmoment_estimate_tl,
    quantile_match_estimate_tl,
    sample_quantile,
)
from .diagnostics import tl_envelope
from .gld import (
    CSWParams,
    FKMLParams,
    PairKind,
    PairSet,
    ShapeRegion,
    csw_to_fkml,
    fkml_quantile,
    fkml_to_csw,
    gld_quantile,
    gld_sample,
    pairs_edge,
    pairs_grid,
    pairs_rw,
    qr_ci,
    quantile_ci,
    s_basis,
    shape_region,
    shape_stat,
    shape_stat_ci,
)
from .hull import convex_hull_2d
from .intervals import ExtInterval
from .simharness import ExperimentConfig, ExperimentResult, emit_csv, run_experiment
from .tukey import (
    TukeySample,
    tl_abs_quantile,
    tl_abs_quantile_dlambda,
    tl_ci,
    tl_ci_abs,
    tl_ci_raw,
    tl_quantile,
    tl_sample,
)

__version__ = "0.1.0"

__all__ = [
    "BandKind",
    "BandSpec",
    "BootstrapKind",
    "BootstrapSpec",
    "CSWParams",
    "ConfidenceBand",
    "DegenerateRegionError",
    "EstimationError",
    "ExperimentConfig",
    "ExperimentResult",
    "ExtInterval",
    "FKMLParams",
    "PairKind",
    "PairSet",
    "PointEstimateCSW",
    "ShapeRegion",
    "TukeySample",
    "UnreliableResultError",
    "__version__",
    "band_covers",
    "bernoulli_kl",
    "bootstrap_ci",
    "bootstrap_shape_region",
    "cached_band",
    "compute_band",
    "convex_hull_2d",
    "csw_point_estimates",
    "csw_to_fkml",
    "dw_critical_value",
    "dw_statistic",
    "emit_csv",
    "fkml_quantile",
    "fkml_to_csw",
    "gld_quantile",
    "gld_sample",
    "lmoment_estimate_tl",
    "pairs_edge",
    "pairs_grid",
    "pairs_rw",
    "penalty_c",
    "penalty_cnu",
    "penalty_d",
    "qr_ci",
    "quantile_ci",
    "quantile_match_estimate_tl",
    "run_experiment",
    "s_basis",
    "sample_quantile",
    "shape_region",
    "shape_stat",
    "shape_stat_ci",
    "tl_abs_quantile",
    "tl_abs_quantile_dlambda",
    "tl_ci",
    "tl_ci_abs",
    "tl_ci_raw",
    "tl_envelope",
    "tl_quantile",
    "tl_sample",
]
