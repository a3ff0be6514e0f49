"""Robustness benchmarking for hierarchical time series forecasting.

Measures how forecasting methods degrade when a dataset's bottom-level
series are perturbed by parameterized transformations: variants are
generated on a linear intensity schedule, forecast and reconciled across
the hierarchy, scored with level-wise MASE, and summarized as rank tables,
robustness curves, and DTW distance distributions.
"""

from ._version import __version__
from .distance import DistanceDistribution, DtwParams, distribution_shift, dtw, pairwise_distribution
from .evaluate import (EvalRecord, RankTable, aggregate_ranks, evaluate_run,
                       mase_group, mase_series, rank_methods, robustness_curve)
from .forecast import (ForecastRun, ForecasterSpec, MintConfig, fit_predict,
                       reconcile_bu, reconcile_mint, run_method)
from .hts import (GroupSchema, HtsDataset, SummingStructure, TimeSeries,
                  check_coherence, load_dataset)
from .transforms import (TransformSpec, TransformedDataset, VariantKey,
                         generate_variants, jitter, magnitude_warp, make_schedule,
                         make_variant, scaling, time_warp)

__all__ = [
    "__version__",
    "DistanceDistribution", "DtwParams", "distribution_shift", "dtw",
    "pairwise_distribution",
    "EvalRecord", "RankTable", "aggregate_ranks", "evaluate_run", "mase_group",
    "mase_series", "rank_methods", "robustness_curve",
    "ForecastRun", "ForecasterSpec", "MintConfig", "fit_predict", "reconcile_bu",
    "reconcile_mint", "run_method",
    "GroupSchema", "HtsDataset", "SummingStructure", "TimeSeries",
    "check_coherence", "load_dataset",
    "TransformSpec", "TransformedDataset", "VariantKey", "generate_variants",
    "jitter", "magnitude_warp", "make_schedule", "make_variant", "scaling",
    "time_warp",
]
