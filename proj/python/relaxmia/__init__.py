"""Membership-inference defence experiments (RelaxLoss and baselines)."""

from ._relaxmia import (
    ConfigError,
    DimensionError,
    Error,
    MlpModel,
    ParseError,
    UndefinedMetricError,
    analyze,
    attack,
    auc_upper_bound,
    boundary,
    bound_terms,
    compute_auc,
    config_schema,
    construct_softlabels,
    cross_entropy,
    decide_branch,
    five_fold_split,
    generate_synthetic,
    hellinger_gaussian,
    loss_stats,
    manifest,
    pearson_correlation,
    select_threshold,
    sweep,
    train,
    tv_upper_bound,
    variance_decomposition,
)

__all__ = [name for name in dir() if not name.startswith("_")]
