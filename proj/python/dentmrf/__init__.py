"""Bayesian spatial Potts models for dental caries survey data."""

from ._dentmrf import (
    Dentition,
    __version__,
    effective_sample_size,
    fit,
    hpd_interval,
    noisy_log_ratio,
    sample_tooth_states,
    simulate,
    summarize,
    surface_log_partition,
    tooth_log_partition,
    validate_dataset,
)

__all__ = [
    "Dentition",
    "__version__",
    "effective_sample_size",
    "fit",
    "hpd_interval",
    "noisy_log_ratio",
    "sample_tooth_states",
    "simulate",
    "summarize",
    "surface_log_partition",
    "tooth_log_partition",
    "validate_dataset",
]
