"""Cross-validated orthogonal matching pursuit."""

from ._core import (
    ConfigError,
    comparison_success,
    cv_diff_distribution,
    cv_residual_distribution,
    error_ratio_threshold,
    estimate_ric,
    estimation_interval,
    eta_bound,
    experiment_names,
    generate_problem,
    interval_factor,
    least_squares,
    min_ratio_for_confidence,
    omp,
    omp_cv,
    run_experiment,
    theorem4_constants,
)

__all__ = [
    "ConfigError",
    "comparison_success",
    "cv_diff_distribution",
    "cv_residual_distribution",
    "error_ratio_threshold",
    "estimate_ric",
    "estimation_interval",
    "eta_bound",
    "experiment_names",
    "generate_problem",
    "interval_factor",
    "least_squares",
    "min_ratio_for_confidence",
    "omp",
    "omp_cv",
    "run_experiment",
    "theorem4_constants",
]
