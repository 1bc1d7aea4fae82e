"""Robust sparse regression via penalized least trimmed squares.

The trimmed elastic net keeps only the h best-fitting rows in its loss,
which buys up to 50% breakdown resistance against response outliers while
the l1/l2 penalties handle high-dimensional sparsity.  Alongside the
solvers, the package evaluates closed-form finite-sample prediction and
estimation error bounds and ships a Monte Carlo harness that verifies
them empirically.
"""

__version__ = "0.1.0"

from .bounds import (
    BoundInputs,
    BoundReport,
    base_inequality_slack,
    chi_square_band_quantiles,
    compute_bound_report,
    cone_condition_gap,
    cone_slack,
    estimation_bound_highdim,
    estimation_bound_lowdim,
    incoherence_check,
    lasso_prediction_error_bound,
    log_binomial,
    min_incoherence_k,
    prediction_constant,
    prediction_error_bound,
    select_lambdas,
    subgaussian_max_quantile,
    trimmed_design,
    trimmed_mse,
    worst_case_incoherence,
)
from .core import (
    Dataset,
    TrimPenaltyConfig,
    TrimSet,
    denormalize_coefficients,
    normalize_columns,
    objective,
    penalty_value,
    residuals,
    trim_weights,
    trimmed_seminorm,
)
from .enet import SubproblemSolution, kkt_residual, soft_threshold, solve_enet_on_subset
from .estimator import LTSElasticNet
from .exceptions import (
    DegenerateColumnError,
    LtsEnetError,
    RankDeficiencyError,
    SolverError,
    SubsetTooLargeError,
    UndefinedBoundError,
)
from .simulate import (
    ComparisonReport,
    CoverageReport,
    MaxCorrCheckResult,
    SimConfig,
    SimInstance,
    SolverSettings,
    TailCheckResult,
    chi_square_tail_check,
    estimate_sigma,
    generate_instance,
    run_contamination_comparison,
    run_coverage_experiment,
    subgaussian_max_check,
)
from .solver import FitResult, PathResult, c_step, default_h, fit_cstep, fit_exact, fit_path, lambda_max

__all__ = [
    "__version__",
    # core
    "Dataset",
    "TrimPenaltyConfig",
    "TrimSet",
    "residuals",
    "trim_weights",
    "penalty_value",
    "objective",
    "trimmed_seminorm",
    "normalize_columns",
    "denormalize_coefficients",
    # enet
    "SubproblemSolution",
    "soft_threshold",
    "kkt_residual",
    "solve_enet_on_subset",
    # solver
    "FitResult",
    "PathResult",
    "default_h",
    "c_step",
    "fit_exact",
    "fit_cstep",
    "fit_path",
    "lambda_max",
    # estimator
    "LTSElasticNet",
    # bounds
    "BoundInputs",
    "BoundReport",
    "log_binomial",
    "subgaussian_max_quantile",
    "chi_square_band_quantiles",
    "select_lambdas",
    "prediction_error_bound",
    "prediction_constant",
    "lasso_prediction_error_bound",
    "cone_slack",
    "cone_condition_gap",
    "trimmed_design",
    "incoherence_check",
    "worst_case_incoherence",
    "min_incoherence_k",
    "trimmed_mse",
    "estimation_bound_lowdim",
    "estimation_bound_highdim",
    "base_inequality_slack",
    "compute_bound_report",
    # simulate
    "SimConfig",
    "SimInstance",
    "SolverSettings",
    "TailCheckResult",
    "MaxCorrCheckResult",
    "CoverageReport",
    "ComparisonReport",
    "generate_instance",
    "estimate_sigma",
    "chi_square_tail_check",
    "subgaussian_max_check",
    "run_coverage_experiment",
    "run_contamination_comparison",
    # errors
    "LtsEnetError",
    "DegenerateColumnError",
    "SubsetTooLargeError",
    "SolverError",
    "RankDeficiencyError",
    "UndefinedBoundError",
]
