"""Linearly implicit Euler schemes for spectral SPDE models."""

from ._rothe import (
    AssumptionReport,
    ConditionResult,
    RateFit,
    SpectralOperator,
    apply_resolvent_power,
    check,
    check_assumptions,
    convergence,
    derive_seed,
    dirichlet_laplacian_1d,
    fit_rate,
    fractional_norm,
    max_rate,
    ou_exact_mse,
    power_law_operator,
    propagation,
    resolvent_operator_norm,
    resolvent_operator_norm_bound,
    sample_increments,
)

__all__ = [
    "AssumptionReport",
    "ConditionResult",
    "RateFit",
    "SpectralOperator",
    "apply_resolvent_power",
    "check",
    "check_assumptions",
    "convergence",
    "derive_seed",
    "dirichlet_laplacian_1d",
    "fit_rate",
    "fractional_norm",
    "max_rate",
    "ou_exact_mse",
    "power_law_operator",
    "propagation",
    "resolvent_operator_norm",
    "resolvent_operator_norm_bound",
    "sample_increments",
]
