"""Uplink cellular coverage and rate under fractional power control.

Stochastic-geometry formulas (``analytic``) with a Monte Carlo simulator of
the same generative model (``montecarlo``) to check them against.
"""
from .analytic import (
    CoverageCurve,
    ServingDistanceModel,
    average_rate,
    coverage_curve,
    coverage_full_pc_no_noise,
    coverage_probability,
    downlink_coverage,
    laplace_closed_form_a4,
    laplace_interference,
    optimal_epsilon,
    rate_coverage_identity_check,
    rz_expectation,
)
from .params import (
    DEFAULT_QUADRATURE,
    ConfigError,
    NetworkParams,
    QuadratureSpec,
    SinrThreshold,
    reference_params,
)

__version__ = "0.1.0"

__all__ = [
    "CoverageCurve",
    "ConfigError",
    "DEFAULT_QUADRATURE",
    "NetworkParams",
    "QuadratureSpec",
    "ServingDistanceModel",
    "SinrThreshold",
    "average_rate",
    "coverage_curve",
    "coverage_full_pc_no_noise",
    "coverage_probability",
    "downlink_coverage",
    "laplace_closed_form_a4",
    "laplace_interference",
    "optimal_epsilon",
    "rate_coverage_identity_check",
    "rz_expectation",
    "reference_params",
]
