"""Exact high-dimensional prediction risk for ridge and ridgeless regression.

The library evaluates the deterministic large-dimension limit of the
out-of-sample risk of ridge regression when the covariance spectrum and the
prior alignment profile are atomic, and cross-checks those limits against
finite-sample Gaussian simulation.  ``spectral`` holds the model
description, ``transforms`` the companion-transform solver the limits are
built from, ``risk`` the risk formulas and penalty tuning, ``montecarlo``
the simulation side, ``experiments`` the config-driven CSV drivers, and
``cli`` the command-line front end.
"""

from .exceptions import (
    DecompositionFailureError,
    DomainError,
    LengthMismatchError,
    NoConvergenceError,
    NonFiniteRiskError,
    NonFiniteValueError,
    NonPositiveEigenvalueError,
    NormalizationViolationError,
    OrderViolationError,
    RidgeLimitsError,
    SchemaError,
    SingularDerivativeError,
    SingularPriorError,
    SourceMismatchError,
    UnknownParameterError,
    WeightsDoNotSumToOneError,
)
from .experiments import (
    CONFIG_SCHEMA,
    PRESETS,
    SWEEPABLE,
    ExperimentConfig,
    interior_local_maxima,
    parse_config,
    run_experiment,
    sweep,
)
from .montecarlo import (
    Dataset,
    DesignConditional,
    McEstimate,
    SimConfig,
    apportion,
    conditional_expected_risk,
    empirical_trace_limits,
    excess_risk,
    oracle_conditional_risk,
    oracle_fit,
    replicate,
    ridge_fit,
    sample_dataset,
    sample_design,
    trace_limits_theory,
)
from .risk import (
    OracleReference,
    RiskBreakdown,
    asymptotic_risk,
    closed_form_corollary1,
    golden_section,
    interpolation_optimality,
    optimal_lambda,
    oracle_risk_reference,
    risk_derivative,
    strong_weak_risk,
)
from .spectral import (
    AtomicSpectrum,
    ProblemSpec,
    SourceFunction,
    caption_normalized_source,
    make_atomic_spectrum,
    source_from_parameter,
    spectral_integral,
    spectrum_from_eigenvalues,
    strong_weak_model,
)
from .transforms import (
    CompanionEval,
    bias_integrand,
    companion_derivative,
    companion_second_derivative,
    solve_companion,
    solve_companion_ridgeless,
    stieltjes_from_companion,
    theta_phi,
    two_atom_ridgeless_closed_form,
)

__version__ = "0.1.0"

__all__ = [
    "AtomicSpectrum",
    "CompanionEval",
    "CONFIG_SCHEMA",
    "Dataset",
    "DecompositionFailureError",
    "DesignConditional",
    "DomainError",
    "ExperimentConfig",
    "LengthMismatchError",
    "McEstimate",
    "NoConvergenceError",
    "NonFiniteRiskError",
    "NonFiniteValueError",
    "NonPositiveEigenvalueError",
    "NormalizationViolationError",
    "OracleReference",
    "OrderViolationError",
    "PRESETS",
    "ProblemSpec",
    "RidgeLimitsError",
    "RiskBreakdown",
    "SchemaError",
    "SimConfig",
    "SingularDerivativeError",
    "SingularPriorError",
    "SourceFunction",
    "SourceMismatchError",
    "SWEEPABLE",
    "UnknownParameterError",
    "WeightsDoNotSumToOneError",
    "apportion",
    "asymptotic_risk",
    "bias_integrand",
    "caption_normalized_source",
    "closed_form_corollary1",
    "companion_derivative",
    "companion_second_derivative",
    "conditional_expected_risk",
    "empirical_trace_limits",
    "excess_risk",
    "golden_section",
    "interior_local_maxima",
    "interpolation_optimality",
    "make_atomic_spectrum",
    "optimal_lambda",
    "oracle_conditional_risk",
    "oracle_fit",
    "oracle_risk_reference",
    "parse_config",
    "replicate",
    "ridge_fit",
    "risk_derivative",
    "run_experiment",
    "sample_dataset",
    "sample_design",
    "solve_companion",
    "solve_companion_ridgeless",
    "source_from_parameter",
    "spectral_integral",
    "spectrum_from_eigenvalues",
    "stieltjes_from_companion",
    "strong_weak_model",
    "strong_weak_risk",
    "sweep",
    "theta_phi",
    "trace_limits_theory",
    "two_atom_ridgeless_closed_form",
]
