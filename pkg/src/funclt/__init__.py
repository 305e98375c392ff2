"""Simulation and verification toolkit for limit theorems of functional data.

The package models triangular arrays of independent random elements of a
discretized L2([0, 1]) space, estimates the classical array-CLT
hypotheses (Lindeberg, Lyapunov) by seeded Monte Carlo, recovers
partially observed elements by conditional-Gaussian draws, and certifies
the Gaussian limits of complete and recovered row sums against
closed-form targets.  Everything is driven by counter-addressed random
streams, so results are reproducible bit for bit at any worker count.
"""

from .arrays import (
    ArraySpec,
    CoefficientLaw,
    Sample,
    analytic_covariance,
    empirical_covariance,
    empirical_covariance_report,
    projection_coefficients,
    row_covariance_sum,
    sample_coefficients,
    sample_element,
    sqrt_row_scaling,
)
from .conditions import (
    ConditionReport,
    DominationCheck,
    TrendReport,
    condition_trend,
    covariance_sum_convergence,
    lindeberg_functional,
    lyapunov_dominates_lindeberg,
    lyapunov_functional,
    second_moment_sum,
)
from .experiment import (
    ConfigError,
    ExperimentConfig,
    ExperimentError,
    RunManifest,
    config_hash,
    config_to_dict,
    list_scenarios,
    load_config,
    make_mechanism,
    parse_config_dict,
    run,
)
from .gauss import (
    coefficient_posterior,
    coefficient_posterior_batch,
    coefficient_ridge,
    kernel_ridge,
)
from .imputation import (
    ConditionalLaw,
    CovarianceError,
    Eq1Audit,
    PartialElement,
    UnsupportedLawError,
    assemble_partial,
    condition_gaussian,
    impute_values_batch,
    lemma_eq1_audit,
    partial_covariance_empirical,
)
from .io import (
    grid_function_from_csv,
    grid_function_to_csv,
    kernel_from_csv,
    kernel_to_csv,
    partial_element_to_csv,
    patterns_from_csv,
    patterns_to_csv,
    samples_to_csv,
)
from .l2 import (
    Grid,
    GridFunction,
    GridMismatchError,
    Kernel,
    fourier_basis,
    hs_operator_norm,
    inner_product,
    kernel_l2_norm,
    norm_l2,
    pairing,
    tensor_product,
    trapezoid_grid,
    uniform_grid,
)
from .lemmas import (
    BoundCheck,
    ComplexSeq,
    char_expansion_residual,
    complex_product_bound,
    product_limit_check,
    taylor_remainder_bound,
)
from .missingness import (
    ConditioningError,
    Mechanism,
    MissingnessPattern,
    mar_threshold,
    mar_witness_test,
    mcar_bernoulli,
    mcar_interval,
    sample_pattern,
    split,
)
from .normality import (
    CharEstimate,
    NormalityReport,
    PairedNormalityReport,
    clt_verify,
    empirical_cf,
    gaussian_target_cf,
    ks_null_quantile,
    ks_statistic,
    partial_clt_verify,
    row_sum_samples,
)
from .presets import SCENARIOS, Scenario, get_scenario
from .rng import derive_seed, substream

__version__ = "0.1.0"

__all__ = [
    "ArraySpec",
    "BoundCheck",
    "CharEstimate",
    "CoefficientLaw",
    "ComplexSeq",
    "ConditionReport",
    "ConditionalLaw",
    "ConditioningError",
    "ConfigError",
    "CovarianceError",
    "DominationCheck",
    "Eq1Audit",
    "ExperimentConfig",
    "ExperimentError",
    "Grid",
    "GridFunction",
    "GridMismatchError",
    "Kernel",
    "Mechanism",
    "MissingnessPattern",
    "NormalityReport",
    "PairedNormalityReport",
    "PartialElement",
    "RunManifest",
    "SCENARIOS",
    "Sample",
    "Scenario",
    "TrendReport",
    "UnsupportedLawError",
    "analytic_covariance",
    "assemble_partial",
    "char_expansion_residual",
    "clt_verify",
    "coefficient_posterior",
    "coefficient_posterior_batch",
    "coefficient_ridge",
    "complex_product_bound",
    "condition_gaussian",
    "condition_trend",
    "config_hash",
    "config_to_dict",
    "covariance_sum_convergence",
    "derive_seed",
    "empirical_cf",
    "empirical_covariance",
    "empirical_covariance_report",
    "fourier_basis",
    "gaussian_target_cf",
    "get_scenario",
    "grid_function_from_csv",
    "grid_function_to_csv",
    "hs_operator_norm",
    "impute_values_batch",
    "inner_product",
    "kernel_from_csv",
    "kernel_l2_norm",
    "kernel_ridge",
    "kernel_to_csv",
    "ks_null_quantile",
    "ks_statistic",
    "lemma_eq1_audit",
    "lindeberg_functional",
    "list_scenarios",
    "load_config",
    "lyapunov_dominates_lindeberg",
    "lyapunov_functional",
    "make_mechanism",
    "mar_threshold",
    "mar_witness_test",
    "mcar_bernoulli",
    "mcar_interval",
    "norm_l2",
    "pairing",
    "parse_config_dict",
    "partial_clt_verify",
    "partial_covariance_empirical",
    "partial_element_to_csv",
    "patterns_from_csv",
    "patterns_to_csv",
    "product_limit_check",
    "projection_coefficients",
    "row_covariance_sum",
    "row_sum_samples",
    "run",
    "sample_coefficients",
    "sample_element",
    "sample_pattern",
    "samples_to_csv",
    "second_moment_sum",
    "split",
    "sqrt_row_scaling",
    "substream",
    "taylor_remainder_bound",
    "tensor_product",
    "trapezoid_grid",
    "uniform_grid",
]
