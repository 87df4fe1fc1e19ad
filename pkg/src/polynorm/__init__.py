"""Polynomial normal transformation toolkit.

Fit X = sum_k a_k Z^k models to arbitrary continuous marginals (by
probability-weighted-moment or percentile matching), map a target
correlation matrix into the equivalent normal-space matrix through a
closed-form polynomial equation, and generate reproducible random
vectors with the prescribed marginals and correlations.
"""

from .errors import (
    BracketError,
    ConditioningError,
    DegenerateMarginalError,
    DomainError,
    InfeasibleCorrelationError,
    InsufficientSampleError,
    IntegrationError,
    MonotonicityError,
    NotPositiveDefiniteError,
    PolynormError,
    SingularMatrixError,
    SpecError,
    UnsupportedMomentError,
)
from .numerics import QuadratureSpec, DEFAULT_QUADRATURE
from .distributions import TargetDistribution, numeric_quantile, FAMILIES
from .poly_model import PolynomialModel, affine_model, normal_even_moment, MAX_DEGREE
from .fit_pwm import (
    NormalPwmMatrix,
    PwmVector,
    fit_pwm,
    fit_pwm_distribution,
    fit_pwm_sample,
    normal_pwm_matrix,
    pwm_from_distribution,
    pwm_from_sample,
)
from .fit_percentile import NodePlan, build_nodes, fit_percentile
from .diagnostics import FitReport, epsilon_report, density_compare
from .correlation import (
    RhoPolynomial,
    bivariate_normal_moment,
    build_rho_polynomial,
    build_Rz,
    rho_x_bounds,
    solve_rho_z,
)
from .sampler import (
    RngSpec,
    VectorModel,
    build_vector_model,
    generate,
    normal_stream,
    sample_correlation,
)

__version__ = "0.1.0"

__all__ = [
    "QuadratureSpec", "DEFAULT_QUADRATURE",
    "TargetDistribution", "numeric_quantile", "FAMILIES",
    "PolynomialModel", "affine_model", "normal_even_moment", "MAX_DEGREE",
    "PwmVector", "NormalPwmMatrix", "pwm_from_distribution", "pwm_from_sample",
    "normal_pwm_matrix", "fit_pwm", "fit_pwm_distribution", "fit_pwm_sample",
    "NodePlan", "build_nodes", "fit_percentile",
    "FitReport", "epsilon_report", "density_compare",
    "RhoPolynomial", "bivariate_normal_moment", "build_rho_polynomial",
    "rho_x_bounds", "solve_rho_z", "build_Rz",
    "RngSpec", "VectorModel", "build_vector_model", "generate",
    "normal_stream", "sample_correlation",
    "PolynormError", "DomainError", "IntegrationError", "BracketError",
    "SingularMatrixError", "NotPositiveDefiniteError", "ConditioningError",
    "UnsupportedMomentError", "InsufficientSampleError",
    "InfeasibleCorrelationError", "DegenerateMarginalError",
    "MonotonicityError", "SpecError",
]
