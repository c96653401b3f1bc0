"""Order-statistic spacing laws for invertible-CDF families.

Closed-form spacing densities and moments (uniform, exponential,
logistic, Gumbel), the quantile-derivative estimator of the expected
spacing for ten families, a quadrature oracle, and a reproducible
Monte Carlo harness for measuring the estimator's approximation error.
"""

from spacings.distributions import (
    DEFAULT_PARAMS,
    FAMILIES,
    DistributionSpec,
    cdf,
    inv_cdf,
    inv_cdf_deriv,
    parse_distribution,
    pdf,
    sample_sorted,
)
from spacings.exact import (
    ClosedFormValue,
    LogisticSecondMomentTerms,
    SpacingQuery,
    UnsupportedFamilyError,
    expected_spacing,
    exp_expected,
    exp_normalized_expected,
    exp_spacing_density,
    exp_variance,
    gumbel_expected,
    gumbel_expected_raw,
    gumbel_spacing_density,
    logistic_expected_exact,
    logistic_second_moment,
    logistic_spacing_density,
    logistic_variance,
    spacing_variance,
    uniform_expected,
    uniform_spacing_density,
    uniform_variance,
)
from spacings.estimator import (
    EstimatorValue,
    QuantileGrid,
    estimate_closed,
    estimate_derivative,
    estimate_finite_difference,
)
from spacings.numerics import (
    BigRational,
    HPFloat,
    PrecisionIssue,
    PrecisionPolicy,
    QuadratureError,
    SeriesConvergenceError,
    beta_int,
    dilog,
    hyp2f1,
    quad_adaptive,
)
from spacings.simulate import (
    DegenerateFitError,
    ErrorCurve,
    MinErrFit,
    SimConfig,
    SpacingAccumulator,
    error_curve,
    fit_min_error,
    integrate_expected,
    integrate_second_moment,
    run_simulation,
)

__all__ = [
    "BigRational",
    "ClosedFormValue",
    "DEFAULT_PARAMS",
    "DegenerateFitError",
    "DistributionSpec",
    "ErrorCurve",
    "EstimatorValue",
    "FAMILIES",
    "HPFloat",
    "LogisticSecondMomentTerms",
    "MinErrFit",
    "PrecisionIssue",
    "PrecisionPolicy",
    "QuadratureError",
    "QuantileGrid",
    "SeriesConvergenceError",
    "SimConfig",
    "SpacingAccumulator",
    "SpacingQuery",
    "UnsupportedFamilyError",
    "beta_int",
    "cdf",
    "dilog",
    "error_curve",
    "estimate_closed",
    "estimate_derivative",
    "estimate_finite_difference",
    "expected_spacing",
    "exp_expected",
    "exp_normalized_expected",
    "exp_spacing_density",
    "exp_variance",
    "fit_min_error",
    "gumbel_expected",
    "gumbel_expected_raw",
    "gumbel_spacing_density",
    "hyp2f1",
    "integrate_expected",
    "integrate_second_moment",
    "inv_cdf",
    "inv_cdf_deriv",
    "logistic_expected_exact",
    "logistic_second_moment",
    "logistic_spacing_density",
    "logistic_variance",
    "parse_distribution",
    "pdf",
    "quad_adaptive",
    "run_simulation",
    "sample_sorted",
    "spacing_variance",
    "uniform_expected",
    "uniform_spacing_density",
    "uniform_variance",
]

__version__ = "0.1.0"
