"""Semantic exception hierarchy.

Every failed precondition raises a typed error naming what was violated;
callers (and the CLI exit-code mapping) dispatch on these types rather
than on message text.
"""


class PolynormError(Exception):
    """Base class for all library errors."""


class DomainError(PolynormError, ValueError):
    """An argument is outside the mathematical domain of the operation."""


class IntegrationError(PolynormError, RuntimeError):
    """Quadrature failed to converge to the requested tolerance.

    Carries the last estimate and the estimated error so callers can
    decide whether the partial result is still usable.
    """

    def __init__(self, message: str, estimate: float, estimated_error: float):
        super().__init__(message)
        self.estimate = estimate
        self.estimated_error = estimated_error


class BracketError(PolynormError, ValueError):
    """A root is not bracketed, or bracket expansion failed."""


class SingularMatrixError(PolynormError, ValueError):
    """The coefficient matrix is singular to working precision."""


class NotPositiveDefiniteError(PolynormError, ValueError):
    """A matrix required to be symmetric positive definite is not."""


class ConditioningError(PolynormError, RuntimeError):
    """A fit was refused because the system is too ill-conditioned.

    Carries the determinant and pivot ratio of the refused factorization.
    """

    def __init__(self, message: str, det: float | None = None,
                 pivot_ratio: float | None = None):
        super().__init__(message)
        self.det = det
        self.pivot_ratio = pivot_ratio


class UnsupportedMomentError(PolynormError, ValueError):
    """The distribution parameterization has no finite mean or variance."""


class InsufficientSampleError(PolynormError, ValueError):
    """Sample too small for the requested moment order."""


class InfeasibleCorrelationError(PolynormError, ValueError):
    """The requested correlation is outside the attainable bounds.

    Carries the feasible (lower, upper) interval.
    """

    def __init__(self, message: str, bounds: tuple[float, float]):
        super().__init__(message)
        self.bounds = bounds


class DegenerateMarginalError(PolynormError, ValueError):
    """A marginal has (numerically) zero standard deviation."""


class MonotonicityError(PolynormError, RuntimeError):
    """The correlation-mapping polynomial is not nondecreasing on [-1, 1]."""


class SpecError(PolynormError, ValueError):
    """A config file violates the schema. Carries the offending key."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key


class CliUsageError(PolynormError, ValueError):
    """Bad command-line arguments."""
