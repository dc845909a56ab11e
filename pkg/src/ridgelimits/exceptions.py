"""Exception types shared across the package.

Every error raised by validation or numerics derives from
:class:`RidgeLimitsError` plus the closest builtin category, so callers can
catch broadly (``except RidgeLimitsError``) or precisely.
"""


class RidgeLimitsError(Exception):
    """Base class for all package-specific errors."""


class NonPositiveEigenvalueError(RidgeLimitsError, ValueError):
    """An eigenvalue atom is zero or negative."""


class WeightsDoNotSumToOneError(RidgeLimitsError, ValueError):
    """Atom weights do not sum to one within tolerance."""


class OrderViolationError(RidgeLimitsError, ValueError):
    """Arguments violate a required ordering (e.g. strong < weak eigenvalue)."""


class LengthMismatchError(RidgeLimitsError, ValueError):
    """Paired array arguments have different lengths."""


class NonFiniteValueError(RidgeLimitsError, ValueError):
    """A supplied or computed value is NaN or infinite."""


class DomainError(RidgeLimitsError, ValueError):
    """The requested evaluation point lies outside the valid domain."""


class NoConvergenceError(RidgeLimitsError, RuntimeError):
    """Fixed-point iteration and the bisection fallback both failed."""


class SingularDerivativeError(RidgeLimitsError, ArithmeticError):
    """The derivative denominator is not strictly positive."""


class SourceMismatchError(RidgeLimitsError, ValueError):
    """Tabulated source values do not match the requested closed-form variant."""


class NormalizationViolationError(RidgeLimitsError, ValueError):
    """Inputs violate a normalization the formula requires."""


class NonFiniteRiskError(RidgeLimitsError, ArithmeticError):
    """A risk evaluation produced a NaN or infinite value."""


class SingularPriorError(RidgeLimitsError, ValueError):
    """The oracle prior is singular (a source value of zero needs inverting)."""


class DecompositionFailureError(RidgeLimitsError, RuntimeError):
    """A matrix factorization did not converge."""


class UnknownParameterError(RidgeLimitsError, ValueError):
    """A sweep names a parameter that does not exist."""


class SchemaError(RidgeLimitsError, ValueError):
    """A configuration document violates the schema; carries the field path."""
