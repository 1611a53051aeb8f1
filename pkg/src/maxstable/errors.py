"""Exception hierarchy for the maxstable package."""


class MaxStableError(Exception):
    """Base class for all package errors."""


class BadGridError(MaxStableError):
    """Brownian grid points are not strictly increasing and positive."""


class NonPositiveDefiniteError(MaxStableError):
    """Covariance matrix has no Cholesky factorization."""


class DimensionMismatchError(MaxStableError):
    """Vector length does not match the design dimension."""


class ThresholdNonPositiveError(MaxStableError):
    """Exceedance threshold must be strictly positive."""


class NoExceedanceError(MaxStableError):
    """No coordinate of the vector exceeds the threshold."""


class NoRootError(MaxStableError):
    """Cramer root does not exist for the given drift."""


class NonTerminationError(MaxStableError):
    """A loop that terminates almost surely hit its safety cap (bug canary)."""


class BudgetTooSmallError(MaxStableError):
    """Budget is below e^e, where the triple-log rate is undefined."""


class EmptyBudgetError(MaxStableError):
    """Budget too small to afford a single estimator replication."""


class SingularCovarianceError(MaxStableError):
    """Sample covariance is singular (KDE baseline)."""


class StencilTooLargeError(MaxStableError):
    """Finite-difference stencil limited to d <= 4 (2^d corners)."""


class ConfigError(MaxStableError):
    """Invalid run configuration (CLI exit code 2)."""
