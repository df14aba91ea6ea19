"""Exception and warning types shared across the package."""


class SnlevyError(Exception):
    """Base class for all package errors."""


class DomainError(SnlevyError, ValueError):
    """An argument is outside the domain of the requested quantity."""


class SolverError(SnlevyError, RuntimeError):
    """A root finder failed to converge; carries the last bracket."""

    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket


class NumericError(SnlevyError, RuntimeError):
    """A numerical evaluation (inversion, quadrature, overflow) failed."""


class DegenerateIntervalError(SnlevyError, ValueError):
    """A corridor identity was requested on a degenerate interval."""


class PermanentalExistenceError(SnlevyError, ValueError):
    """det(I + Lambda G) <= 0: no permanental law exists for this kernel/weights."""

    def __init__(self, message, determinant):
        super().__init__(message)
        self.determinant = determinant


class EstimationError(SnlevyError, RuntimeError):
    """A Monte Carlo estimator was asked for with insufficient or empty data."""


class ComparabilityError(SnlevyError, ValueError):
    """Two Monte Carlo runs are not comparable (seed/config mismatch)."""


class ConventionWarning(UserWarning):
    """A boundary convention (e.g. Phi'(0) = inf) determined the result."""


class DiscretizationWarning(UserWarning):
    """A mesh or step size looks too coarse for the requested computation."""
