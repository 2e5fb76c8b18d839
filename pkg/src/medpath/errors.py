"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: input problems exit 2, estimation
failures exit 3, anything else exit 4.
"""


class MedpathError(Exception):
    """Base class for all package-specific errors."""


class InputError(MedpathError, ValueError):
    """Invalid user input: bad values, mismatched shapes, unusable data."""


class DomainError(InputError):
    """Argument outside the mathematical domain of an operation."""


class SingularDesignError(InputError):
    """Design matrix is rank deficient."""


class InsufficientDataError(InputError):
    """Too few observations for the requested fit."""


class UnsupportedModelError(InputError):
    """Model configuration outside the supported likelihood patterns."""


class EstimationError(MedpathError):
    """An estimation procedure failed to produce usable estimates."""


class NonConvergenceError(EstimationError):
    """Iterative fit did not converge; carries the last iterate."""

    def __init__(self, message, last_fit=None):
        super().__init__(message)
        self.last_fit = last_fit
