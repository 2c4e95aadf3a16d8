"""Exception hierarchy shared by every hurstlab module."""


class HurstlabError(Exception):
    """Base class for toolkit errors."""


class DomainError(HurstlabError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class ValidationError(HurstlabError, ValueError):
    """Input data failed a structural or numerical validation."""


class ConfigurationError(HurstlabError, ValueError):
    """Inconsistent run configuration (grids, steps, truncation)."""


class NumericalError(HurstlabError, ArithmeticError):
    """A numerical routine did not reach its tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class ModelError(HurstlabError):
    """Covariance model inconsistent (e.g. not positive semidefinite)."""


class BudgetError(HurstlabError):
    """Requested work exceeds a configured enumeration budget."""
