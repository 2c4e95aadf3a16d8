"""Simulation and verification toolkit for fBm as a field in (time, Hurst)."""
__version__ = "0.1.0"

from .errors import (  # noqa: E402
    BudgetError,
    ConfigurationError,
    DomainError,
    HurstlabError,
    ModelError,
    NumericalError,
    ValidationError,
)

__all__ = ["__version__", "BudgetError", "ConfigurationError", "DomainError", "HurstlabError",
           "ModelError", "NumericalError", "ValidationError"]
