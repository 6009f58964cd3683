"""Numerical laboratory for hidden-direction (non-Gaussian component)
detection experiments in the statistical-query model."""

__version__ = "0.1.0"

from .errors import (BudgetError, ConfigurationError, ContractViolation,
                     IllConditionedError, InfeasibleError, LabError,
                     ResourceLimitError)

__all__ = [
    "__version__",
    "LabError", "ContractViolation", "ResourceLimitError", "InfeasibleError",
    "IllConditionedError", "BudgetError", "ConfigurationError",
]
