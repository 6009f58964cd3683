"""Exception types shared across the package."""


class LabError(Exception):
    """Base class for all package-specific errors."""


class ContractViolation(LabError, ValueError):
    """An argument violates a documented precondition (bad shapes, non-orthonormal
    frames, evaluation at an atom location, ...)."""


class ResourceLimitError(LabError):
    """A dense-tensor request exceeds the storage budget."""


class InfeasibleError(LabError):
    """A constructive search certified that no admissible object exists at the
    requested parameters.  Carries whatever diagnostics the search produced."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = dict(diagnostics)


class IllConditionedError(LabError):
    """A linear solve exceeded the documented conditioning budget."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class BudgetError(LabError):
    """A sampling or query budget is too small for the requested guarantee."""


class ConfigurationError(LabError):
    """A runtime configuration (e.g. clip level) fails its admissibility check."""
