"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Raised when inputs are structurally invalid (bad grid, bad scheme, bad flags)."""


class AnalysisError(RuntimeError):
    """Raised when an analysis precondition fails at runtime.

    Example: an interval sequence requires each backward cubic to have a
    single real root; if a requested parameter regime violates that, the
    computation cannot continue meaningfully.
    """
