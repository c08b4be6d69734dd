"""Exception types shared across the package."""


class LtimaxError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(LtimaxError, ValueError):
    """Invalid configuration value or unknown configuration key."""


class GraphLoadError(LtimaxError, ValueError):
    """Edge-list input could not be parsed."""

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class BudgetError(LtimaxError, ValueError):
    """Requested seed budget is infeasible for the given graph."""


class EnumerationError(LtimaxError, ValueError):
    """Exact spread computation refused because the instance is too large."""


class ParameterError(LtimaxError, ValueError):
    """Model parameter shapes or values are inconsistent."""


class StateError(LtimaxError, RuntimeError):
    """Operation requires cached state that is missing or stale."""


class ContractError(LtimaxError, ValueError):
    """Caller violated an operation precondition."""
