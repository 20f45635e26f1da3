"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid static configuration (shapes, ranges, incompatible options)."""


class NumericError(ArithmeticError):
    """Non-finite values or a numeric routine that failed to converge."""


class UsageError(RuntimeError):
    """API misuse at runtime, e.g. stepping a finished episode."""


class ValidationError(ValueError):
    """Experiment-config validation failure; carries every violation."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))
