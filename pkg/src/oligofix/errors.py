"""Exception types shared across the package."""


class EvaluationError(RuntimeError):
    """A demand, cost, or payoff evaluation raised or returned a non-finite value."""


class NumericsError(RuntimeError):
    """A numeric routine failed to reach its requested accuracy."""


class NoBracketError(NumericsError):
    """A scalar root find was given an interval without a sign change."""


class MaxIterExceededError(NumericsError):
    """An iterative routine hit its iteration cap before converging."""


class InvalidConstantsError(ValueError):
    """Contraction constants violate the admissibility condition."""


class ConfigError(ValueError):
    """A run configuration is malformed; ``field`` names the offending entry."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field
