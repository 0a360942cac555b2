"""Exception types shared across the toolkit."""


class FesdkitError(Exception):
    """Base class for all toolkit errors."""


class ExprSyntaxError(FesdkitError):
    """Malformed expression text.

    Carries the character position and a hint of what was expected so the
    CLI can point at the offending token.
    """

    def __init__(self, message, position, expected=None):
        self.position = position
        self.expected = expected
        hint = f" (expected {expected})" if expected else ""
        super().__init__(f"{message} at position {position}{hint}")


class UnknownSymbol(FesdkitError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unknown symbol '{name}'")


class DomainError(FesdkitError):
    """Evaluation hit log/sqrt of a negative number, division by zero, or
    a non-finite intermediate; carries the offending node."""

    def __init__(self, message, node=None):
        self.node = node
        super().__init__(message)


class DimensionMismatch(FesdkitError):
    pass


class InvalidSignMatrix(FesdkitError):
    pass


class SimplexCheckFailed(FesdkitError):
    def __init__(self, message, alpha=None):
        self.alpha = alpha
        super().__init__(message)


class UnsupportedStageCount(FesdkitError):
    pass


class TableauNotStifflyAccurate(FesdkitError):
    pass


class UnknownStrategy(FesdkitError):
    pass


class NlpError(FesdkitError):
    pass


class SingularKkt(NlpError):
    pass


class NanDetected(NlpError):
    def __init__(self, message, node=None):
        self.node = node
        super().__init__(message)


class StepFailed(FesdkitError):
    """A simulation step's solve did not converge; carries the partial
    trajectory accumulated so far."""

    def __init__(self, step_index, status, trajectory=None):
        self.step_index = step_index
        self.status = status
        self.trajectory = trajectory
        super().__init__(f"simulation step {step_index} failed with status {status}")


class UnknownBenchmark(FesdkitError):
    pass


class InfeasibleBounds(FesdkitError):
    pass


class ConfigError(FesdkitError):
    """Bad run-configuration or model file content."""
