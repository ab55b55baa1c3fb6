"""
Exception hierarchy for the toolkit.

Config and input problems derive from ValueError, numerical failures from
ArithmeticError, so callers outside the toolkit can catch them generically.
"""


class IdmOddsError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(IdmOddsError, ValueError):
    """Run configuration failed schema or semantic validation."""


class InputDataError(IdmOddsError, ValueError):
    """A data file could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DomainError(IdmOddsError, ValueError):
    """A rate or population function was evaluated outside its domain."""


class VariantMismatchError(DomainError):
    """An operation needs a different incidence variant."""


class PreconditionError(DomainError):
    """An operation's documented precondition does not hold."""


class NumericalError(IdmOddsError, ArithmeticError):
    """Base class for numerical failures."""


class QuadratureError(NumericalError):
    """Adaptive quadrature did not reach its tolerance."""


class RootFindingError(NumericalError):
    """Cumulative-hazard inversion did not converge."""


class SingularHessianError(NumericalError):
    """The observed information matrix cannot be inverted."""

    def __init__(self, message, condition_number=None):
        self.condition_number = condition_number
        if condition_number is not None:
            message = f"{message} (condition number {condition_number:.3e})"
        super().__init__(message)
