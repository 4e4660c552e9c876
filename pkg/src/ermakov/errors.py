"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class ErmakovError(Exception):
    """Base class for every error raised by this package."""


class ExprSyntaxError(ErmakovError, ValueError):
    """Malformed expression text."""

    def __init__(self, message: str, position: int, source: str = ""):
        self.position = position
        self.source = source
        pointer = ""
        if source:
            pointer = f"\n  {source}\n  {' ' * position}^"
        super().__init__(f"{message} at position {position}{pointer}")


class UnknownIdentifierError(ExprSyntaxError):
    """An identifier that is neither the free variable nor a known function."""


class DomainError(ErmakovError, ArithmeticError):
    """Expression evaluated outside its real domain."""

    def __init__(self, message: str, node=None):
        self.node = node
        super().__init__(message)


class QuadratureError(ErmakovError):
    """Adaptive quadrature failed to converge or met a NaN."""


class SingularStateError(ErmakovError, ValueError):
    """State lies on a coordinate singularity of the system."""


class IntegrationError(ErmakovError):
    """Integrator could not continue; ``last_state`` is the last accepted state."""

    def __init__(self, message: str, last_state=None):
        self.last_state = last_state
        super().__init__(message)


class StepSizeUnderflow(IntegrationError):
    pass


class MaxStepsExceeded(IntegrationError):
    pass


class NotConservativeError(ErmakovError, ValueError):
    """A conservative, autonomous system was required."""


class ConditionFailedError(ErmakovError):
    """A Noether symmetry condition does not hold for the given potential."""


class TurningPointError(ErmakovError):
    """The angular quadrature hit a turning point where I0 equals Fbar(theta)."""

    def __init__(self, message: str, bracket: tuple[float, float]):
        self.bracket = bracket
        super().__init__(message)


class RhoZeroCrossing(ErmakovError):
    """The auxiliary oscillator solution changed sign; the time map is singular."""

    def __init__(self, message: str, bracket: tuple[float, float]):
        self.bracket = bracket
        super().__init__(message)
