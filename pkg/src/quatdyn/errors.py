"""Exception hierarchy shared by every quatdyn module."""


class QuatDynError(Exception):
    """Base class for all package errors."""


class DomainError(QuatDynError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConfigError(QuatDynError, ValueError):
    """A field specification or run configuration is malformed."""


class WrongFamily(QuatDynError, ValueError):
    """The operation does not apply to this equation family."""


class WrongRegime(QuatDynError, ValueError):
    """The parameters fall outside the regime an analysis is valid for."""


class SingularLocus(QuatDynError, ArithmeticError):
    """Evaluation point too close to a denominator's zero set."""


class IntegrationError(QuatDynError, RuntimeError):
    """Base class for failures inside the ODE integrator."""

    def __init__(self, message, t=None, state=None):
        super().__init__(message)
        self.t = t
        self.state = state


class StepSizeUnderflow(IntegrationError):
    """Step size fell below the resolvable limit; carries the last good state."""


class NonFiniteRHS(IntegrationError):
    """The vector field returned NaN or infinity."""


class DomainViolation(DomainError):
    """A torus level pair (h, f) lies outside the parametrizable domain."""


class QuadratureFailure(QuatDynError, RuntimeError):
    """Adaptive quadrature could not reach the requested tolerance."""


class NoBracket(QuatDynError, RuntimeError):
    """Scanning found no sign change for the requested root."""
