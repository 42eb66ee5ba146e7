"""Quaternion polynomial ODEs: fields, first integrals, integration and structure analyses."""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    DomainError,
    DomainViolation,
    IntegrationError,
    NoBracket,
    NonFiniteRHS,
    QuadratureFailure,
    QuatDynError,
    SingularLocus,
    StepSizeUnderflow,
    WrongFamily,
    WrongRegime,
)
from .quaternion import Quaternion, binomial_expand, similarity_normalize  # noqa: E402
from .fields import Family, FieldSpec, eval_field, component_field  # noqa: E402
from .invariants import get_descriptor, lie_derivative, poisson_bracket  # noqa: E402
from .integrator import EventSpec, Trajectory, integrate, limit_set_probe  # noqa: E402

__all__ = [
    "ConfigError", "DomainError", "DomainViolation", "IntegrationError", "NoBracket",
    "NonFiniteRHS", "QuadratureFailure", "QuatDynError", "SingularLocus", "StepSizeUnderflow",
    "WrongFamily", "WrongRegime",
    "Quaternion", "binomial_expand", "similarity_normalize",
    "Family", "FieldSpec", "eval_field", "component_field",
    "get_descriptor", "lie_derivative", "poisson_bracket",
    "EventSpec", "Trajectory", "integrate", "limit_set_probe",
]
