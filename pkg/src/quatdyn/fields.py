"""Equation families as evaluatable vector fields on R^4.

Every family is a polynomial right-hand side built from Hamilton products.
``eval_field`` evaluates it through quaternion arithmetic; ``component_field``
evaluates the hand-expanded real component systems instead, and the two are
compared in the test-suite.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Any, Callable

import numpy as np

from .errors import ConfigError, DomainError, WrongFamily, WrongRegime
from .quaternion import (
    ONE,
    ZERO,
    Quaternion,
    as_quaternion,
    binomial_expand,
    delta_sq,
    inverse,
    similarity_normalize,
)

__all__ = [
    "Family",
    "FieldSpec",
    "TangentVector",
    "REGIME_EPS",
    "eval_field",
    "component_field",
    "component_matrix_linear",
    "affine_reduce",
    "field_function",
]

TangentVector = Quaternion

REGIME_EPS = 1e-14


class Family(str, Enum):
    HOMOGENEOUS = "Homogeneous"
    BERNOULLI = "Bernoulli"
    CUBIC = "Cubic"
    LINEAR_LL = "LinearLL"
    LINEAR_LCONJ = "LinearLConj"
    LINEAR_CONJL = "LinearConjL"
    AFFINE_L = "AffineL"
    AFFINE_R = "AffineR"

    @classmethod
    def parse(cls, name: str) -> Family:
        key = str(name).strip()
        for fam in cls:
            if key == fam.value or key.lower() == fam.value.lower():
                return fam
        try:
            return _ALIASES[key.lower()]
        except KeyError:
            raise ConfigError(f"unknown family {name!r}") from None

    @property
    def is_linear(self) -> bool:
        return self in (Family.LINEAR_LL, Family.LINEAR_LCONJ, Family.LINEAR_CONJL)

    @property
    def is_affine(self) -> bool:
        return self in (Family.AFFINE_L, Family.AFFINE_R)


_ALIASES = {
    "e1": Family.HOMOGENEOUS,
    "e5": Family.BERNOULLI,
    "e2": Family.BERNOULLI,
    "e3": Family.CUBIC,
    "esu1": Family.LINEAR_LL,
    "esu2": Family.LINEAR_LCONJ,
    "esu3": Family.LINEAR_CONJL,
    "e2.1-left": Family.AFFINE_L,
    "e2.1-right": Family.AFFINE_R,
}


def _is_zero(x: float) -> bool:
    return abs(x) <= REGIME_EPS


def _q_or_none(x) -> Quaternion | None:
    return None if x is None else as_quaternion(x)


@dataclass(frozen=True)
class FieldSpec:
    """One equation family with its parameters.

    ``Bernoulli`` is ``q' = a (c q - q^n)``, ``Cubic`` is
    ``q' = a (q - c0)(q + c0) q``, ``Homogeneous`` is ``q' = a q^n``; the
    linear families are ``aq + qb``, ``aq + conj(q) b``, ``aq + b conj(q)``
    and the affine ones ``b + aq`` and ``b + qa``.
    """

    family: Family
    a: Quaternion
    b: Quaternion | None = None
    c: Quaternion | None = None
    c0: float | None = None
    n: int | None = None
    _rhs: Callable = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        fam = self.family if isinstance(self.family, Family) else Family.parse(self.family)
        object.__setattr__(self, "family", fam)
        object.__setattr__(self, "a", as_quaternion(self.a))
        object.__setattr__(self, "b", _q_or_none(self.b))
        object.__setattr__(self, "c", _q_or_none(self.c))
        if self.c0 is not None:
            object.__setattr__(self, "c0", float(self.c0))
        if fam is Family.BERNOULLI and self.c is None and self.c0 is not None:
            object.__setattr__(self, "c", Quaternion(self.c0, 0.0, 0.0, 0.0))
        if self.n is not None:
            if int(self.n) != self.n:
                raise ConfigError(f"n must be an integer, got {self.n!r}")
            object.__setattr__(self, "n", int(self.n))
        self._validate()
        object.__setattr__(self, "_rhs", _build_rhs(self))

    def _validate(self):
        fam = self.family
        a_zero = self.a.norm_sq() == 0.0
        if fam.is_linear:
            if self.b is None:
                raise ConfigError(f"{fam.value} needs parameter b")
            if a_zero and self.b.norm_sq() == 0.0:
                raise ConfigError("a and b cannot both be zero")
            return
        if a_zero:
            raise ConfigError("parameter a must be non-zero")
        if fam in (Family.HOMOGENEOUS, Family.BERNOULLI):
            if self.n is None or self.n < 2:
                raise ConfigError(f"{fam.value} needs an integer n >= 2")
        if fam is Family.BERNOULLI:
            if self.c is None:
                raise ConfigError("Bernoulli needs parameter c (or c0 for real c)")
            if self.c.norm_sq() == 0.0:
                raise ConfigError("Bernoulli with c = 0 is the homogeneous equation")
        if fam is Family.CUBIC:
            if self.c0 is None or not self.c0 > 0.0:
                raise ConfigError("Cubic needs c0 > 0")
        if fam.is_affine and self.b is None:
            raise ConfigError(f"{fam.value} needs parameter b")

    # -- construction helpers -------------------------------------------------

    @classmethod
    def bernoulli(cls, a, c, n: int) -> FieldSpec:
        c = as_quaternion(c)
        return cls(Family.BERNOULLI, a, c=c, n=n)

    @classmethod
    def cubic(cls, a, c0: float) -> FieldSpec:
        return cls(Family.CUBIC, a, c0=c0)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> FieldSpec:
        if not isinstance(d, dict) or "family" not in d or "a" not in d:
            raise ConfigError('spec must be an object with at least "family" and "a"')
        unknown = set(d) - {"family", "a", "b", "c", "c0", "n"}
        if unknown:
            raise ConfigError(f"unknown spec keys: {sorted(unknown)}")
        try:
            return cls(
                Family.parse(d["family"]),
                d["a"],
                b=d.get("b"),
                c=d.get("c"),
                c0=d.get("c0"),
                n=d.get("n"),
            )
        except DomainError as exc:
            raise ConfigError(str(exc)) from exc
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"malformed spec: {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> FieldSpec:
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"spec is not valid JSON: {exc}") from exc

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"family": self.family.value, "a": self.a.tolist()}
        if self.b is not None:
            out["b"] = self.b.tolist()
        if self.c is not None:
            out["c"] = self.c.tolist()
        if self.c0 is not None and self.family is not Family.BERNOULLI:
            out["c0"] = self.c0
        if self.n is not None:
            out["n"] = self.n
        return out

    # -- frames and regimes ---------------------------------------------------

    @cached_property
    def _frame(self) -> tuple[FieldSpec, Quaternion]:
        a = self.a
        if not a.is_real():
            g, _ = similarity_normalize(a)
        elif self.c is not None and not self.c.is_real():
            g, _ = similarity_normalize(self.c)
        else:
            return self, ONE
        return self.conjugated(g), g

    def normalized(self) -> FieldSpec:
        """Equivalent spec under ``p = g q g^-1`` with ``a`` (or ``c``) in span{1, i}."""
        return self._frame[0]

    @property
    def frame(self) -> Quaternion:
        """The unit ``g`` that maps raw coordinates to the normalized frame."""
        return self._frame[1]

    def conjugated(self, g: Quaternion) -> FieldSpec:
        """Parameters after the change of variables ``p = g q g^-1`` (``g`` unit)."""
        gi = inverse(g)

        def tr(x):
            if x is None:
                return None
            y = g * x * gi
            return _snap(y, x)

        return FieldSpec(self.family, tr(self.a), b=tr(self.b), c=tr(self.c),
                         c0=self.c0 if self.family is not Family.BERNOULLI else None,
                         n=self.n)

    @cached_property
    def regime(self) -> dict[str, bool]:
        """Exact-zero tests on a +- conj(a) and c +- conj(c) in the normalized frame."""
        s = self.normalized()
        out = {
            "a_plus_conj_zero": _is_zero(s.a.q0),
            "a_minus_conj_zero": _is_zero(math.sqrt(delta_sq(s.a))),
        }
        if s.c is not None:
            out["c_minus_conj_zero"] = _is_zero(math.sqrt(delta_sq(s.c)))
            out["c_plus_conj_zero"] = _is_zero(s.c.q0)
        return out

    @property
    def c_real(self) -> float:
        """Real scalar ``c`` for Bernoulli, ``c0`` for Cubic."""
        if self.family is Family.BERNOULLI:
            return self.c.q0
        if self.c0 is None:
            raise WrongFamily(f"{self.family.value} has no c0")
        return self.c0

    def rhs(self, y: np.ndarray) -> np.ndarray:
        """Array-in, array-out right-hand side for the integrator."""
        return self._rhs(y)

    def __call__(self, q) -> Quaternion:
        return eval_field(self, q)


def _snap(y: Quaternion, ref: Quaternion) -> Quaternion:
    # keep exact zeros in j,k after rotating onto the i axis
    scale = max(abs(v) for v in ref) or 1.0
    return Quaternion(*(0.0 if abs(v) <= 1e-15 * scale else v for v in y))


def _power(q: Quaternion, n: int) -> Quaternion:
    # q^n lies in span{1, Im q}; building it there keeps zero components exactly zero
    s, v = binomial_expand(q, n)
    return Quaternion(s, v * q.q1, v * q.q2, v * q.q3)


def eval_field(spec: FieldSpec, q) -> TangentVector:
    """Right-hand side at ``q``, computed with Hamilton products."""
    q = as_quaternion(q)
    fam = spec.family
    a = spec.a
    if fam is Family.BERNOULLI:
        return a * (spec.c * q - _power(q, spec.n))
    if fam is Family.HOMOGENEOUS:
        return a * _power(q, spec.n)
    if fam is Family.CUBIC:
        c0 = spec.c0
        return a * (q - c0) * (q + c0) * q
    if fam is Family.LINEAR_LL:
        return a * q + q * spec.b
    if fam is Family.LINEAR_LCONJ:
        return a * q + q.conj() * spec.b
    if fam is Family.LINEAR_CONJL:
        return a * q + spec.b * q.conj()
    if fam is Family.AFFINE_L:
        return spec.b + a * q
    if fam is Family.AFFINE_R:
        return spec.b + q * a
    raise WrongFamily(f"no evaluator for {fam}")


def _build_rhs(spec: FieldSpec) -> Callable[[np.ndarray], np.ndarray]:
    def rhs(y):
        return np.array(eval_field(spec, Quaternion(float(y[0]), float(y[1]),
                                                    float(y[2]), float(y[3]))))
    return rhs


def field_function(spec: FieldSpec) -> Callable[[float, np.ndarray], np.ndarray]:
    """``f(t, y)`` wrapper of the autonomous field."""
    rhs = spec.rhs
    return lambda t, y: rhs(y)


# -- hand-expanded component systems ----------------------------------------


def _component_d4(a0, a1, c0, n, q):
    q0, q1, q2, q3 = q
    re_n, l_n = binomial_expand(q, n)
    u = c0 * q0 - re_n
    k = c0 - l_n
    return Quaternion(
        a0 * u - a1 * k * q1,
        a0 * k * q1 + a1 * u,
        (a0 * q2 - a1 * q3) * k,
        (a1 * q2 + a0 * q3) * k,
    )


def _component_en32(c0, q):
    q0, q1, q2, q3 = q
    s = 2.0 * q0 - c0
    return Quaternion(s * q1, c0 * q0 - q0 * q0 + q1 * q1 + q2 * q2 + q3 * q3,
                      s * q3, -s * q2)


def _component_d6(c0, q):
    q0, q1, q2, q3 = q
    d2 = q1 * q1 + q2 * q2 + q3 * q3
    e = c0 - 3.0 * q0 * q0 + d2
    return Quaternion(-e * q1, (c0 - q0 * q0 + 3.0 * d2) * q0, -e * q3, e * q2)


def _component_e50(a, c0, c1, q):
    q0, q1, q2, q3 = q
    s = c0 - 2.0 * q0
    return Quaternion(
        a * (c0 * q0 - c1 * q1 - q0 * q0 + q1 * q1 + q2 * q2 + q3 * q3),
        a * (c1 * q0 + s * q1),
        a * (s * q2 - c1 * q3),
        a * (c1 * q2 + s * q3),
    )


def _component_e415(a0, a1, c0, q):
    q0, q1, q2, q3 = q
    d2 = q1 * q1 + q2 * q2 + q3 * q3
    A = c0 * c0 - 3.0 * q0 * q0 + d2
    B = c0 * c0 - q0 * q0 + 3.0 * d2
    return Quaternion(
        a1 * q1 * A - a0 * q0 * B,
        -a0 * q1 * A - a1 * q0 * B,
        -(a0 * q2 - a1 * q3) * A,
        -(a1 * q2 + a0 * q3) * A,
    )


def component_field(spec: FieldSpec, q, system: str | None = None) -> TangentVector:
    """Evaluate one of the real component systems instead of quaternion products.

    ``system`` is one of ``"d4"``, ``"en3.2"``, ``"d6"``, ``"e50"``,
    ``"e4.15"``; by default the most specific system that matches ``spec`` is
    used.  The spec must already be in the normalized frame (``a`` or ``c``
    in span{1, i}).
    """
    q = as_quaternion(q)
    fam = spec.family
    a = spec.a
    a_in_plane = a.q2 == 0.0 and a.q3 == 0.0
    if fam is Family.CUBIC:
        if system not in (None, "e4.15"):
            raise WrongRegime(f"system {system!r} does not describe the cubic family")
        if not a_in_plane:
            raise WrongRegime("(e4.15) needs a = a0 + a1 i")
        return _component_e415(a.q0, a.q1, spec.c0, q)
    if fam is not Family.BERNOULLI:
        raise WrongFamily(f"no component system for {fam.value}")
    c = spec.c
    if c.is_real():
        if not a_in_plane:
            raise WrongRegime("(d4) needs a = a0 + a1 i")
        c0 = c.q0
        is_i = a.q0 == 0.0 and a.q1 == 1.0
        if system is None:
            if is_i and spec.n == 2:
                system = "en3.2"
            elif is_i and spec.n == 3:
                system = "d6"
            else:
                system = "d4"
        if system == "d4":
            return _component_d4(a.q0, a.q1, c0, spec.n, q)
        if system == "en3.2" and is_i and spec.n == 2:
            return _component_en32(c0, q)
        if system == "d6" and is_i and spec.n == 3:
            return _component_d6(c0, q)
        raise WrongRegime(f"system {system!r} does not match this Bernoulli spec")
    if system not in (None, "e50"):
        raise WrongRegime(f"system {system!r} needs real c")
    if not (a.is_real() and spec.n == 2 and c.q2 == 0.0 and c.q3 == 0.0):
        raise WrongRegime("(e50) needs real a, n = 2 and c = c0 + c1 i")
    return _component_e50(a.q0, c.q0, c.q1, q)


# -- linear and affine families ---------------------------------------------


def component_matrix_linear(spec: FieldSpec) -> np.ndarray:
    """4x4 real matrix ``M`` with ``eval_field(spec, q) == M @ q``."""
    if not spec.family.is_linear:
        raise WrongFamily(f"{spec.family.value} is not a linear family")
    basis = (ONE, Quaternion(0.0, 1.0, 0.0, 0.0), Quaternion(0.0, 0.0, 1.0, 0.0),
             Quaternion(0.0, 0.0, 0.0, 1.0))
    return np.column_stack([np.array(eval_field(spec, e)) for e in basis])


def affine_reduce(spec: FieldSpec) -> tuple[FieldSpec, Quaternion]:
    """Translate an affine equation to a homogeneous linear one.

    Returns ``(linear_spec, shift)`` where ``p = q + shift`` solves
    ``p' = a p`` (left) or ``p' = p a`` (right).
    """
    if not spec.family.is_affine:
        raise WrongFamily(f"{spec.family.value} is not an affine family")
    a, b = spec.a, spec.b
    if a.norm_sq() == 0.0:
        raise DomainError("affine reduction needs a != 0")
    if spec.family is Family.AFFINE_L:
        shift = inverse(a) * b
        return FieldSpec(Family.LINEAR_LL, a, b=ZERO), shift
    shift = b * inverse(a)
    return FieldSpec(Family.LINEAR_LL, ZERO, b=a), shift
