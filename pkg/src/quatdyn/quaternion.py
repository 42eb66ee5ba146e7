"""Hamilton quaternions with plain double-precision components.

``Quaternion`` is an immutable 4-tuple ``(q0, q1, q2, q3)`` standing for
``q0 + q1 i + q2 j + q3 k``.  Arithmetic operators follow the Hamilton
product; the module-level functions are thin named wrappers so call sites
can read like the formulas they implement.
"""

from __future__ import annotations

import math
from typing import NamedTuple

from .errors import DomainError

__all__ = [
    "Quaternion",
    "ONE",
    "I",
    "J",
    "K",
    "ZERO",
    "as_quaternion",
    "mul",
    "conj",
    "norm_sq",
    "inverse",
    "qpow",
    "binomial_expand",
    "similarity_normalize",
    "delta_sq",
    "commute",
]


class Quaternion(NamedTuple):
    q0: float = 0.0
    q1: float = 0.0
    q2: float = 0.0
    q3: float = 0.0

    # tuple's own + and * mean concatenation / repetition; replace them.
    def __add__(self, other):
        if isinstance(other, Quaternion):
            return Quaternion(self.q0 + other.q0, self.q1 + other.q1,
                              self.q2 + other.q2, self.q3 + other.q3)
        if isinstance(other, (int, float)):
            return Quaternion(self.q0 + other, self.q1, self.q2, self.q3)
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Quaternion):
            return Quaternion(self.q0 - other.q0, self.q1 - other.q1,
                              self.q2 - other.q2, self.q3 - other.q3)
        if isinstance(other, (int, float)):
            return Quaternion(self.q0 - other, self.q1, self.q2, self.q3)
        return NotImplemented

    def __rsub__(self, other):
        if isinstance(other, (int, float)):
            return Quaternion(other - self.q0, -self.q1, -self.q2, -self.q3)
        return NotImplemented

    def __neg__(self):
        return Quaternion(-self.q0, -self.q1, -self.q2, -self.q3)

    def __pos__(self):
        return self

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            a0, a1, a2, a3 = self
            b0, b1, b2, b3 = other
            return Quaternion(
                a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
                a1 * b0 + a0 * b1 - a3 * b2 + a2 * b3,
                a2 * b0 + a3 * b1 + a0 * b2 - a1 * b3,
                a3 * b0 - a2 * b1 + a1 * b2 + a0 * b3,
            )
        if isinstance(other, (int, float)):
            return Quaternion(self.q0 * other, self.q1 * other,
                              self.q2 * other, self.q3 * other)
        return NotImplemented

    def __rmul__(self, other):
        # reals are central, so left and right scaling agree
        if isinstance(other, (int, float)):
            return self.__mul__(other)
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, (int, float)):
            return Quaternion(self.q0 / other, self.q1 / other,
                              self.q2 / other, self.q3 / other)
        return NotImplemented

    def __pow__(self, n):
        return qpow(self, n)

    def __abs__(self):
        return math.sqrt(self.norm_sq())

    def conj(self) -> Quaternion:
        return Quaternion(self.q0, -self.q1, -self.q2, -self.q3)

    def norm_sq(self) -> float:
        return self.q0 * self.q0 + self.q1 * self.q1 + self.q2 * self.q2 + self.q3 * self.q3

    def inverse(self) -> Quaternion:
        return inverse(self)

    @property
    def real(self) -> float:
        return self.q0

    @property
    def imag(self) -> tuple[float, float, float]:
        return (self.q1, self.q2, self.q3)

    def is_real(self, tol: float = 0.0) -> bool:
        return max(abs(self.q1), abs(self.q2), abs(self.q3)) <= tol

    def tolist(self) -> list[float]:
        return [float(x) for x in self]


ZERO = Quaternion(0.0, 0.0, 0.0, 0.0)
ONE = Quaternion(1.0, 0.0, 0.0, 0.0)
I = Quaternion(0.0, 1.0, 0.0, 0.0)
J = Quaternion(0.0, 0.0, 1.0, 0.0)
K = Quaternion(0.0, 0.0, 0.0, 1.0)


def as_quaternion(x) -> Quaternion:
    """Coerce a real, a 4-sequence or a numpy array into a ``Quaternion``."""
    if isinstance(x, Quaternion):
        return x
    if isinstance(x, (int, float)):
        return Quaternion(float(x), 0.0, 0.0, 0.0)
    vals = [float(v) for v in x]
    if len(vals) != 4:
        raise DomainError(f"a quaternion needs 4 components, got {len(vals)}")
    return Quaternion(*vals)


def mul(a: Quaternion, b: Quaternion) -> Quaternion:
    """Hamilton product ``a b``."""
    return as_quaternion(a) * as_quaternion(b)


def conj(q: Quaternion) -> Quaternion:
    return as_quaternion(q).conj()


def norm_sq(q: Quaternion) -> float:
    """``q conj(q)``, which is real."""
    return as_quaternion(q).norm_sq()


def delta_sq(q: Quaternion) -> float:
    """Squared length of the imaginary part, ``q1^2 + q2^2 + q3^2``."""
    return q[1] * q[1] + q[2] * q[2] + q[3] * q[3]


def inverse(q: Quaternion) -> Quaternion:
    q = as_quaternion(q)
    n = q.norm_sq()
    if n == 0.0:
        raise DomainError("zero has no inverse")
    return Quaternion(q.q0 / n, -q.q1 / n, -q.q2 / n, -q.q3 / n)


def qpow(q: Quaternion, n: int) -> Quaternion:
    """Non-negative integer power by repeated Hamilton products."""
    if int(n) != n or n < 0:
        raise DomainError(f"exponent must be a non-negative integer, got {n!r}")
    q = as_quaternion(q)
    out = ONE
    for _ in range(int(n)):
        out = out * q
    return out


def commute(a: Quaternion, b: Quaternion, tol: float = 0.0) -> bool:
    """True when ``ab == ba``, i.e. the imaginary vectors are parallel."""
    a, b = as_quaternion(a), as_quaternion(b)
    # ab - ba = 2 (Im a x Im b)
    cx = a.q2 * b.q3 - a.q3 * b.q2
    cy = a.q3 * b.q1 - a.q1 * b.q3
    cz = a.q1 * b.q2 - a.q2 * b.q1
    return max(abs(cx), abs(cy), abs(cz)) <= tol


def binomial_expand(q: Quaternion, n: int) -> tuple[float, float]:
    """Split ``q^n`` into its real part and imaginary-direction coefficient.

    Returns ``(s, v)`` with ``q^n = s + v (q1 i + q2 j + q3 k)``.  Both are
    finite binomial sums in ``q0`` and ``-Delta^2``, so ``v`` (the quotient
    ``(q^n - conj(q)^n) / (q - conj(q))``) stays regular on the real axis.
    """
    if int(n) != n or n < 0:
        raise DomainError(f"exponent must be a non-negative integer, got {n!r}")
    n = int(n)
    q0 = float(q[0])
    m = -delta_sq(q)
    scalar = 0.0
    for s in range(n // 2 + 1):
        scalar += math.comb(n, 2 * s) * m ** s * q0 ** (n - 2 * s)
    vec = 0.0
    for s in range(1, (n + 1) // 2 + 1):
        vec += math.comb(n, 2 * s - 1) * m ** (s - 1) * q0 ** (n - 2 * s + 1)
    return scalar, vec


def _rotor_to_i(u: tuple[float, float, float]) -> Quaternion:
    """Unit ``c`` with ``c u c^-1 = i`` for a unit imaginary vector ``u``."""
    ux, uy, uz = u
    if ux < -0.5:
        # near-antiparallel: flip with j first (j(-i)j^-1 = i), then finish
        if uy == 0.0 and uz == 0.0:
            return J
        flipped = J * Quaternion(0.0, ux, uy, uz) * J.conj()
        return _rotor_to_i(flipped.imag) * J
    # c = 1 + u.i + u x i, normalised; u x i = (0, uz, -uy)
    w = Quaternion(1.0 + ux, 0.0, uz, -uy)
    return w / abs(w)


def similarity_normalize(a: Quaternion) -> tuple[Quaternion, Quaternion]:
    """Find a unit ``c`` with ``c a c^-1 = a0 + |Im a| i``.

    Returns ``(c, a_normal)``.  ``a_normal`` is built directly from the real
    part and the imaginary length, so its j and k parts are exactly zero.
    """
    a = as_quaternion(a)
    if a.norm_sq() == 0.0:
        raise DomainError("cannot normalize the zero quaternion")
    r = math.sqrt(delta_sq(a))
    a_normal = Quaternion(a.q0, r, 0.0, 0.0)
    if r == 0.0:
        return ONE, a_normal
    return _rotor_to_i((a.q1 / r, a.q2 / r, a.q3 / r)), a_normal
