"""Closed-form solution of the n = 2, a = i Bernoulli flow.

Writing ``z = q0 - c0/2 + i q1`` and ``q2 + i q3 = r e^{i theta}`` reduces
the system to the Riccati equation ``z' = -i z^2 + i R^2`` with
``R = sqrt(r^2 + c0^2/4)`` and a slaved angle equation.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import DomainError

__all__ = ["closed_form_n2", "n2_coordinates", "n2_state", "closed_form_n2_state", "n2_period"]


def _cont_arg(alpha: complex, beta: complex, R: float, t: np.ndarray) -> np.ndarray:
    """Continuous argument of ``alpha - beta e^{-2iRt}`` with value 0 at t = 0.

    The dominant term is factored out so the remaining factor stays in the
    right half-plane, where the principal argument is continuous.
    """
    e = np.exp(-2j * R * t)
    if abs(beta) < abs(alpha):
        return np.angle(alpha) + np.angle(1.0 - (beta / alpha) * e)
    return np.angle(-beta) - 2.0 * R * t + np.angle(1.0 - (alpha / beta) * np.conj(e))


def closed_form_n2(z0: complex, r: float, theta0: float, t, c0: float):
    """Evaluate ``(z(t), theta(t))``.

    Parameters
    ----------
    z0 : complex
        Initial value of ``q0 - c0/2 + i q1``.
    r : float
        Radius ``sqrt(q2^2 + q3^2)``; conserved.
    theta0 : float
        Initial angle of ``(q2, q3)``.
    t : float or array_like
        Times.
    c0 : float
        Real parameter ``c``.

    Returns
    -------
    z, theta
        Same shape as ``t``; ``theta`` is continuous in ``t``.

    Raises
    ------
    DomainError
        When the denominator ``z0 + R - (z0 - R) e^{-2iRt}`` can vanish,
        i.e. ``Re z0 = 0``, or when ``R = 0``.
    """
    z0 = complex(z0)
    R = math.sqrt(r * r + c0 * c0 / 4.0)
    if R == 0.0:
        raise DomainError("R = 0: the reduced flow degenerates")
    alpha = (z0 + R) / (2.0 * R)
    beta = (z0 - R) / (2.0 * R)
    if abs(abs(alpha) - abs(beta)) <= 1e-14 * max(abs(alpha), abs(beta), 1.0):
        raise DomainError("Re z0 = 0: the closed-form denominator vanishes on the orbit")
    scalar = np.ndim(t) == 0
    tt = np.atleast_1d(np.asarray(t, dtype=float))
    e = np.exp(-2j * R * tt)
    z = R * (z0 + R + (z0 - R) * e) / (z0 + R - (z0 - R) * e)
    theta = theta0 - 2.0 * R * tt - 2.0 * _cont_arg(alpha, beta, R, tt)
    if scalar:
        return complex(z[0]), float(theta[0])
    return z, theta


def n2_coordinates(q, c0: float):
    """Map a state to ``(z0, r, theta0)``."""
    q0, q1, q2, q3 = (float(v) for v in q)
    return complex(q0 - c0 / 2.0, q1), math.hypot(q2, q3), math.atan2(q3, q2)


def n2_state(z, r: float, theta, c0: float) -> np.ndarray:
    """Inverse of ``n2_coordinates`` (vectorized over ``z``/``theta``)."""
    z = np.asarray(z)
    theta = np.asarray(theta)
    return np.stack([z.real + c0 / 2.0, z.imag, r * np.cos(theta), r * np.sin(theta)], axis=-1)


def closed_form_n2_state(q, t, c0: float) -> np.ndarray:
    z0, r, th0 = n2_coordinates(q, c0)
    z, th = closed_form_n2(z0, r, th0, t, c0)
    return n2_state(z, r, th, c0)


def n2_period(r: float, c0: float) -> float:
    """Period ``pi / R`` of the reduced flow."""
    return math.pi / math.sqrt(r * r + c0 * c0 / 4.0)
