"""Invariant plane and sphere of the ``n = 2`` flow with real ``a`` and purely imaginary ``c``."""

from __future__ import annotations

import math

import numpy as np

from ..errors import WrongFamily, WrongRegime
from ..fields import REGIME_EPS, Family, FieldSpec
from ..integrator import EventSpec, integrate

__all__ = ["sphere_and_annuli_report", "sphere_points"]


def sphere_points(c1: float, k: int, rng) -> np.ndarray:
    """Random points on ``{q0 = 0, q1^2 + q2^2 + q3^2 = c1 q1}``."""
    u = rng.normal(size=(k, 3))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    r = abs(c1) / 2.0
    pts = np.zeros((k, 4))
    pts[:, 1] = c1 / 2.0 + r * u[:, 0]
    pts[:, 2:] = r * u[:, 1:]
    return pts


def _sphere_residual(q, c1):
    return max(abs(q[0]), abs(q[1] ** 2 + q[2] ** 2 + q[3] ** 2 - c1 * q[1]))


def _annulus_period(spec, start, period_guess):
    ev = EventSpec("section", lambda y: y[1] - start[1],
                   direction=1 if spec.rhs(start)[1] > 0 else -1, terminal=True)
    tr = integrate(spec, start, (0.0, 3.0 * period_guess), rtol=1e-12, atol=1e-14,
                   events=[ev], escape_radius=None)
    if not tr.events:
        return math.nan, math.nan
    e = tr.events[0]
    return e.t, float(np.linalg.norm(e.q - start))


def sphere_and_annuli_report(spec: FieldSpec, n_points: int = 100, n_orbits: int = 10,
                             T: float = 20.0, seed: int = 0) -> dict:
    """Check the plane ``q2 = q3 = 0`` and the sphere through ``0`` and ``c`` are invariant
    and filled with periodic orbits of period ``2 pi / |a c1|``.

    Computations are done in the frame where ``c = c1 i``.
    """
    if spec.family is not Family.BERNOULLI:
        raise WrongFamily("sphere_and_annuli_report needs the Bernoulli family")
    if spec.n != 2 or not spec.a.is_real(REGIME_EPS) or abs(spec.c.q0) > REGIME_EPS \
            or spec.c.is_real(REGIME_EPS):
        raise WrongRegime("needs n = 2, real a, c + conj(c) = 0 and c != 0")
    norm = spec.normalized()
    a, c1 = norm.a.q0, norm.c.q1
    period = 2.0 * math.pi / abs(a * c1)
    rng = np.random.default_rng(seed)

    # plane tangency
    pts = rng.normal(scale=abs(c1), size=(n_points, 4))
    pts[:, 2:] = 0.0
    tangency = max(float(np.max(np.abs(norm.rhs(p)[2:]))) for p in pts)

    # sphere tangency, membership drift, closure and the q2^2 + q3^2 integral
    sph = sphere_points(c1, n_points, rng)
    sph_tangency = 0.0
    for p in sph:
        v = norm.rhs(p)
        grad = np.array([0.0, 2.0 * p[1] - c1, 2.0 * p[2], 2.0 * p[3]])
        sph_tangency = max(sph_tangency, abs(v[0]), abs(grad @ v))
    drift = closure = cons = 0.0
    for p in sph[:n_orbits]:
        tr = integrate(norm, p, (0.0, T), rtol=1e-12, atol=1e-14, escape_radius=None)
        drift = max(drift, max(_sphere_residual(q, c1) for q in tr.q))
        f0 = p[2] ** 2 + p[3] ** 2
        cons = max(cons, float(np.max(np.abs(tr.q[:, 2] ** 2 + tr.q[:, 3] ** 2 - f0))))
        qT = integrate(norm, p, (0.0, period), rtol=1e-12, atol=1e-14,
                       escape_radius=None).final
        closure = max(closure, float(np.linalg.norm(qT - p)))

    # period annuli around the two centers 0 and c1 i on the plane
    annuli = []
    for name, center in (("origin", np.zeros(4)), ("c", np.array([0.0, c1, 0.0, 0.0]))):
        for amp in (0.05, 0.2):
            start = center + np.array([amp * abs(c1), 0.0, 0.0, 0.0])
            t, res = _annulus_period(norm, start, period)
            annuli.append({"center": name, "amplitude": amp * abs(c1), "period": t,
                           "rel_error": abs(t - period) / period, "return_residual": res})
    return {
        "family": spec.family.value,
        "regime": "a real, n = 2, c + conj(c) = 0",
        "frame": spec.frame,
        "equilibria": [[0.0, 0.0, 0.0, 0.0], [0.0, c1, 0.0, 0.0]],
        "period": period,
        "annuli": annuli,
        "residuals": {
            "plane_tangency": tangency,
            "sphere_tangency": sph_tangency,
            "sphere_drift": drift,
            "sphere_closure": closure,
            "sphere_q23_conservation": cons,
            "annulus_period_rel_error": max(x["rel_error"] for x in annuli),
        },
    }
