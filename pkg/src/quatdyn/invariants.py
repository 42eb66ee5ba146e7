"""First integrals, invariant hypersurfaces and their Lie-derivative identities.

Descriptors are bound to a ``FieldSpec`` because most of them depend on its
parameters (``n``, ``c0``, ``c``).  Values and gradients are closed forms;
finite differences are only used by the tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

from .errors import ConfigError, SingularLocus, WrongFamily, WrongRegime
from .fields import REGIME_EPS, Family, FieldSpec, eval_field
from .quaternion import Quaternion, as_quaternion, binomial_expand, delta_sq, inverse

__all__ = [
    "Kind",
    "IntegralDescriptor",
    "DESCRIPTOR_NAMES",
    "SINGULAR_EPS",
    "get_descriptor",
    "applicable_descriptors",
    "eval_integral",
    "gradient",
    "lie_derivative",
    "identity_d1",
    "identity_d2",
    "identity_d3",
    "identity_e52",
    "identity_e416",
    "identity_e418",
    "identity_plane_on_L",
    "cofactor",
    "cofactor_residual",
    "poisson_matrix",
    "poisson_bracket",
    "hamiltonian_residual",
    "CriticalSet",
    "critical_sets",
]

SINGULAR_EPS = 1e-12

DESCRIPTOR_NAMES = (
    "H2", "H3", "Hn", "S", "F_cyl", "H_e51", "F_e50b", "L_plane", "H_e417", "L_hyp",
)


class Kind(str, Enum):
    CONSERVED = "CONSERVED"
    IDENTITY = "IDENTITY"


@dataclass(frozen=True)
class IntegralDescriptor:
    name: str
    spec: FieldSpec
    kind: Kind
    value_fn: Callable[[Quaternion], float]
    grad_fn: Callable[[Quaternion], np.ndarray]
    closed_form: Callable[[Quaternion], float]
    denominator: Callable[[Quaternion], float] | None = None
    description: str = ""

    def __call__(self, q) -> float:
        return eval_integral(self, q)

    def gradient(self, q) -> np.ndarray:
        return gradient(self, q)

    def is_regular(self, q, eps: float = SINGULAR_EPS) -> bool:
        if self.denominator is None:
            return True
        return abs(self.denominator(as_quaternion(q))) >= eps


def _guard(d: IntegralDescriptor, q: Quaternion):
    if d.denominator is not None:
        den = d.denominator(q)
        if not abs(den) >= SINGULAR_EPS:
            raise SingularLocus(f"{d.name}: denominator {den:.3e} at {tuple(q)}")


def eval_integral(d: IntegralDescriptor, q) -> float:
    q = as_quaternion(q)
    _guard(d, q)
    return float(d.value_fn(q))


def gradient(d: IntegralDescriptor, q) -> np.ndarray:
    q = as_quaternion(q)
    _guard(d, q)
    return np.asarray(d.grad_fn(q), dtype=float)


def lie_derivative(d: IntegralDescriptor, spec: FieldSpec, q) -> float:
    """Derivative of ``d`` along the flow of ``spec``: grad(d) . field."""
    q = as_quaternion(q)
    return float(np.dot(gradient(d, q), np.array(eval_field(spec, q))))


# -- shared pieces -----------------------------------------------------------


def _rotation_matrix(g: Quaternion) -> np.ndarray:
    """Matrix of ``q -> g q g^-1`` acting on R^4 (fixes the real axis)."""
    gi = inverse(g)
    cols = [np.array(g * e * gi) for e in (
        Quaternion(1.0, 0.0, 0.0, 0.0), Quaternion(0.0, 1.0, 0.0, 0.0),
        Quaternion(0.0, 0.0, 1.0, 0.0), Quaternion(0.0, 0.0, 0.0, 1.0))]
    return np.column_stack(cols)


def _require(cond: bool, msg: str, exc=WrongRegime):
    if not cond:
        raise exc(msg)


def _bernoulli_real_c(spec: FieldSpec, name: str):
    _require(spec.family is Family.BERNOULLI, f"{name} needs the Bernoulli family", WrongFamily)
    _require(spec.c.is_real(REGIME_EPS), f"{name} needs real c")


def _bernoulli_e50(spec: FieldSpec, name: str):
    _require(spec.family is Family.BERNOULLI, f"{name} needs the Bernoulli family", WrongFamily)
    _require(spec.n == 2 and spec.a.is_real(REGIME_EPS), f"{name} needs real a and n = 2")


def _cubic(spec: FieldSpec, name: str):
    _require(spec.family is Family.CUBIC, f"{name} needs the Cubic family", WrongFamily)


# -- closed-form identities --------------------------------------------------


def _hn_parts(spec: FieldSpec, q: Quaternion):
    n, c0 = spec.n, spec.c.q0
    nq = q.norm_sq()
    re_m, _ = binomial_expand(q, n - 1)
    return n, c0, nq, 2.0 * re_m - c0


def identity_d1(spec: FieldSpec, q) -> float:
    """``(n-1)(a + conj a)(c0 - H) H`` for the Bernoulli ``Hn``."""
    q = as_quaternion(q)
    n, c0, nq, s = _hn_parts(spec, q)
    if abs(s) < SINGULAR_EPS:
        raise SingularLocus("Hn: S vanishes")
    h = nq ** (n - 1) / s
    return (n - 1) * 2.0 * spec.a.q0 * (c0 - h) * h


def identity_d2(spec: FieldSpec, q) -> float:
    """``(n-1)(a q^m (c0 - q^m) + (c0 - conj q^m) conj(q^m) conj a)``, ``m = n-1``."""
    q = as_quaternion(q)
    n, c0 = spec.n, spec.c.q0
    qm = q ** (n - 1)
    qmb = qm.conj()
    val = spec.a * qm * (c0 - qm) + (c0 - qmb) * qmb * spec.a.conj()
    return (n - 1) * val.q0


def identity_d3(spec: FieldSpec, q) -> float:
    """Value of dS/dt on ``S = 0``: ``(n-1)(a + conj a)(q conj q)^(n-1)``."""
    q = as_quaternion(q)
    return (spec.n - 1) * 2.0 * spec.a.q0 * q.norm_sq() ** (spec.n - 1)


def _c_vec(spec: FieldSpec):
    c = spec.c
    return c.q0, np.array(c, dtype=float)


def identity_e52(spec: FieldSpec, q) -> float:
    """Derivative of ``H_e51`` along ``a(cq - q^2)`` with real ``a``."""
    q = as_quaternion(q)
    a = spec.a.q0
    c0, cv = _c_vec(spec)
    qv = np.array(q)
    nq = q.norm_sq()
    den = 2.0 * float(cv @ qv) - float(cv @ cv)
    if abs(den) < SINGULAR_EPS:
        raise SingularLocus("H_e51: denominator vanishes")
    B = float((qv - cv) @ (qv - cv))
    return a * (-2.0 * c0 * nq * B / den ** 2)


def identity_plane_on_L(spec: FieldSpec, q) -> float:
    """dL/dt for the Bernoulli hyperplane ``L`` restricted to ``L = 0``: ``a c0 |q|^2``."""
    q = as_quaternion(q)
    return spec.a.q0 * spec.c.q0 * q.norm_sq()


def _cubic_parts(spec: FieldSpec, q: Quaternion):
    c0 = spec.c0
    d2 = delta_sq(q)
    nq = q.q0 * q.q0 + d2
    m = q.q0 * q.q0 - d2
    return c0, d2, nq, m


def identity_e416(spec: FieldSpec, q) -> float:
    """dL/dt on the hyperboloid ``L = 0``: ``-2 a0 (2 q0^2 - c0^2/2)^2``."""
    q = as_quaternion(q)
    c0 = spec.c0
    return -2.0 * spec.a.q0 * (2.0 * q.q0 * q.q0 - c0 * c0 / 2.0) ** 2


def identity_e418(spec: FieldSpec, q) -> float:
    """dH/dt for the cubic ``H = |q|^4 / L``: ``8 a0 N |q|^4 / (c0^2 - 2(q0^2 - Delta^2))^2``."""
    q = as_quaternion(q)
    c0, d2, nq, m = _cubic_parts(spec, q)
    den = c0 * c0 - 2.0 * m
    if abs(den) < SINGULAR_EPS:
        raise SingularLocus("H_e417: L vanishes")
    N = c0 ** 4 - 2.0 * c0 * c0 * m + nq * nq
    return 8.0 * spec.a.q0 * N * nq * nq / den ** 2


def cofactor(spec: FieldSpec, q) -> float:
    """Common cofactor ``a (c0 - L_{n-1})`` of the hyperplanes ``q1, q2, q3 = 0``."""
    _bernoulli_real_c(spec, "cofactor")
    _require(spec.a.is_real(REGIME_EPS), "hyperplane cofactors need real a (a - conj a = 0)")
    q = as_quaternion(q)
    _, l_n = binomial_expand(q, spec.n)
    return spec.a.q0 * (spec.c.q0 - l_n)


def cofactor_residual(poly: str, spec: FieldSpec, q) -> float:
    """``d(q_k)/dt - K q_k`` for ``poly`` in ``{"q1", "q2", "q3"}``."""
    index = {"q1": 1, "q2": 2, "q3": 3}.get(poly)
    if index is None:
        raise ConfigError(f"unknown hyperplane {poly!r}; expected q1, q2 or q3")
    q = as_quaternion(q)
    k = cofactor(spec, q)
    return eval_field(spec, q)[index] - k * q[index]


# -- descriptor builders -----------------------------------------------------


def _build_h23(spec: FieldSpec, name: str) -> IntegralDescriptor:
    _bernoulli_real_c(spec, name)
    _require(spec.a.is_real(REGIME_EPS), f"{name} is a first integral only for real a")
    k = 2 if name == "H2" else 3

    def value(q):
        return q[k] / q[1]

    def grad(q):
        g = np.zeros(4)
        g[1] = -q[k] / q[1] ** 2
        g[k] = 1.0 / q[1]
        return g

    return IntegralDescriptor(name, spec, Kind.CONSERVED, value, grad, lambda q: 0.0,
                              denominator=lambda q: q[1],
                              description=f"q{k}/q1")


def _build_hn(spec: FieldSpec) -> IntegralDescriptor:
    _bernoulli_real_c(spec, "Hn")
    n = spec.n

    def value(q):
        _, _, nq, s = _hn_parts(spec, q)
        return nq ** (n - 1) / s

    def grad(q):
        _, c0, nq, s = _hn_parts(spec, q)
        re_n, l_n = binomial_expand(q, n)
        pref = 2.0 * (n - 1) * nq ** (n - 2) / (s * s)
        k = l_n - c0
        return pref * np.array([re_n - c0 * q.q0, k * q.q1, k * q.q2, k * q.q3])

    def den(q):
        return _hn_parts(spec, q)[3]

    kind = Kind.CONSERVED if abs(spec.a.q0) <= REGIME_EPS else Kind.IDENTITY
    return IntegralDescriptor("Hn", spec, kind, value, grad,
                              lambda q: identity_d1(spec, q), denominator=den,
                              description="(q conj q)^(n-1) / (q^(n-1) + conj(q)^(n-1) - c0)")


def _build_s(spec: FieldSpec) -> IntegralDescriptor:
    _bernoulli_real_c(spec, "S")
    n = spec.n

    def value(q):
        return _hn_parts(spec, q)[3]

    def grad(q):
        re_m, l_m = binomial_expand(q, n - 2)
        f = 2.0 * (n - 1)
        return f * np.array([re_m, -l_m * q.q1, -l_m * q.q2, -l_m * q.q3])

    return IntegralDescriptor("S", spec, Kind.IDENTITY, value, grad,
                              lambda q: identity_d2(spec, q),
                              description="q^(n-1) + conj(q)^(n-1) - c0")


def _build_fcyl(spec: FieldSpec) -> IntegralDescriptor:
    fam = spec.family
    norm = spec.normalized()
    R = _rotation_matrix(spec.frame)

    def to_frame(q):
        return Quaternion(*(R @ np.array(q)))

    def value(q):
        p = to_frame(q)
        return p.q2 * p.q2 + p.q3 * p.q3

    def grad(q):
        p = to_frame(q)
        return R.T @ np.array([0.0, 0.0, 2.0 * p.q2, 2.0 * p.q3])

    if fam is Family.BERNOULLI and spec.c.is_real(REGIME_EPS):
        a0 = norm.a.q0
        c0 = norm.c.q0

        def closed(q):
            p = to_frame(q)
            _, l_n = binomial_expand(p, spec.n)
            return 2.0 * a0 * (c0 - l_n) * (p.q2 ** 2 + p.q3 ** 2)

        conserved = abs(a0) <= REGIME_EPS
    elif fam is Family.BERNOULLI:
        _bernoulli_e50(spec, "F_cyl")
        a = norm.a.q0
        c0 = norm.c.q0

        def closed(q):
            p = to_frame(q)
            return 2.0 * a * (c0 - 2.0 * p.q0) * (p.q2 ** 2 + p.q3 ** 2)

        conserved = False
    elif fam is Family.CUBIC:
        a0 = norm.a.q0
        c0 = spec.c0

        def closed(q):
            p = to_frame(q)
            A = c0 * c0 - 3.0 * p.q0 ** 2 + delta_sq(p)
            return -2.0 * a0 * A * (p.q2 ** 2 + p.q3 ** 2)

        conserved = abs(a0) <= REGIME_EPS
    else:
        raise WrongFamily(f"F_cyl is not defined for {fam.value}")
    kind = Kind.CONSERVED if conserved else Kind.IDENTITY
    return IntegralDescriptor("F_cyl", spec, kind, value, grad, closed,
                              description="q2^2 + q3^2 in the normalized frame")


def _build_he51(spec: FieldSpec) -> IntegralDescriptor:
    _bernoulli_e50(spec, "H_e51")
    c0, cv = _c_vec(spec)
    K0 = float(cv @ cv)

    def den(q):
        return 2.0 * float(cv @ np.array(q)) - K0

    def value(q):
        return q.norm_sq() / den(q)

    def grad(q):
        d = den(q)
        return (2.0 * np.array(q) * d - q.norm_sq() * 2.0 * cv) / (d * d)

    kind = Kind.CONSERVED if abs(c0) <= REGIME_EPS else Kind.IDENTITY
    return IntegralDescriptor("H_e51", spec, kind, value, grad,
                              lambda q: identity_e52(spec, q), denominator=den,
                              description="|q|^2 / (2 c.q - |c|^2)")


def _build_fe50b(spec: FieldSpec) -> IntegralDescriptor:
    _bernoulli_e50(spec, "F_e50b")
    _require(abs(spec.c.q0) <= REGIME_EPS, "F_e50b is a first integral only when c + conj c = 0")
    ci = np.array(spec.c.imag)

    def den(q):
        w = 2.0 * np.array(q.imag) - ci
        return float(w @ w)

    def value(q):
        return q.norm_sq() ** 2 / den(q)

    def grad(q):
        nq = q.norm_sq()
        e = den(q)
        de = np.concatenate(([0.0], 4.0 * (2.0 * np.array(q.imag) - ci)))
        return (4.0 * nq * np.array(q) * e - nq * nq * de) / (e * e)

    return IntegralDescriptor("F_e50b", spec, Kind.CONSERVED, value, grad, lambda q: 0.0,
                              denominator=den,
                              description="|q|^4 / |2 Im q - Im c|^2")


def _build_lplane(spec: FieldSpec) -> IntegralDescriptor:
    _bernoulli_e50(spec, "L_plane")
    c0, cv = _c_vec(spec)
    K0 = float(cv @ cv)
    a = spec.a.q0

    def value(q):
        return float(cv @ np.array(q)) - K0 / 2.0

    def closed(q):
        return a * (c0 * q.norm_sq() - 2.0 * q.q0 * value(q))

    return IntegralDescriptor("L_plane", spec, Kind.IDENTITY, value, lambda q: cv.copy(), closed,
                              description="c.q - |c|^2/2")


def _build_he417(spec: FieldSpec) -> IntegralDescriptor:
    _cubic(spec, "H_e417")

    def den(q):
        c0, _, _, m = _cubic_parts(spec, q)
        return m - c0 * c0 / 2.0

    def value(q):
        return q.norm_sq() ** 2 / den(q)

    def grad(q):
        L = den(q)
        nq = q.norm_sq()
        dl = np.array([2.0 * q.q0, -2.0 * q.q1, -2.0 * q.q2, -2.0 * q.q3])
        return (4.0 * nq * np.array(q) * L - nq * nq * dl) / (L * L)

    kind = Kind.CONSERVED if abs(spec.a.q0) <= REGIME_EPS else Kind.IDENTITY
    return IntegralDescriptor("H_e417", spec, kind, value, grad,
                              lambda q: identity_e418(spec, q), denominator=den,
                              description="|q|^4 / (q0^2 - Delta^2 - c0^2/2)")


def _build_lhyp(spec: FieldSpec) -> IntegralDescriptor:
    _cubic(spec, "L_hyp")
    a0 = spec.a.q0
    av = np.array(spec.a.imag)

    def value(q):
        c0, _, _, m = _cubic_parts(spec, q)
        return m - c0 * c0 / 2.0

    def closed(q):
        c0, d2, _, m = _cubic_parts(spec, q)
        q0 = q.q0
        sym = -c0 * c0 * m + q0 ** 4 - 6.0 * q0 * q0 * d2 + d2 * d2
        rot = q0 * float(av @ np.array(q.imag)) * (2.0 * c0 * c0 - 4.0 * m)
        return 2.0 * a0 * sym + 2.0 * rot

    return IntegralDescriptor(
        "L_hyp", spec, Kind.IDENTITY, value,
        lambda q: np.array([2.0 * q.q0, -2.0 * q.q1, -2.0 * q.q2, -2.0 * q.q3]),
        closed, description="q0^2 - Delta^2 - c0^2/2")


_BUILDERS = {
    "H2": lambda s: _build_h23(s, "H2"),
    "H3": lambda s: _build_h23(s, "H3"),
    "Hn": _build_hn,
    "S": _build_s,
    "F_cyl": _build_fcyl,
    "H_e51": _build_he51,
    "F_e50b": _build_fe50b,
    "L_plane": _build_lplane,
    "H_e417": _build_he417,
    "L_hyp": _build_lhyp,
}


def get_descriptor(name: str, spec: FieldSpec) -> IntegralDescriptor:
    """Bind the named integral to ``spec``; raises if it does not apply."""
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise ConfigError(f"unknown integral {name!r}; known: {', '.join(DESCRIPTOR_NAMES)}") from None
    return builder(spec)


def applicable_descriptors(spec: FieldSpec) -> dict[str, IntegralDescriptor]:
    out = {}
    for name in DESCRIPTOR_NAMES:
        try:
            out[name] = get_descriptor(name, spec)
        except (WrongFamily, WrongRegime):
            continue
    return out


# -- Poisson structure -------------------------------------------------------

_J = np.array([[0.0, -1.0, 0.0, 0.0],
               [1.0, 0.0, 0.0, 0.0],
               [0.0, 0.0, 0.0, -1.0],
               [0.0, 0.0, 1.0, 0.0]])


def poisson_matrix(spec: FieldSpec, q) -> np.ndarray:
    """State-dependent antisymmetric structure matrix for the Bernoulli family."""
    _bernoulli_real_c(spec, "poisson_matrix")
    q = as_quaternion(q)
    n, _, nq, s = _hn_parts(spec, q)
    if n > 2 and nq < SINGULAR_EPS:
        raise SingularLocus("Poisson prefactor singular at q = 0")
    pref = s * s / (2.0 * (n - 1) * nq ** (n - 2))
    return pref * _J


def poisson_bracket(f: IntegralDescriptor, g: IntegralDescriptor, q) -> float:
    """``grad f . M(q) . grad g``, summed over ``i < j`` so that ``{f, f} = 0`` exactly."""
    q = as_quaternion(q)
    M = poisson_matrix(f.spec, q)
    df, dg = gradient(f, q), gradient(g, q)
    total = 0.0
    for i in range(4):
        for j in range(i + 1, 4):
            if M[i, j] != 0.0:
                total += M[i, j] * (df[i] * dg[j] - df[j] * dg[i])
    return float(total)


def hamiltonian_residual(spec: FieldSpec, q) -> float:
    """``max |field - M(q)^T grad Hn|``; vanishes for ``a = i``.

    With ``{P, Q} = grad P . M . grad Q`` the flow is ``dP/dt = {Hn, P}``.
    """
    q = as_quaternion(q)
    h = get_descriptor("Hn", spec)
    v = poisson_matrix(spec, q).T @ gradient(h, q)
    return float(np.max(np.abs(v - np.array(eval_field(spec, q)))))


# -- critical sets -----------------------------------------------------------


@dataclass(frozen=True)
class CriticalSet:
    name: str
    residuals: Callable[[Quaternion], tuple[float, ...]]
    side: Callable[[Quaternion], bool] | None = None
    tol: float = 1e-10
    description: str = ""

    def residual(self, q) -> float:
        return max(abs(r) for r in self.residuals(as_quaternion(q)))

    def __call__(self, q) -> bool:
        q = as_quaternion(q)
        if self.side is not None and not self.side(q):
            return False
        return self.residual(q) <= self.tol


def critical_sets(spec: FieldSpec) -> dict[str, CriticalSet]:
    """Named membership predicates for the critical/invariant sets of a regime."""
    fam = spec.family
    norm = spec.normalized()
    R = _rotation_matrix(spec.frame)

    def frame(q):
        return Quaternion(*(R @ np.array(q)))

    if fam is Family.CUBIC:
        c0 = spec.c0
        root = c0 / math.sqrt(2.0)

        def lres(q):
            return (q.q0 ** 2 - delta_sq(q) - c0 * c0 / 2.0,)

        return {
            "L_plus": CriticalSet("L_plus", lres, side=lambda q: q.q0 >= root * (1 - 1e-12),
                                  description="sheet of L = 0 with q0 >= c0/sqrt(2)"),
            "L_minus": CriticalSet("L_minus", lres, side=lambda q: q.q0 <= -root * (1 - 1e-12),
                                   description="sheet of L = 0 with q0 <= -c0/sqrt(2)"),
        }
    if fam is not Family.BERNOULLI:
        raise WrongFamily(f"no critical sets recorded for {fam.value}")
    if spec.c.is_real(REGIME_EPS):
        _require(abs(norm.a.q0) <= REGIME_EPS,
                 "critical sets S1, S2, S3 need a + conj a = 0")
        n, c0 = spec.n, spec.c.q0

        def s1(q):
            p = frame(q)
            return (p.q2, p.q3)

        def s2(q):
            re_n, l_n = binomial_expand(q, n)
            return (re_n - c0 * q.q0, l_n - c0)

        def s3(q):
            p = frame(q)
            re_n, _ = binomial_expand(q, n)
            return (re_n - c0 * q.q0, p.q1)

        return {
            "S1": CriticalSet("S1", s1, description="{q2 = 0, q3 = 0}"),
            "S2": CriticalSet("S2", s2, description="{Re q^n - c0 q0 = 0, L_(n-1) = c0}"),
            "S3": CriticalSet("S3", s3, description="{Re q^n - c0 q0 = 0, q1 = 0}"),
        }
    _bernoulli_e50(spec, "critical_sets")
    _require(abs(spec.c.q0) <= REGIME_EPS, "plane/sphere sets need c + conj c = 0")
    ci = np.array(spec.c.imag)

    def plane(q):
        p = frame(q)
        return (p.q2, p.q3)

    def sphere(q):
        return (q.q0, q.norm_sq() - float(ci @ np.array(q.imag)))

    return {
        "plane": CriticalSet("plane", plane, description="{q2 = 0, q3 = 0}"),
        "sphere": CriticalSet("sphere", sphere,
                              description="{q0 = 0, |q|^2 - Im c . Im q = 0}"),
    }
