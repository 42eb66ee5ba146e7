"""Invariant tori of the ``a = i`` Bernoulli (n = 3) and cubic flows: rotation numbers.

Both flows conserve ``F = q2^2 + q3^2`` and a rational integral ``H``.  On a
regular joint level ``{H = h, F = f}`` write ``q2 + i q3 = sqrt(f) e^{i theta}``;
the ``(q0, q1)`` projection is a closed curve, so the motion is a planar
loop plus a drift in ``theta``.  The rotation number ``W`` is the ``theta``
advance per loop divided by the planar angle advance (both per period).

Inner tori, whose planar curve encloses the origin, are parametrized by
``q0 + i q1 = sqrt(G(phi)) e^{i phi}`` and

    W = 1 + I(h),   I(h) = 1/(2 pi) int_0^{2 pi} h (1 + cos psi) / sqrt(R(psi)) dpsi

with ``R(psi) = h^2 cos^2 psi - 2 f h cos psi - (2 f + c0) h`` for the
Bernoulli flow.  The cubic flow is the same computation with ``c0 -> c0^2``,
``h -> h / 2`` (and time reversed), giving
``R(psi) = h^2 cos^2 psi - 4 f h cos psi - (4 f + 2 c0^2) h``.

Outer cubic tori (``h > 2(4 f + c0^2)``) surround ``(sqrt(3 f + c0^2), 0)`` in
the plane; the curve is solved along rays from that center and
``W = 1/(2 pi) int theta'/psi' dpsi``.  There ``I`` denotes ``W`` itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from ..errors import DomainViolation, NoBracket, QuadratureFailure
from ..fields import FieldSpec, component_field
from ..integrator import EventSpec, dopri5, integrate
from ..invariants import get_descriptor
from ..parallel import pmap
from ..quadrature import gauss_kronrod, simpson
from ..quaternion import Quaternion

__all__ = [
    "Q_MAX",
    "RATIONAL_TOL",
    "TorusSpec",
    "Classification",
    "classify_rational",
    "RotationResult",
    "rotation_integral",
    "rotation_integral_simpson",
    "rotation_number",
    "cubic_torus_analysis",
    "SearchResult",
    "periodic_torus_search",
    "closure_residuals",
]

Q_MAX = 64
RATIONAL_TOL = 1e-9
# convergents up to this denominator are inspected for UNRESOLVED; q^2 * tol <= 0.1
Q_RESOLVE = 10_000
QUAD_EPS = 1e-13
GRID = 2048


# -- torus description --------------------------------------------------------


@dataclass(frozen=True)
class TorusSpec:
    """Joint level ``{H = h, F = f}`` of the ``a = i`` Bernoulli (n = 3) or cubic flow."""

    family: str
    h: float
    f: float
    c0: float

    @classmethod
    def bernoulli(cls, h: float, f: float, c0: float) -> TorusSpec:
        return cls("bernoulli", float(h), float(f), float(c0))

    @classmethod
    def cubic(cls, h: float, f: float, c0: float) -> TorusSpec:
        return cls("cubic", float(h), float(f), float(c0))

    def __post_init__(self):
        if self.family not in ("bernoulli", "cubic"):
            raise DomainViolation(f"unknown torus family {self.family!r}")

    def field_spec(self) -> FieldSpec:
        if self.family == "bernoulli":
            return FieldSpec.bernoulli(Quaternion(0, 1, 0, 0), Quaternion(self.c0, 0, 0, 0), 3)
        return FieldSpec.cubic(Quaternion(0, 1, 0, 0), self.c0)

    @property
    def branch(self) -> str:
        """``"inner"`` (curve around the origin) or ``"outer"`` (cubic ``h > 2 c0^2``)."""
        return "outer" if self.family == "cubic" and self.h > 0 else "inner"

    @property
    def effective(self) -> tuple[float, float]:
        """``(h, c)`` of the equivalent Bernoulli inner problem."""
        if self.family == "bernoulli":
            return self.h, self.c0
        return self.h / 2.0, self.c0 * self.c0

    def to_dict(self):
        return {"family": self.family, "h": self.h, "f": self.f, "c0": self.c0,
                "branch": self.branch}


def _radicand(psi, h, f, c):
    cs = np.cos(psi)
    return h * h * cs * cs - 2.0 * f * h * cs - (2.0 * f + c) * h


def _G(phi, h, f, c, sign=1.0):
    c2 = np.cos(2.0 * phi)
    return h * c2 - f + sign * np.sqrt(np.maximum(_radicand(2.0 * phi, h, f, c), 0.0))


def _grid_min(fn, lo, hi):
    x = np.linspace(lo, hi, GRID + 1)
    y = fn(x)
    k = int(np.argmin(y))
    dx = (hi - lo) / GRID
    res = minimize_scalar(lambda s: float(fn(np.array([s]))[0]),
                          bounds=(x[k] - dx, x[k] + dx), method="bounded",
                          options={"xatol": 1e-14})
    return min(float(y[k]), float(res.fun))


def check_inner(ts: TorusSpec) -> dict:
    """Admissibility of an inner torus; returns the positivity margins."""
    h, c = ts.effective
    f = ts.f
    if f <= 0.0:
        raise DomainViolation(f"f must be positive, got {f}")
    dom = f * f + (2.0 * f + c) * h
    if not dom < 0.0:
        if ts.family == "bernoulli":
            raise DomainViolation(f"f^2 + (2f + c0) h = {dom:.6g} must be negative")
        raise DomainViolation(
            f"cubic level h = {ts.h} needs f^2 + h (f + c0^2/2) < 0 on the inner branch")
    rad_min = _grid_min(lambda p: _radicand(p, h, f, c), 0.0, 2.0 * math.pi)
    g_min = _grid_min(lambda p: _G(p, h, f, c), 0.0, math.pi)
    g_minus_max = -_grid_min(lambda p: -_G(p, h, f, c, -1.0), 0.0, math.pi)
    if rad_min <= 0.0 or g_min <= 0.0:
        raise DomainViolation(f"torus parametrization degenerate: min radicand {rad_min:.3g}, "
                              f"min G {g_min:.3g}")
    return {"radicand_min": rad_min, "G_min": g_min, "G_minus_branch_max": g_minus_max,
            "note": "+sqrt branch used; the -sqrt branch is negative and rejected"}


# -- outer cubic branch ---------------------------------------------------------


def _cubic_plane(ts: TorusSpec):
    f, c0 = ts.f, ts.c0
    cc = c0 * c0

    def H(x, y):
        return (x * x + y * y + f) ** 2 / (x * x - y * y - f - cc / 2.0)

    def rates(x, y):
        d2 = y * y + f
        A = cc - 3.0 * x * x + d2
        B = cc - x * x + 3.0 * d2
        return y * A, -x * B, -A

    return H, rates


def _outer_center(ts: TorusSpec) -> float:
    return math.sqrt(3.0 * ts.f + ts.c0 * ts.c0)


def _ray_limit(ts: TorusSpec, xc: float, psi: float) -> float:
    """Largest radius along the ray before leaving ``{L > 0}`` (``inf`` if never)."""
    c, s = math.cos(psi), math.sin(psi)
    A = c * c - s * s
    B = 2.0 * xc * c
    C = xc * xc - ts.f - ts.c0 * ts.c0 / 2.0
    roots = []
    if abs(A) < 1e-15:
        if B < 0:
            roots.append(-C / B)
    else:
        disc = B * B - 4.0 * A * C
        if disc >= 0:
            sq = math.sqrt(disc)
            roots = [r for r in ((-B - sq) / (2 * A), (-B + sq) / (2 * A)) if r > 0]
    return min(roots) if roots else math.inf


def _outer_radius(ts: TorusSpec, xc: float, psi: float, H) -> float:
    c, s = math.cos(psi), math.sin(psi)
    g = lambda r: H(xc + r * c, r * s) - ts.h  # noqa: E731
    hi = _ray_limit(ts, xc, psi)
    if math.isinf(hi):
        hi = 1.0
        while g(hi) <= 0:
            hi *= 2.0
    else:
        hi *= 1.0 - 1e-12
    return brentq(g, 0.0, hi, xtol=1e-15, rtol=1e-15, maxiter=200)


def check_outer(ts: TorusSpec, n_rays: int = 256) -> dict:
    f, c0 = ts.f, ts.c0
    if f <= 0.0:
        raise DomainViolation(f"f must be positive, got {f}")
    h_min = 2.0 * (4.0 * f + c0 * c0)
    if not ts.h > h_min:
        raise DomainViolation(f"outer cubic torus needs h > 2(4f + c0^2) = {h_min:.6g}")
    H, _ = _cubic_plane(ts)
    xc = _outer_center(ts)
    for psi in np.linspace(0.0, 2.0 * math.pi, n_rays, endpoint=False):
        c, s = math.cos(psi), math.sin(psi)
        hi = _ray_limit(ts, xc, psi)
        if math.isinf(hi):
            hi = 1.0
            while H(xc + hi * c, hi * s) <= ts.h:
                hi *= 2.0
        r = np.linspace(0.0, hi * (1.0 - 1e-9), 513)[1:]
        vals = H(xc + r * c, r * s) - ts.h
        if np.count_nonzero(np.diff(np.sign(vals))) != 1:
            raise DomainViolation("level curve is not star-shaped about the center")
    return {"center": [xc, 0.0], "h_min": h_min}


def _outer_winding(ts: TorusSpec) -> tuple[float, float]:
    H, rates = _cubic_plane(ts)
    xc = _outer_center(ts)

    def integrand(psi):
        out = np.empty_like(psi)
        for k, p in enumerate(psi):
            r = _outer_radius(ts, xc, p, H)
            x, y = xc + r * math.cos(p), r * math.sin(p)
            vx, vy, th = rates(x, y)
            psidot = ((x - xc) * vy - y * vx) / (r * r)
            out[k] = th / psidot
        return out

    val, err = gauss_kronrod(integrand, 0.0, 2.0 * math.pi, epsabs=QUAD_EPS)
    return val / (2.0 * math.pi), err / (2.0 * math.pi)


# -- rotation integral -----------------------------------------------------------


def _inner_integrand(psi, h, f, c):
    return h * (1.0 + np.cos(psi)) / np.sqrt(_radicand(psi, h, f, c))


def rotation_integral(ts: TorusSpec, epsabs: float = QUAD_EPS) -> tuple[float, float]:
    """``I`` for the torus and its quadrature error estimate (no admissibility check)."""
    if ts.branch == "outer":
        return _outer_winding(ts)
    h, c = ts.effective
    val, err = gauss_kronrod(partial(_inner_integrand, h=h, f=ts.f, c=c),
                             0.0, 2.0 * math.pi, epsabs=epsabs)
    return val / (2.0 * math.pi), err / (2.0 * math.pi)


def rotation_integral_simpson(ts: TorusSpec, panels: int = 2 ** 20) -> float:
    """Composite-Simpson value of the inner ``I`` (reference oracle)."""
    h, c = ts.effective
    return simpson(partial(_inner_integrand, h=h, f=ts.f, c=c), 0.0, 2.0 * math.pi,
                   panels=panels) / (2.0 * math.pi)


# -- classification --------------------------------------------------------------


@dataclass(frozen=True)
class Classification:
    kind: str
    p: int | None = None
    q: int | None = None
    distance: float | None = None

    def __str__(self):
        if self.kind == "PERIODIC":
            return f"PERIODIC({self.p}, {self.q})"
        return self.kind

    def to_dict(self):
        return {"kind": self.kind, "p": self.p, "q": self.q, "distance": self.distance,
                "label": str(self)}


def _convergents(x: float, q_limit: int):
    frac = Fraction(x)
    h0, h1, k0, k1 = 0, 1, 1, 0
    while True:
        a = math.floor(frac)
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        if k1 > q_limit:
            return
        yield h1, k1
        rem = frac - a
        if rem == 0:
            return
        frac = 1 / rem


def classify_rational(x: float, q_max: int = Q_MAX, tol: float = RATIONAL_TOL,
                      q_resolve: int = Q_RESOLVE) -> Classification:
    """PERIODIC(p, q) if a continued-fraction convergent with ``q <= q_max`` is within
    ``tol``; UNRESOLVED if one with ``q_max < q <= q_resolve`` is; else QUASIPERIODIC."""
    if not math.isfinite(x):
        raise ValueError("cannot classify a non-finite value")
    for p, q in _convergents(x, max(q_max, q_resolve)):
        d = abs(x - p / q)
        if d <= tol:
            if q <= q_max:
                return Classification("PERIODIC", p, q, d)
            return Classification("UNRESOLVED", p, q, d)
    return Classification("QUASIPERIODIC")


# -- cross-checks ----------------------------------------------------------------


def _inner_rates(phi, ts: TorusSpec):
    h, c = ts.effective
    f = ts.f
    G = _G(phi, h, f, c)
    c2 = math.cos(2.0 * phi)
    phidot = c - G * c2 + f * (2.0 + c2)
    thdot = c + f - G * (1.0 + 2.0 * c2)
    if ts.family == "cubic":
        return -phidot, -thdot
    return phidot, thdot


def _start_point(ts: TorusSpec) -> np.ndarray:
    if ts.branch == "outer":
        H, _ = _cubic_plane(ts)
        xc = _outer_center(ts)
        return np.array([xc + _outer_radius(ts, xc, 0.0, H), 0.0, math.sqrt(ts.f), 0.0])
    h, c = ts.effective
    g0 = float(_G(0.0, h, ts.f, c))
    return np.array([math.sqrt(g0), 0.0, math.sqrt(ts.f), 0.0])


def d7_winding(ts: TorusSpec, rtol: float = 1e-12, atol: float = 1e-14) -> tuple[float, float]:
    """Integrate the reduced angle system over one planar loop; return ``(W, period)``."""
    if ts.branch == "outer":
        _, rates = _cubic_plane(ts)
        x0 = _start_point(ts)
        vx, vy, _ = rates(x0[0], 0.0)
        direction = 1 if vy > 0 else -1

        def rhs(t, y):
            return np.array(rates(y[0], y[1]))

        ev = EventSpec("loop", lambda y: y[1], direction=direction, terminal=True)
        tr = dopri5(rhs, (0.0, 1e6), [x0[0], 0.0, 0.0], rtol=rtol, atol=atol,
                    events=[ev], escape_radius=None)
        if not tr.events:
            raise QuadratureFailure("planar loop did not return to its section")
        e = tr.events[-1]
        return float(e.q[2] / (2.0 * math.pi * direction)), float(e.t)
    phid0, _ = _inner_rates(0.0, ts)
    direction = 1 if phid0 > 0 else -1

    def rhs(t, y):
        return np.array(_inner_rates(y[0], ts))

    target = 2.0 * math.pi * direction
    ev = EventSpec("loop", lambda y: y[0] - target, direction=direction, terminal=True)
    tr = dopri5(rhs, (0.0, 1e6), [0.0, 0.0], rtol=rtol, atol=atol, events=[ev],
                escape_radius=None)
    if not tr.events:
        raise QuadratureFailure("reduced angle system did not complete a loop")
    e = tr.events[-1]
    return float(e.q[1] / target), float(e.t)


def closure_residuals(ts: TorusSpec, returns: int, period: float,
                      rtol: float = 1e-11, atol: float = 1e-13) -> list[float]:
    """4D distance to the start at each of the first ``returns`` section crossings."""
    spec = ts.field_spec()
    q0 = _start_point(ts)

    def rhs(t, y):
        return np.array(component_field(spec, y))

    direction = 1 if rhs(0.0, q0)[1] > 0 else -1
    ev = EventSpec("section", lambda y: y[1], direction=direction, terminal=False)
    tr = dopri5(rhs, (0.0, (returns + 0.5) * period), q0, rtol=rtol, atol=atol,
                events=[ev], escape_radius=None)
    hits = [e for e in tr.events if e.t > 0.5 * period]
    return [float(np.linalg.norm(e.q - q0)) for e in hits[:returns]]


# -- results ---------------------------------------------------------------------


@dataclass
class RotationResult:
    """Rotation data of one torus.

    ``I`` is the rotation integral (``W - 1`` on inner tori, ``W`` on outer
    cubic tori) and ``rotation_number`` is ``W``.
    """

    torus: TorusSpec
    I: float
    abs_err: float
    rotation_number: float
    classification: Classification
    cross_check: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)

    @property
    def h(self):
        return self.torus.h

    @property
    def f(self):
        return self.torus.f

    @property
    def c0(self):
        return self.torus.c0

    def to_dict(self):
        return {
            "family": self.torus.family,
            "torus": self.torus.to_dict(),
            "h": self.h, "f": self.f, "c0": self.c0,
            "rotation": {"I": self.I, "abs_err": self.abs_err,
                         "rotation_number": self.rotation_number},
            "classification": self.classification.to_dict(),
            "cross_check": self.cross_check,
            "checks": self.checks,
        }


def _analyze(ts: TorusSpec, cross_check: bool, q_max: int, tol: float,
             oracle_simpson: bool) -> RotationResult:
    checks = check_outer(ts) if ts.branch == "outer" else check_inner(ts)
    I, err = rotation_integral(ts)
    if err >= 1e-10:
        raise QuadratureFailure(f"rotation integral error estimate {err:.3e} not below 1e-10")
    W = I if ts.branch == "outer" else 1.0 + I
    cls = classify_rational(I, q_max=q_max, tol=tol)
    if oracle_simpson and ts.branch == "inner":
        checks["simpson"] = rotation_integral_simpson(ts)
        checks["simpson_deviation"] = abs(checks["simpson"] - I)
    xc = {}
    if cross_check:
        W_ode, period = d7_winding(ts)
        xc["reduced_winding"] = W_ode
        xc["reduced_deviation"] = abs(W_ode - W)
        xc["loop_period"] = period
        n_ret = cls.q if cls.kind == "PERIODIC" else q_max
        res = closure_residuals(ts, n_ret, period)
        xc["returns"] = len(res)
        xc["return_residuals_min"] = min(res) if res else None
        if cls.kind == "PERIODIC":
            xc["closure_residual"] = res[-1] if len(res) == n_ret else None
            xc["closed"] = xc["closure_residual"] is not None and xc["closure_residual"] < 1e-6
        else:
            xc["closure_residual"] = None
            xc["closed"] = bool(res) and min(res) < 1e-6
    return RotationResult(ts, I, err, W, cls, xc, checks)


def rotation_number(ts: TorusSpec, cross_check: bool = True, q_max: int = Q_MAX,
                    tol: float = RATIONAL_TOL, oracle_simpson: bool = False) -> RotationResult:
    """Rotation integral, classification and ODE cross-checks for an inner torus.

    Raises
    ------
    DomainViolation
        If ``f <= 0``, ``f^2 + (2f + c0) h >= 0`` or ``G`` is not positive.
    QuadratureFailure
        If the quadrature error estimate does not fall below ``1e-10``.
    """
    if ts.family != "bernoulli":
        return cubic_torus_analysis(ts, cross_check, q_max, tol)
    return _analyze(ts, cross_check, q_max, tol, oracle_simpson)


def conservation_precheck(ts: TorusSpec, T: float = 20.0) -> dict:
    """Relative drift of ``H`` and ``F`` along a 4D orbit started on the torus."""
    spec = ts.field_spec()
    names = ("H_e417", "F_cyl") if ts.family == "cubic" else ("Hn", "F_cyl")
    q0 = _start_point(ts)
    tr = integrate(spec, q0, (0.0, T), escape_radius=None)
    out = {}
    for name in names:
        d = get_descriptor(name, spec)
        v0 = d(q0)
        vals = np.array([d(q) for q in tr.q])
        out[name] = {"start": v0, "max_rel_drift": float(np.max(np.abs(vals - v0)) / abs(v0))}
    out["start_level_error"] = abs(out[names[0]]["start"] - ts.h) / abs(ts.h)
    return out


def cubic_torus_analysis(ts: TorusSpec, cross_check: bool = True, q_max: int = Q_MAX,
                         tol: float = RATIONAL_TOL, precheck: bool = True) -> RotationResult:
    """Rotation data for a cubic ``a = i`` torus.

    Admissible levels: ``h < 0`` with ``f^2 + h (f + c0^2/2) < 0`` (inner), or
    ``h > 2(4 f + c0^2)`` with a star-shaped planar curve (outer).

    Raises
    ------
    DomainViolation
        For ``h`` in ``[0, 2 c0^2]`` or any other inadmissible ``(h, f)``.
    """
    if ts.family != "cubic":
        raise DomainViolation("cubic_torus_analysis needs a cubic torus")
    if 0.0 <= ts.h <= 2.0 * ts.c0 * ts.c0:
        raise DomainViolation(f"h = {ts.h} lies in [0, 2 c0^2]: no admissible torus")
    res = _analyze(ts, cross_check, q_max, tol, oracle_simpson=False)
    if precheck:
        res.checks["conservation"] = conservation_precheck(ts)
    return res


# -- periodic torus search -------------------------------------------------------


@dataclass
class SearchResult:
    target: float
    h: float
    I: float
    residual: float
    scan_h: list
    scan_I: list
    rotation: RotationResult | None = None

    def to_dict(self):
        return {"target": self.target, "h": self.h, "I": self.I, "residual": self.residual,
                "scan": {"h": self.scan_h, "I": self.scan_I},
                "rotation": self.rotation.to_dict() if self.rotation else None}


def _scan_value(h, family, f, c0):
    try:
        ts = TorusSpec(family, h, f, c0)
        if ts.branch == "outer":
            check_outer(ts)
        return rotation_integral(ts)[0]
    except (DomainViolation, QuadratureFailure, ValueError):
        return math.nan


def scan_interval(family: str, f: float, c0: float, branch: str = "inner") -> tuple[float, float]:
    """Reference level and sign for the admissible ``h`` interval."""
    if branch == "outer":
        return 2.0 * (4.0 * f + c0 * c0), 1.0
    c = c0 if family == "bernoulli" else c0 * c0
    denom = 2.0 * f + c
    if denom == 0.0:
        raise DomainViolation("no admissible h when 2f + c0 = 0")
    h_star = -f * f / denom
    if family == "cubic":
        h_star *= 2.0
    return h_star, 1.0


def periodic_torus_search(f: float, c0: float, target, family: str = "bernoulli",
                          branch: str = "inner", grid: int = 100,
                          span: tuple[float, float] = (-6.0, 4.0),
                          cross_check: bool = True) -> SearchResult:
    """Find ``h`` with ``I(h) = target`` on the admissible interval.

    ``I`` is sampled on ``grid`` levels ``h = h_ref (1 + u)``, ``u`` log-spaced
    over ``10^span``; the first sign change of ``I - target`` is refined with
    Brent's method.

    Raises
    ------
    NoBracket
        If no sampled pair brackets the target.
    """
    target = float(Fraction(target)) if isinstance(target, (str, Fraction)) else float(target)
    h_ref, _ = scan_interval(family, f, c0, branch)
    hs = [h_ref * (1.0 + u) for u in np.logspace(span[0], span[1], grid)]
    vals = pmap(partial(_scan_value, family=family, f=f, c0=c0), hs)
    diffs = [v - target for v in vals]
    bracket = None
    for k in range(len(hs) - 1):
        a, b = diffs[k], diffs[k + 1]
        if math.isfinite(a) and math.isfinite(b) and a * b <= 0:
            bracket = (hs[k], hs[k + 1])
            break
    finite = [v for v in vals if math.isfinite(v)]
    if bracket is None:
        lo, hi = (min(finite), max(finite)) if finite else (math.nan, math.nan)
        raise NoBracket(f"target {target} not bracketed; sampled I in [{lo:.6g}, {hi:.6g}]")
    fn = lambda h: _scan_value(h, family, f, c0) - target  # noqa: E731
    h_sol = brentq(fn, bracket[0], bracket[1], xtol=1e-300, rtol=1e-15, maxiter=300)
    ts = TorusSpec(family, h_sol, f, c0)
    I_sol = rotation_integral(ts)[0]
    rot = None
    if cross_check:
        rot = (cubic_torus_analysis(ts) if family == "cubic" else rotation_number(ts))
    return SearchResult(target, h_sol, I_sol, abs(I_sol - target), hs, vals, rot)
