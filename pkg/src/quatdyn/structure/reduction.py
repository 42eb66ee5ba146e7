"""Planar reductions and limit-set reports for the Bernoulli and cubic families."""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from ..errors import WrongFamily, WrongRegime
from ..fields import REGIME_EPS, Family, FieldSpec, eval_field
from ..integrator import (
    EventSpec,
    ProbeStatus,
    dopri5,
    integrate,
    limit_set_probe,
)
from ..invariants import identity_d3, lie_derivative, get_descriptor
from ..quaternion import Quaternion, binomial_expand

__all__ = [
    "CaseAReduction",
    "complex_reduce_case_a",
    "classify_case_a",
    "isochronous_centers",
    "case_b_region_report",
    "level_gap_check",
    "hyperplane_heteroclinic_report",
    "power_roots",
]


def power_roots(c0: float, m: int) -> list[complex]:
    """Complex roots of ``z^m = c0`` ordered by argument (``delta = 1`` for ``c0 < 0``)."""
    delta = 0 if c0 > 0 else 1
    rad = abs(c0) ** (1.0 / m)
    return [rad * cmath.exp(1j * (delta * math.pi + 2.0 * k * math.pi) / m) for k in range(m)]


def _require_bernoulli_real_c(spec: FieldSpec, name: str):
    if spec.family is not Family.BERNOULLI:
        raise WrongFamily(f"{name} needs the Bernoulli family")
    if not spec.c.is_real(REGIME_EPS):
        raise WrongRegime(f"{name} needs real c")


# -- case (a): real a ----------------------------------------------------------


@dataclass(frozen=True)
class CaseAReduction:
    """Invariant plane ``q2 = h2 q1, q3 = h3 q1`` with coordinate ``z = q0 + i q1 s``.

    ``s = sqrt(1 + h2^2 + h3^2)``; on the plane the flow is ``z' = a (c0 z - z^n)``.
    """

    a: float
    c0: float
    n: int
    h2: float
    h3: float

    @property
    def scale(self) -> float:
        return math.sqrt(1.0 + self.h2 ** 2 + self.h3 ** 2)

    def field(self, z: complex) -> complex:
        return self.a * (self.c0 * z - z ** self.n)

    def rhs(self, t, y):
        w = self.field(complex(y[0], y[1]))
        return np.array([w.real, w.imag])

    def embed(self, z: complex) -> np.ndarray:
        y = z.imag / self.scale
        return np.array([z.real, y, self.h2 * y, self.h3 * y])

    def project(self, q) -> complex:
        return complex(q[0], q[1] * self.scale)

    def equilibria(self) -> list[complex]:
        return [0j] + power_roots(self.c0, self.n - 1)

    def to_dict(self):
        return {"a": self.a, "c0": self.c0, "n": self.n, "h2": self.h2, "h3": self.h3,
                "scale": self.scale}


def complex_reduce_case_a(spec: FieldSpec, h2: float = 0.0, h3: float = 0.0) -> CaseAReduction:
    """Reduce the real-``a`` Bernoulli flow to the complex line through ``(1, h2, h3)``."""
    _require_bernoulli_real_c(spec, "complex_reduce_case_a")
    if not spec.a.is_real(REGIME_EPS) or spec.a.q0 == 0.0:
        raise WrongRegime("case (a) needs a - conj(a) = 0 and a + conj(a) != 0")
    return CaseAReduction(spec.a.q0, spec.c.q0, spec.n, float(h2), float(h3))


def _probe_label(res, names):
    if res.status is ProbeStatus.CONVERGED:
        return names[res.target_index]
    return res.status.value


def classify_case_a(spec: FieldSpec, n_generic: int = 6, seed: int = 0,
                    t_max: float = 60.0) -> dict:
    """Equilibria and heteroclinic structure of the real-``a`` Bernoulli flow.

    Generic starts on random invariant planes are probed in both time
    directions; the ``2(n-1)`` invariant rays ``e^{i(n-1)alpha} = +-1`` are
    probed from one point each.
    """
    red0 = complex_reduce_case_a(spec)
    a, c0, n = red0.a, red0.c0, red0.n
    m = n - 1
    rng = np.random.default_rng(seed)
    roots = power_roots(c0, m)
    rad = abs(c0) ** (1.0 / m)
    names = ["0"] + [f"z{k + 1}" for k in range(m)]

    generic = []
    for _ in range(n_generic):
        h2, h3 = rng.normal(size=2)
        red = CaseAReduction(a, c0, n, h2, h3)
        while True:
            z = complex(*rng.normal(scale=rad, size=2))
            # keep away from the invariant rays and the equilibria
            ang = cmath.phase(z) * m
            if abs(math.sin(ang)) > 0.2 and min(abs(z - w) for w in red.equilibria()) > 0.05 * rad:
                break
        targets = [red.embed(w) for w in red.equilibria()]
        fw = limit_set_probe(spec, red.embed(z), "forward", targets, t_max)
        bw = limit_set_probe(spec, red.embed(z), "backward", targets, t_max)
        generic.append({
            "h2": h2, "h3": h3, "z0": z,
            "forward": _probe_label(fw, names), "forward_residual": fw.residual,
            "backward": _probe_label(bw, names), "backward_residual": bw.residual,
        })

    rays = []
    red = CaseAReduction(a, c0, n, 0.0, 0.0)
    targets = [red.embed(w) for w in red.equilibria()]
    for k in range(2 * m):
        alpha = k * math.pi / m
        s = 1 if k % 2 == 0 else -1
        kind = "zk-infinity" if c0 * s > 0 else "origin-infinity"
        rho = 2.0 * rad if kind == "zk-infinity" else 0.5 * rad
        z = rho * cmath.exp(1j * alpha)
        fw = limit_set_probe(spec, red.embed(z), "forward", targets, t_max)
        bw = limit_set_probe(spec, red.embed(z), "backward", targets, t_max)
        expected_escape = "forward" if a * s < 0 else "backward"
        rays.append({
            "alpha": alpha, "sign": s, "kind": kind, "expected_escape": expected_escape,
            "forward": _probe_label(fw, names), "backward": _probe_label(bw, names),
        })

    # projection of the 4D flow against the reduced complex flow
    h2, h3 = rng.normal(size=2)
    redp = CaseAReduction(a, c0, n, h2, h3)
    zp = complex(0.3 * rad, 0.4 * rad)
    tr4 = integrate(spec, redp.embed(zp), (0.0, 5.0))
    tr2 = dopri5(redp.rhs, (0.0, 5.0), [zp.real, zp.imag])
    ts = np.linspace(0.0, 5.0, 101)
    proj = np.array([redp.project(q) for q in tr4(ts)])
    red_vals = tr2(ts) @ np.array([1.0, 1j])
    projection_err = float(np.max(np.abs(proj - red_vals)))

    origin_stable = a * c0 < 0
    gen_ok = sum(
        1 for g in generic
        if (g["backward"] == "0" and g["forward"].startswith("z")) != origin_stable
        and (g["forward"] == "0" and g["backward"].startswith("z")) == origin_stable
    )
    escapes_origin = sum(1 for r in rays if r["kind"] == "origin-infinity"
                         and ProbeStatus.ESCAPED.value in (r["forward"], r["backward"]))
    escapes_total = sum(1 for r in rays if ProbeStatus.ESCAPED.value in (r["forward"], r["backward"]))
    return {
        "family": spec.family.value,
        "regime": "case (a): a real, c real",
        "reduction": "z' = a (c0 z - z^n) on each plane q2 = h2 q1, q3 = h3 q1",
        "equilibria": [0j] + roots,
        "generic": generic,
        "rays": rays,
        "counts": {
            "generic_total": len(generic),
            "generic_origin_to_zk": gen_ok,
            "origin_infinity_escapes": escapes_origin,
            "exceptional_escapes": escapes_total,
            "expected_origin_infinity": m,
            "expected_exceptional": 2 * m,
        },
        "residuals": {"projection_max_abs": projection_err},
    }


# -- case (c): a = a1 i, isochronous centers ------------------------------------


def _return_time(spec: FieldSpec, start: np.ndarray, center: complex, period_guess: float,
                 rtol: float = 1e-12, atol: float = 1e-14) -> tuple[float, float, int]:
    """First return of the S1-plane orbit to the horizontal line through ``center``."""
    v = np.array(eval_field(spec, start))
    direction = 1 if v[1] > 0 else -1
    ev = EventSpec("section", lambda y: y[1] - center.imag, direction=direction, terminal=True)
    tr = integrate(spec, start, (0.0, 3.0 * period_guess), rtol=rtol, atol=atol, events=[ev])
    if not tr.events:
        return float("nan"), float("nan"), direction
    t = tr.events[0].t
    resid = float(np.linalg.norm(tr.events[0].q - start))
    # orientation: sign of d(arg(z - center))/dt at the start
    dz = complex(start[0] - center.real, start[1] - center.imag)
    w = complex(v[0], v[1])
    orient = 1 if (dz.conjugate() * w).imag > 0 else -1
    return t, resid, orient


def isochronous_centers(spec: FieldSpec, amplitudes=(0.01, 0.1)) -> dict:
    """Centers of the ``a = a1 i`` flow on the plane ``q2 = q3 = 0`` and their periods.

    The origin has period ``2 pi / |a1 c0|``; each root of ``z^(n-1) = c0``
    has period ``2 pi / ((n-1)|a1 c0|)`` with the opposite orientation.
    """
    _require_bernoulli_real_c(spec, "isochronous_centers")
    norm = spec.normalized()
    if abs(norm.a.q0) > REGIME_EPS:
        raise WrongRegime("isochronous centers need a + conj(a) = 0")
    a1 = norm.a.q1
    c0, n = norm.c.q0, norm.n
    m = n - 1
    rad = abs(c0) ** (1.0 / m)
    t_origin = 2.0 * math.pi / abs(a1 * c0)
    t_outer = 2.0 * math.pi / (m * abs(a1 * c0))
    centers = [(0j, "origin", t_origin)] + [(w, f"z{k + 1}", t_outer)
                                          for k, w in enumerate(power_roots(c0, m))]
    out = []
    for w, name, formula in centers:
        for amp in amplitudes:
            start = np.array([w.real + amp * rad, w.imag, 0.0, 0.0])
            t, resid, orient = _return_time(norm, start, w, formula)
            out.append({
                "center": w, "name": name, "amplitude": amp * rad,
                "formula_period": formula, "measured_period": t,
                "rel_error": abs(t - formula) / formula, "return_residual": resid,
                "orientation": orient,
            })
    origin_orient = {r["orientation"] for r in out if r["name"] == "origin"}
    outer_orient = {r["orientation"] for r in out if r["name"] != "origin"}
    return {
        "family": spec.family.value,
        "regime": "case (c): a + conj(a) = 0, c real",
        "frame": spec.frame,
        "equilibria": [c[0] for c in centers],
        "periods": {"origin": t_origin, "outer": t_outer},
        "centers": out,
        "opposite_orientation": len(origin_orient) == 1 and len(outer_orient) == 1
        and origin_orient != outer_orient,
        "max_rel_error": max(r["rel_error"] for r in out),
    }


# -- case (b): a^2 - conj(a)^2 != 0 --------------------------------------------


def level_gap_check(c0: float, n: int, n_points: int = 100_000, seed: int = 0,
                    scale: float | None = None) -> dict:
    """Sample ``Hn`` and count values falling in the empty band ``(0, c0)``."""
    rng = np.random.default_rng(seed)
    m = n - 1
    scale = abs(c0) ** (1.0 / m) if scale is None else scale
    q = rng.normal(scale=scale, size=(n_points, 4))
    nq = np.sum(q * q, axis=1)
    z = q[:, 0] + 1j * np.sqrt(np.sum(q[:, 1:] ** 2, axis=1))
    s = 2.0 * np.real(z ** m) - c0
    ok = np.abs(s) >= 1e-12
    h = nq[ok] ** m / s[ok]
    lo, hi = (0.0, c0) if c0 > 0 else (c0, 0.0)
    inside = int(np.sum((h > lo) & (h < hi)))
    return {
        "c0": c0, "n": n, "n_points": int(ok.sum()), "in_gap": inside,
        "min_positive": float(h[h > 0].min()) if np.any(h > 0) else None,
        "max_negative": float(h[h < 0].max()) if np.any(h < 0) else None,
    }


def _p_points(spec: FieldSpec, k: int, rng) -> list[np.ndarray]:
    m, c0 = spec.n - 1, spec.c.q0
    pts = []
    while len(pts) < k:
        u = rng.normal(size=4)
        u /= np.linalg.norm(u)
        re_m, _ = binomial_expand(Quaternion(*u), m)
        ratio = c0 / (2.0 * re_m)
        if abs(re_m) < 1e-3:
            continue
        if ratio > 0:
            t = ratio ** (1.0 / m)
        elif m % 2 == 1:
            t = -((-ratio) ** (1.0 / m))
        else:
            continue
        if 0.2 < abs(t) < 3.0:
            pts.append(t * u)
    return pts


def _plane_roots(q, c0: float, m: int) -> list[np.ndarray]:
    v = np.asarray(q[1:], dtype=float)
    nv = np.linalg.norm(v)
    u = v / nv if nv > 1e-12 else np.array([1.0, 0.0, 0.0])
    return [np.concatenate(([w.real], w.imag * u)) for w in power_roots(c0, m)]


def case_b_region_report(spec: FieldSpec, n_samples: int = 8, seed: int = 0,
                         t_max: float = 80.0, n_gap: int = 100_000) -> dict:
    """Heteroclinic orbits through the branches of ``P = {S = 0}``.

    Each sampled P-point is integrated both ways; the endpoint is compared
    with the origin and the roots of ``q^(n-1) = c0`` lying in the complex
    plane of the final state.
    """
    _require_bernoulli_real_c(spec, "case_b_region_report")
    norm = spec.normalized()
    if abs(norm.a.q0) <= REGIME_EPS or abs(norm.a.q1) <= REGIME_EPS:
        raise WrongRegime("case (b) needs a^2 - conj(a)^2 != 0")
    rng = np.random.default_rng(seed)
    m, c0 = spec.n - 1, spec.c.q0
    S = get_descriptor("S", spec)
    rows = []
    for p in _p_points(spec, n_samples, rng):
        d3 = identity_d3(spec, p)
        lie = lie_derivative(S, spec, p)
        ends = {}
        for direction in ("forward", "backward"):
            t_end = t_max if direction == "forward" else -t_max
            pre = integrate(spec, p, (0.0, t_end))
            targets = [np.zeros(4)] + _plane_roots(pre.final, c0, m)
            res = limit_set_probe(spec, p, direction, targets, t_max)
            label = res.status.value
            if res.status is ProbeStatus.CONVERGED:
                label = "origin" if res.target_index == 0 else "root"
            ends[direction] = (label, res.residual)
        rows.append({
            "q": p, "d3_closed_form": d3, "d3_lie": lie,
            "sign_matches": bool(np.sign(lie) == np.sign(spec.a.q0)),
            "forward": ends["forward"][0], "forward_residual": ends["forward"][1],
            "backward": ends["backward"][0], "backward_residual": ends["backward"][1],
        })
    hetero = sum(1 for r in rows if {r["forward"], r["backward"]} == {"origin", "root"})
    return {
        "family": spec.family.value,
        "regime": "case (b): a^2 - conj(a)^2 != 0, c real",
        "equilibria": {"origin": [0, 0, 0, 0], "roots": f"q^{m} = {c0}"},
        "samples": rows,
        "counts": {"total": len(rows), "origin_root_heteroclinic": hetero,
                   "d3_sign_matches": sum(r["sign_matches"] for r in rows)},
        "residuals": {"d3_max_rel": max(abs(r["d3_lie"] - r["d3_closed_form"]) /
                                        max(1.0, abs(r["d3_closed_form"])) for r in rows)},
        "level_gap": level_gap_check(c0, spec.n, n_gap, seed) if c0 > 0 else None,
    }


# -- hyperplane/hyperboloid heteroclinics --------------------------------------


def hyperplane_heteroclinic_report(spec: FieldSpec, n_starts: int = 20, seed: int = 0,
                                   t_max: float = 100.0) -> dict:
    """Probe orbits started on ``L = 0`` for the non-real-``c`` Bernoulli flow (n = 2)
    or the cubic flow with ``a + conj(a) != 0``.

    Bernoulli: ``O`` and ``S = c``; the one with ``a c0 > 0`` as repeller is
    the backward limit.  Cubic: starts on ``L+`` / ``L-`` tend to ``S+`` /
    ``S-`` in the stable direction (``a0 < 0`` forward) and to ``O`` in the other.
    """
    rng = np.random.default_rng(seed)
    rows = []
    if spec.family is Family.BERNOULLI:
        if not (spec.n == 2 and spec.a.is_real(REGIME_EPS) and not spec.c.is_real(REGIME_EPS)):
            raise WrongRegime("needs real a, n = 2 and non-real c")
        if abs(spec.c.q0) <= REGIME_EPS:
            raise WrongRegime("needs c + conj(c) != 0")
        a = spec.a.q0
        cv = np.array(spec.c, dtype=float)
        K0 = float(cv @ cv)
        O, Sq = np.zeros(4), cv
        toward_s = "forward" if a * spec.c.q0 > 0 else "backward"
        for _ in range(n_starts):
            x = rng.normal(size=4)
            q = x + (K0 / 2.0 - float(cv @ x)) * cv / K0
            expected = {toward_s: "S", ("backward" if toward_s == "forward" else "forward"): "O"}
            rows.append(_probe_pair(spec, q, [O, Sq], ["O", "S"], expected, t_max))
        regime = "a real, n = 2, c + conj(c) != 0, c - conj(c) != 0"
        equilibria = {"O": O, "S": Sq}
    elif spec.family is Family.CUBIC:
        a0 = spec.a.q0
        if abs(a0) <= REGIME_EPS:
            raise WrongRegime("needs a + conj(a) != 0")
        c0 = spec.c0
        O, Sp, Sm = np.zeros(4), np.array([c0, 0, 0, 0.0]), np.array([-c0, 0, 0, 0.0])
        toward_s = "forward" if a0 < 0 else "backward"
        away = "backward" if toward_s == "forward" else "forward"
        for k in range(n_starts):
            v = rng.normal(size=3) * rng.uniform(0.0, 1.5)
            sheet = 1.0 if k % 2 == 0 else -1.0
            q0 = sheet * math.sqrt(float(v @ v) + c0 * c0 / 2.0)
            q = np.concatenate(([q0], v))
            expected = {toward_s: "S+" if sheet > 0 else "S-", away: "O"}
            rows.append(_probe_pair(spec, q, [O, Sp, Sm], ["O", "S+", "S-"], expected, t_max))
        regime = "cubic, a + conj(a) != 0"
        equilibria = {"O": O, "S+": Sp, "S-": Sm}
    else:
        raise WrongFamily("hyperplane_heteroclinic_report needs Bernoulli or Cubic")
    ok = sum(1 for r in rows if r["matches"])
    return {
        "family": spec.family.value,
        "regime": regime,
        "equilibria": equilibria,
        "starts": rows,
        "counts": {"total": len(rows), "matching": ok},
        "residuals": {"max_terminal_distance": max(
            max(r["forward_residual"] or 0.0, r["backward_residual"] or 0.0) for r in rows)},
    }


def _probe_pair(spec, q, targets, names, expected, t_max):
    out = {"q": q}
    for direction in ("forward", "backward"):
        res = limit_set_probe(spec, q, direction, targets, t_max)
        out[direction] = _probe_label(res, names)
        out[f"{direction}_residual"] = res.residual
    out["expected"] = expected
    out["matches"] = all(out[d] == expected[d] for d in expected)
    return out
