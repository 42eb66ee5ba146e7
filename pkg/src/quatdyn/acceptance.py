"""Acceptance suite: nine property checks with quantitative thresholds.

Each ``criterion_k`` returns a :class:`CriterionResult`; ``run_all`` runs
them in order.  The same functions back ``tests/test_acceptance.py`` and the
``repro`` command.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainViolation, NoBracket, SingularLocus
from .fields import Family, FieldSpec
from .integrator import integrate
from .invariants import (
    cofactor_residual,
    get_descriptor,
    identity_d1,
    identity_d2,
    identity_d3,
    identity_e52,
    identity_e416,
    identity_e418,
    lie_derivative,
    poisson_bracket,
)
from .quaternion import Quaternion, binomial_expand
from .structure.closed_form import closed_form_n2_state, n2_coordinates, n2_period
from .structure.reduction import (
    _p_points,
    classify_case_a,
    hyperplane_heteroclinic_report,
    isochronous_centers,
    level_gap_check,
)
from .structure.spectrum import affine_check, linear_spectrum
from .structure.torus import (
    TorusSpec,
    closure_residuals,
    cubic_torus_analysis,
    d7_winding,
    periodic_torus_search,
    rotation_integral,
    rotation_integral_simpson,
    rotation_number,
)

__all__ = ["CriterionResult", "CRITERIA", "run_all", "run_criterion", "format_line"]


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    metrics: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    seconds: float = 0.0

    def to_dict(self):
        return {"number": self.number, "title": self.title, "passed": self.passed,
                "metrics": self.metrics, "notes": self.notes, "seconds": self.seconds}


def format_line(r: CriterionResult) -> str:
    status = "PASS" if r.passed else "FAIL"
    note = f" ({'; '.join(r.notes)})" if r.notes else ""
    return f"[{status}] {r.number}. {r.title}{note}"


def _q(rng, scale=1.0):
    return Quaternion(*rng.normal(scale=scale, size=4))


def _rel(x, ref):
    return abs(x - ref) / max(abs(ref), 1e-300)


# -- 1 -----------------------------------------------------------------------


def criterion_1(n_triples: int = 10_000, seed: int = 1) -> CriterionResult:
    rng = np.random.default_rng(seed)
    worst = {"associativity": 0.0, "distributivity": 0.0, "conj_antihom": 0.0,
             "norm_multiplicative": 0.0, "binomial_vs_pow": 0.0}
    for _ in range(n_triples):
        a, b, c = _q(rng), _q(rng), _q(rng)
        na, nb, nc = abs(a), abs(b), abs(c)
        d = np.array((a * b) * c) - np.array(a * (b * c))
        worst["associativity"] = max(worst["associativity"], np.max(np.abs(d)) / (na * nb * nc))
        d = np.array(a * (b + c)) - np.array(a * b + a * c)
        worst["distributivity"] = max(worst["distributivity"], np.max(np.abs(d)) / (na * (nb + nc)))
        d = np.array((a * b).conj()) - np.array(b.conj() * a.conj())
        worst["conj_antihom"] = max(worst["conj_antihom"], np.max(np.abs(d)) / (na * nb))
        worst["norm_multiplicative"] = max(worst["norm_multiplicative"],
                                           abs(abs(a * b) - na * nb) / (na * nb))
    for _ in range(1000):
        q = _q(rng)
        p = Quaternion(1.0, 0.0, 0.0, 0.0)
        for n in range(0, 11):
            s, v = binomial_expand(q, n)
            via = np.array([s, v * q.q1, v * q.q2, v * q.q3])
            worst["binomial_vs_pow"] = max(worst["binomial_vs_pow"],
                                           np.max(np.abs(via - np.array(p))) / abs(q) ** n)
            p = p * q
    worst = {k: float(v) for k, v in worst.items()}
    return CriterionResult(1, "Algebra suite", all(v < 1e-12 for v in worst.values()), worst)


# -- 2 -----------------------------------------------------------------------


def _identity_max(spec_fn, desc_name, closed, point_fn, n, rng):
    worst = 0.0
    count = 0
    while count < n:
        spec = spec_fn(rng)
        q = point_fn(spec, rng)
        if q is None:
            continue
        d = get_descriptor(desc_name, spec)
        try:
            if not d.is_regular(q, 1e-6):
                continue
            lie = lie_derivative(d, spec, q)
            cf = closed(spec, q)
        except SingularLocus:
            continue
        worst = max(worst, _rel(cf, lie))
        count += 1
    return float(worst)


def criterion_2(n_points: int = 1000, seed: int = 2) -> CriterionResult:
    rng = np.random.default_rng(seed)

    def bern_real_c(rng):
        n = int(rng.integers(2, 6))
        return FieldSpec.bernoulli(_q(rng), Quaternion(rng.normal(), 0, 0, 0), n)

    def bern_e50(rng):
        c = Quaternion(rng.normal(), *rng.normal(size=3))
        return FieldSpec.bernoulli(Quaternion(rng.normal(), 0, 0, 0), c, 2)

    def cubic(rng):
        return FieldSpec.cubic(_q(rng), abs(rng.normal()) + 0.1)

    def generic(spec, rng):
        return _q(rng)

    def on_p(spec, rng):
        pts = _p_points(spec, 1, rng)
        return pts[0] if pts else None

    def on_l(spec, rng):
        v = rng.normal(size=3)
        q0 = math.sqrt(float(v @ v) + spec.c0 ** 2 / 2.0) * rng.choice([-1.0, 1.0])
        return np.concatenate(([q0], v))

    m = {
        "d1": _identity_max(bern_real_c, "Hn", identity_d1, generic, n_points, rng),
        "d2": _identity_max(bern_real_c, "S", identity_d2, generic, n_points, rng),
        "d3": _identity_max(bern_real_c, "S", identity_d3, on_p, n_points, rng),
        "e52": _identity_max(bern_e50, "H_e51", identity_e52, generic, n_points, rng),
        "e4.16": _identity_max(cubic, "L_hyp", identity_e416, on_l, n_points, rng),
        "e4.18": _identity_max(cubic, "H_e417", identity_e418, generic, n_points, rng),
    }
    ok = all(v < 1e-9 for v in m.values())

    cof = 0.0
    for _ in range(n_points):
        spec = FieldSpec.bernoulli(Quaternion(rng.normal(), 0, 0, 0),
                                   Quaternion(rng.normal(), 0, 0, 0), int(rng.integers(2, 6)))
        q = _q(rng)
        for poly in ("q1", "q2", "q3"):
            cof = max(cof, abs(cofactor_residual(poly, spec, q)))
    m["cofactor_max_abs"] = float(cof)

    br = 0.0
    count = 0
    while count < n_points:
        n = int(rng.integers(2, 5))
        spec = FieldSpec.bernoulli(Quaternion(0, 1, 0, 0), Quaternion(rng.uniform(0.5, 2), 0, 0, 0), n)
        q = _q(rng)
        h, f = get_descriptor("Hn", spec), get_descriptor("F_cyl", spec)
        if not h.is_regular(q, 0.1):
            continue
        br = max(br, abs(poisson_bracket(h, f, q)))
        count += 1
    m["poisson_Hn_F_max_abs"] = float(br)
    ok = ok and cof < 1e-10 and br < 1e-9
    return CriterionResult(2, "Identity suite", ok, m)


# -- 3 -----------------------------------------------------------------------


def _drift(spec, names, starts, T=20.0):
    worst = {n: 0.0 for n in names}
    escaped = 0
    for q0 in starts:
        tr = integrate(spec, q0, (0.0, T))
        escaped += tr.status.value == "ESCAPE"
        for n in names:
            d = get_descriptor(n, spec)
            v0 = d(q0)
            vals = np.array([d(q) for q in tr.q])
            worst[n] = max(worst[n], float(np.max(np.abs(vals - v0)) / abs(v0)))
    return worst, escaped


def _starts(spec, names, k, rng, scale):
    out = []
    while len(out) < k:
        q = rng.normal(scale=scale, size=4)
        try:
            vals = [get_descriptor(n, spec)(q) for n in names]
        except SingularLocus:
            continue
        if all(abs(v) > 0.05 for v in vals) and all(
                get_descriptor(n, spec).is_regular(q, 0.05) for n in names):
            out.append(q)
    return out


def criterion_3(n_starts: int = 20, T: float = 20.0, seed: int = 3) -> CriterionResult:
    rng = np.random.default_rng(seed)
    regimes = {
        # forward limits at the non-real roots +-i keep q1 away from 0
        "thm1a": (FieldSpec.bernoulli(Quaternion(-1, 0, 0, 0), Quaternion(-1, 0, 0, 0), 3),
                  ("H2", "H3"), 0.5),
        "thm1c": (FieldSpec.bernoulli(Quaternion(0, 1, 0, 0), Quaternion(1, 0, 0, 0), 3),
                  ("Hn", "F_cyl"), 0.3),
        "thm3b": (FieldSpec.bernoulli(Quaternion(1, 0, 0, 0), Quaternion(0, 1, 0, 0), 2),
                  ("H_e51", "F_e50b"), 0.3),
        "thm4b": (FieldSpec.cubic(Quaternion(0, 1, 0, 0), 1.0), ("H_e417", "F_cyl"), 0.3),
    }
    metrics = {}
    ok = True
    for key, (spec, names, scale) in regimes.items():
        worst, esc = _drift(spec, names, _starts(spec, names, n_starts, rng, scale), T)
        for n, v in worst.items():
            metrics[f"{key}:{n}"] = v
            ok = ok and v < 1e-8
        metrics[f"{key}:escaped"] = esc
    return CriterionResult(3, "Conservation suite", ok, metrics)


# -- 4 -----------------------------------------------------------------------


def criterion_4(n_starts: int = 10, T: float = 3.0, seed: int = 4) -> CriterionResult:
    rng = np.random.default_rng(seed)
    c0 = 1.0
    spec = FieldSpec.bernoulli(Quaternion(0, 1, 0, 0), Quaternion(c0, 0, 0, 0), 2)
    match = closure = 0.0
    count = 0
    while count < n_starts:
        q0 = rng.normal(scale=0.7, size=4)
        z0, r, _ = n2_coordinates(q0, c0)
        if abs(z0.real) < 0.05:
            continue
        ts = np.linspace(0.0, T, 61)
        tr = integrate(spec, q0, (0.0, T))
        match = max(match, float(np.max(np.abs(tr(ts) - closed_form_n2_state(q0, ts, c0)))))
        P = n2_period(r, c0)
        qP = integrate(spec, q0, (0.0, P)).final
        closure = max(closure, float(np.linalg.norm(qP - q0)))
        count += 1
    m = {"max_abs_deviation": match, "closure_residual": closure}
    return CriterionResult(4, "Closed-form suite", match < 1e-6 and closure < 1e-6, m)


# -- 5 -----------------------------------------------------------------------


def criterion_5() -> CriterionResult:
    m = {}
    ok = True
    for n in (2, 3):
        for c0 in (1.0, 2.0):
            spec = FieldSpec.bernoulli(Quaternion(0, 1, 0, 0), Quaternion(c0, 0, 0, 0), n)
            rep = isochronous_centers(spec)
            m[f"n={n},c0={c0:g}"] = rep["max_rel_error"]
            m[f"n={n},c0={c0:g}:opposite_orientation"] = rep["opposite_orientation"]
            ok = ok and rep["max_rel_error"] < 1e-3
    return CriterionResult(5, "Isochronous periods", ok, m)


# -- 6 -----------------------------------------------------------------------


def criterion_6(seed: int = 6) -> CriterionResult:
    f, c0 = 1.0, 1.0
    h_star = -f * f / (2 * f + c0)
    grid = [h_star * (1.0 + u) for u in np.logspace(-2, 2, 10)]
    dev = 0.0
    for h in grid:
        ts = TorusSpec.bernoulli(h, f, c0)
        dev = max(dev, abs(rotation_integral(ts)[0] - rotation_integral_simpson(ts)))
    m = {"quadrature_vs_simpson": float(dev)}
    notes = []
    ok = dev < 1e-9

    try:
        s = periodic_torus_search(f, c0, "1/3")
        m["search_1/3_residual"] = s.residual
        m["search_1/3_closure"] = s.rotation.cross_check.get("closure_residual")
        ok = ok and s.residual < 1e-11 and s.rotation.cross_check.get("closed", False)
    except NoBracket as exc:
        m["search_1/3"] = f"NoBracket: {exc}"
        notes.append("I(h) = 1/3 not attained on the admissible h range")
        ok = False

    golden = -(math.sqrt(5.0) - 1.0) / 2.0
    s = periodic_torus_search(f, c0, golden, cross_check=False)
    ts = TorusSpec.bernoulli(s.h, f, c0)
    rot = rotation_number(ts, cross_check=False)
    _, period = d7_winding(ts)
    res = closure_residuals(ts, 64, period)
    m["quasiperiodic_h"] = s.h
    m["quasiperiodic_class"] = str(rot.classification)
    m["quasiperiodic_min_return_residual"] = min(res)
    ok = ok and rot.classification.kind == "QUASIPERIODIC" and min(res) > 1e-6
    return CriterionResult(6, "Rotation-number suite", ok, m, notes)


# -- 7 -----------------------------------------------------------------------


def criterion_7(seed: int = 7) -> CriterionResult:
    spec = FieldSpec.bernoulli(Quaternion(1, 0, 0, 0), Quaternion(1, 0, 0, 0), 3)
    rep = classify_case_a(spec, n_generic=10, seed=seed)
    cnt = rep["counts"]
    ok_a = (cnt["generic_origin_to_zk"] == cnt["generic_total"]
            and cnt["origin_infinity_escapes"] == spec.n - 1
            and rep["residuals"]["projection_max_abs"] < 1e-8)
    b3 = FieldSpec.bernoulli(Quaternion(1, 0, 0, 0), Quaternion(0.5, 0.8, 0.3, 0.0), 2)
    r3 = hyperplane_heteroclinic_report(b3, n_starts=20, seed=seed)
    c4 = FieldSpec.cubic(Quaternion(-1, 0, 0, 0), 1.0)
    r4 = hyperplane_heteroclinic_report(c4, n_starts=20, seed=seed)
    m = {
        "thm1a_generic": f"{cnt['generic_origin_to_zk']}/{cnt['generic_total']}",
        "thm1a_origin_infinity": cnt["origin_infinity_escapes"],
        "thm1a_projection": rep["residuals"]["projection_max_abs"],
        "thm3a_matching": f"{r3['counts']['matching']}/{r3['counts']['total']}",
        "thm3a_max_distance": r3["residuals"]["max_terminal_distance"],
        "thm4a_matching": f"{r4['counts']['matching']}/{r4['counts']['total']}",
        "thm4a_max_distance": r4["residuals"]["max_terminal_distance"],
    }
    ok = (ok_a
          and r3["counts"]["matching"] == 20 and r3["residuals"]["max_terminal_distance"] < 1e-4
          and r4["counts"]["matching"] == 20 and r4["residuals"]["max_terminal_distance"] < 1e-4)
    return CriterionResult(7, "Heteroclinic suites", ok, m)


# -- 8 -----------------------------------------------------------------------


def criterion_8(n_draws: int = 1000, seed: int = 8) -> CriterionResult:
    rng = np.random.default_rng(seed)
    m = {}
    ok = True
    for fam in (Family.LINEAR_LL, Family.LINEAR_LCONJ, Family.LINEAR_CONJL):
        worst = energy = 0.0
        for _ in range(n_draws):
            spec = FieldSpec(fam, _q(rng), b=_q(rng))
            r = linear_spectrum(spec, energy=fam is Family.LINEAR_LL)
            worst = max(worst, r.max_deviation)
            if r.energy_residual is not None:
                energy = max(energy, r.energy_residual)
        m[f"{fam.value}:max_deviation"] = worst
        ok = ok and worst < 1e-10
        if fam is Family.LINEAR_LL:
            m["esu1_energy_residual"] = energy
            ok = ok and energy < 1e-10
    aff = 0.0
    for fam in (Family.AFFINE_L, Family.AFFINE_R):
        for _ in range(100):
            aff = max(aff, affine_check(FieldSpec(fam, _q(rng), b=_q(rng)))["field_at_zero"])
    m["affine_field_at_zero"] = aff
    ok = ok and aff < 1e-13
    return CriterionResult(8, "Spectrum suite", ok, m)


# -- 9 -----------------------------------------------------------------------


def criterion_9(n_points: int = 100_000, seed: int = 9) -> CriterionResult:
    m = {}
    ok = True
    for n, c0 in ((2, 1.0), (3, 1.0), (3, 2.0)):
        g = level_gap_check(c0, n, n_points, seed)
        m[f"n={n},c0={c0:g}:in_gap"] = g["in_gap"]
        ok = ok and g["in_gap"] == 0
    rejected = total = 0
    for c0 in (0.5, 1.0, 2.0):
        for h in np.linspace(0.0, 2.0 * c0 * c0, 11):
            total += 1
            try:
                cubic_torus_analysis(TorusSpec.cubic(h, 1.0, c0), cross_check=False,
                                     precheck=False)
            except DomainViolation:
                rejected += 1
    m["cubic_gate_rejected"] = f"{rejected}/{total}"
    ok = ok and rejected == total
    return CriterionResult(9, "Emptiness/level-structure checks", ok, m)


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
            6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9}


def run_criterion(k: int) -> CriterionResult:
    t0 = time.perf_counter()
    res = CRITERIA[k]()
    res.seconds = time.perf_counter() - t0
    return res


def run_all(numbers=None) -> list[CriterionResult]:
    return [run_criterion(k) for k in (numbers or sorted(CRITERIA))]
