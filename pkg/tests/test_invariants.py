import numpy as np
import pytest
from hypothesis import given

from conftest import qarr, quaternions
from quatdyn.errors import ConfigError, SingularLocus, WrongRegime
from quatdyn.fields import FieldSpec, eval_field
from quatdyn.integrator import integrate
from quatdyn.invariants import (
    Kind,
    applicable_descriptors,
    cofactor_residual,
    critical_sets,
    eval_integral,
    get_descriptor,
    identity_e416,
    lie_derivative,
    poisson_bracket,
    poisson_matrix,
)
from quatdyn.quaternion import Quaternion

SPECS = {
    "case_a": FieldSpec.bernoulli(Quaternion(1.0), Quaternion(2.0), 3),
    "case_b": FieldSpec.bernoulli(Quaternion(0.8, -0.6, 0.3, 0.1), Quaternion(1.3), 4),
    "case_c2": FieldSpec.bernoulli(Quaternion(0, 1), Quaternion(1.0), 2),
    "case_c3": FieldSpec.bernoulli(Quaternion(0, 0.4, 0.3, 0), Quaternion(-0.7), 3),
    "e50": FieldSpec.bernoulli(Quaternion(-1.2), Quaternion(0.4, 0.9, -0.3, 0.5), 2),
    "e50_imag": FieldSpec.bernoulli(Quaternion(0.7), Quaternion(0, 0.9, 0, 0.4), 2),
    "cubic": FieldSpec.cubic(Quaternion(-0.5, 0.8, 0.2, 0), 1.1),
    "cubic_i": FieldSpec.cubic(Quaternion(0, 1.0), 1.0),
}


def _fd_grad(d, q, h=1e-5):
    q = qarr(q)
    g = np.zeros(4)
    for k in range(4):
        e = np.zeros(4)
        e[k] = h
        g[k] = (-d(q + 2 * e) + 8 * d(q + e) - 8 * d(q - e) + d(q - 2 * e)) / (12 * h)
    return g


def test_f_cyl_value():
    d = get_descriptor("F_cyl", SPECS["case_c2"])
    assert abs(eval_integral(d, Quaternion(0.3, 0.4, 0.1, 0.2)) - 0.05) < 1e-16


def test_hn_at_real_root_equals_c0():
    for n, c0 in ((2, 1.0), (3, 2.0), (4, 0.5)):
        spec = FieldSpec.bernoulli(Quaternion(0, 1), Quaternion(c0), n)
        q = Quaternion(c0 ** (1.0 / (n - 1)))
        assert abs(eval_integral(get_descriptor("Hn", spec), q) - c0) < 1e-13


def test_hn_vanishes_near_origin():
    d = get_descriptor("Hn", SPECS["case_c2"])
    u = np.array([0.3, -0.5, 0.7, 0.2])
    assert abs(d(1e-3 * u / np.linalg.norm(u))) < 1e-4


def test_singular_locus_raises():
    d = get_descriptor("H2", SPECS["case_a"])
    with pytest.raises(SingularLocus):
        d(Quaternion(0.5, 0.0, 1.0, 0.0))
    with pytest.raises(SingularLocus):
        get_descriptor("Hn", SPECS["case_c2"])(Quaternion(0.5, 0, 0, 0))


def test_unknown_and_wrong_regime():
    with pytest.raises(ConfigError):
        get_descriptor("Foo", SPECS["case_a"])
    with pytest.raises(WrongRegime):
        get_descriptor("F_e50b", SPECS["e50"])
    assert "Hn" not in applicable_descriptors(SPECS["cubic"])


@pytest.mark.parametrize("key", list(SPECS))
def test_gradients_match_finite_differences(key, rng):
    spec = SPECS[key]
    for d in applicable_descriptors(spec).values():
        checked = 0
        for q in rng.normal(size=(40, 4)):
            if not d.is_regular(q, 1e-1):
                continue
            g = d.gradient(q)
            fd = _fd_grad(d, q)
            assert np.max(np.abs(g - fd)) <= 1e-6 * max(1.0, np.max(np.abs(g))), d.name
            checked += 1
        assert checked > 5, d.name


@pytest.mark.parametrize("key", list(SPECS))
def test_lie_derivative_matches_closed_form(key, rng):
    spec = SPECS[key]
    for d in applicable_descriptors(spec).values():
        for q in rng.normal(size=(1000, 4)):
            if not d.is_regular(q, 1e-6):
                continue
            q = Quaternion(*q)
            lie = lie_derivative(d, spec, q)
            ref = d.closed_form(q)
            scale = max(1.0, np.linalg.norm(d.gradient(q)) * np.linalg.norm(qarr(eval_field(spec, q))))
            assert abs(lie - ref) <= 1e-9 * scale, d.name
            if d.kind is Kind.CONSERVED:
                assert ref == 0.0


def test_hn_conserved_for_imaginary_a(rng):
    d = get_descriptor("Hn", SPECS["case_c3"])
    for q in rng.normal(size=(100, 4)):
        if d.is_regular(q, 1e-3):
            assert abs(lie_derivative(d, SPECS["case_c3"], q)) < 1e-10 * max(1, np.linalg.norm(d.gradient(q)))


def test_hn_identity_d1_example(rng):
    spec = FieldSpec.bernoulli(Quaternion(1.0), Quaternion(1.0), 2)
    d = get_descriptor("Hn", spec)
    for q in rng.normal(size=(100, 4)):
        if not d.is_regular(q, 1e-3):
            continue
        H = d(q)
        ref = (2 - 1) * 2.0 * (1.0 - H) * H
        assert abs(lie_derivative(d, spec, q) - ref) <= 1e-9 * max(1.0, abs(ref))


def test_l_hyp_on_surface(rng):
    spec = FieldSpec.cubic(Quaternion(-0.6, 0.9), 1.0)
    L = get_descriptor("L_hyp", spec)
    for v in rng.normal(size=(200, 3)):
        q = Quaternion(np.sqrt(v @ v + 0.5), *v)
        assert abs(L(q)) < 1e-12
        ref = -2 * spec.a.q0 * (2 * q.q0 ** 2 - 0.5) ** 2
        assert abs(identity_e416(spec, q) - ref) < 1e-12 * max(1, abs(ref))
        assert abs(lie_derivative(L, spec, q) - ref) <= 1e-9 * max(1.0, abs(ref))


def test_cofactor_examples(rng):
    spec = FieldSpec.bernoulli(Quaternion(1.0), Quaternion(2.0), 3)
    for q in rng.normal(size=(1000, 4)):
        scale = max(1.0, np.linalg.norm(qarr(eval_field(spec, q))))
        for poly in ("q1", "q2", "q3"):
            assert abs(cofactor_residual(poly, spec, q)) < 1e-10 * scale
    q = Quaternion(0.4, -0.3, 0.0, 0.8)
    assert eval_field(spec, q)[2] == 0.0
    with pytest.raises(WrongRegime):
        cofactor_residual("q1", SPECS["case_c2"], q)
    with pytest.raises(ConfigError):
        cofactor_residual("q4", spec, q)


@given(quaternions)
def test_poisson_matrix_antisymmetric(q):
    try:
        M = poisson_matrix(SPECS["case_c3"], q)
    except SingularLocus:
        return
    assert np.array_equal(M.T, -M)


@pytest.mark.parametrize("n", [2, 3])
def test_hn_f_in_involution(n, rng):
    spec = FieldSpec.bernoulli(Quaternion(0, 1), Quaternion(1.0), n)
    H, F = get_descriptor("Hn", spec), get_descriptor("F_cyl", spec)
    for q in rng.normal(size=(200, 4)):
        if not H.is_regular(q, 1e-3) or np.dot(q, q) < 1e-3:
            continue
        assert poisson_bracket(H, H, q) == 0.0
        assert abs(poisson_bracket(H, F, q)) < 1e-9
    F2 = get_descriptor("F_cyl", spec)
    q = Quaternion(0.3, 0.2, 0.5, -0.1)
    assert poisson_bracket(F, F2, q) == 0.0


def test_hn_f_functionally_independent(rng):
    spec = FieldSpec.bernoulli(Quaternion(0, 1), Quaternion(1.0), 3)
    H, F = get_descriptor("Hn", spec), get_descriptor("F_cyl", spec)
    sets = critical_sets(spec)
    for q in rng.normal(size=(200, 4)):
        if not H.is_regular(q, 1e-2) or any(s.residual(q) < 1e-3 for s in sets.values()):
            continue
        J = np.array([H.gradient(q), F.gradient(q)])
        J /= np.linalg.norm(J, axis=1, keepdims=True)
        assert np.linalg.svd(J, compute_uv=False)[-1] > 1e-8


def test_critical_sets_membership():
    spec = FieldSpec.bernoulli(Quaternion(0, 1), Quaternion(-1.0), 3)
    sets = critical_sets(spec)
    assert sets["S1"](Quaternion(1.0, 0.5, 0.0, 0.0))
    assert not sets["S1"](Quaternion(1.0, 0.5, 0.1, 0.0))
    # q^2 = c0 = -1: every unit imaginary quaternion lies on S2 and is an equilibrium
    u = np.array([0.0, 0.3, -0.4, 0.5])
    u /= np.linalg.norm(u)
    assert sets["S2"](u)
    assert np.max(np.abs(qarr(eval_field(spec, u)))) < 1e-10


def test_sphere_invariant_under_flow():
    spec = FieldSpec.bernoulli(Quaternion(0.8), Quaternion(0, 1.5), 2)
    sphere = critical_sets(spec)["sphere"]
    c1 = 1.5
    v = np.array([0.4, -0.7, 0.2])
    v /= np.linalg.norm(v)
    q = np.array([0.0, c1 / 2 + c1 / 2 * v[0], c1 / 2 * v[1], c1 / 2 * v[2]])
    assert sphere(q)
    tr = integrate(spec, q, (0.0, 5.0), rtol=1e-12, atol=1e-14)
    assert max(sphere.residual(p) for p in tr.q) < 1e-9


def test_hyperboloid_sheets():
    spec = FieldSpec.cubic(Quaternion(-1.0), 1.0)
    sets = critical_sets(spec)
    q = Quaternion(np.sqrt(0.5 + 0.25), 0.5, 0, 0)
    assert sets["L_plus"](q) and not sets["L_minus"](q)
    assert sets["L_minus"](-q)
