import numpy as np
import pytest
from hypothesis import given

from conftest import qarr, quaternions, rel_close
from quatdyn.errors import ConfigError, DomainError, WrongFamily
from quatdyn.fields import (
    Family,
    FieldSpec,
    affine_reduce,
    component_field,
    component_matrix_linear,
    eval_field,
)
from quatdyn.quaternion import Quaternion, inverse, qpow


def vec(v):
    return np.array(v, dtype=float)


def test_bernoulli_vanishes_on_roots():
    c0 = 2.0
    for n in (2, 3, 4):
        spec = FieldSpec.bernoulli(Quaternion(0.3, 1.2, -0.5, 0.2), Quaternion(c0), n)
        root = c0 ** (1.0 / (n - 1))
        for k in range(n - 1):
            ang = 2 * np.pi * k / (n - 1)
            # roots of q^(n-1) = c0 in the i-plane
            q = Quaternion(root * np.cos(ang), root * np.sin(ang), 0, 0)
            assert np.max(np.abs(vec(eval_field(spec, q)))) < 1e-12


def test_cubic_vanishes_at_finite_singularities():
    spec = FieldSpec.cubic(Quaternion(-0.7, 0.4, 0, 0), 1.5)
    for q0 in (0.0, 1.5, -1.5):
        assert np.max(np.abs(vec(eval_field(spec, Quaternion(q0))))) < 1e-14


def test_dual_path_n2_example():
    spec = FieldSpec.bernoulli(Quaternion(0, 1), Quaternion(1.0), 2)
    q = Quaternion(0.3, 0.4, 0.1, 0.2)
    assert np.max(np.abs(vec(eval_field(spec, q)) - vec(component_field(spec, q, "en3.2")))) < 1e-13


@pytest.mark.parametrize("spec,system", [
    (FieldSpec.bernoulli(Quaternion(0.7, -1.3), Quaternion(1.5), 4), "d4"),
    (FieldSpec.bernoulli(Quaternion(0, 1), Quaternion(-0.8), 2), "en3.2"),
    (FieldSpec.bernoulli(Quaternion(0, 1), Quaternion(1.2), 3), "d6"),
    (FieldSpec.bernoulli(Quaternion(-0.9), Quaternion(0.5, 1.3), 2), "e50"),
    (FieldSpec.cubic(Quaternion(-0.6, 1.1), 1.3), "e4.15"),
])
def test_dual_path_equivalence(spec, system, rng):
    for q in rng.normal(size=(1000, 4)):
        assert rel_close(vec(component_field(spec, q, system)), vec(eval_field(spec, q)), 1e-12)


def test_spec_validation():
    with pytest.raises(ConfigError):
        FieldSpec.cubic(Quaternion(0, 1), -1.0)
    with pytest.raises(ConfigError):
        FieldSpec(Family.BERNOULLI, Quaternion(0, 1), n=3)
    with pytest.raises(ConfigError):
        FieldSpec(Family.BERNOULLI, Quaternion(), c=Quaternion(1.0), n=3)
    with pytest.raises(ConfigError):
        FieldSpec.from_json('{"family": "nope", "a": [0, 1, 0, 0]}')


def test_json_round_trip():
    spec = FieldSpec.from_dict({"family": "e5", "a": [0, 1, 0, 0], "c": [1, 0, 0, 0], "n": 3})
    assert spec.family is Family.BERNOULLI
    again = FieldSpec.from_dict(spec.to_dict())
    assert again.to_dict() == spec.to_dict()


def test_regime_flags():
    spec = FieldSpec.bernoulli(Quaternion(0, 2), Quaternion(1.0), 3)
    assert spec.regime["a_plus_conj_zero"] and not spec.regime["a_minus_conj_zero"]
    assert spec.regime["c_minus_conj_zero"] and not spec.regime["c_plus_conj_zero"]


def test_normalized_frame_is_conjugation():
    spec = FieldSpec.bernoulli(Quaternion(0.5, 0.2, -0.7, 0.4), Quaternion(1.3), 3)
    norm, g = spec.normalized(), spec.frame
    assert norm.a.q2 == 0.0 and norm.a.q3 == 0.0
    q = Quaternion(0.2, -0.4, 0.9, 0.1)
    # g maps solutions of the raw equation to solutions of the normalized one
    lhs = g * eval_field(spec, q) * inverse(g)
    rhs = eval_field(norm, g * q * inverse(g))
    assert np.allclose(vec(lhs), vec(rhs), atol=1e-13)


def test_linear_matrix_real_coefficients():
    spec = FieldSpec(Family.LINEAR_LL, Quaternion(0.7), b=Quaternion(-0.2))
    assert np.allclose(component_matrix_linear(spec), 0.5 * np.eye(4), atol=0)


def test_linear_matrix_trace():
    spec = FieldSpec(Family.LINEAR_LL, Quaternion(0, 1), b=Quaternion(0, 0, 1))
    assert abs(np.trace(component_matrix_linear(spec))) < 1e-15


@given(quaternions, quaternions, quaternions)
def test_linear_matrix_construction(a, b, q):
    if a.norm_sq() < 1e-6:
        return
    for fam in (Family.LINEAR_LL, Family.LINEAR_LCONJ, Family.LINEAR_CONJL):
        spec = FieldSpec(fam, a, b=b)
        M = component_matrix_linear(spec)
        assert np.allclose(M @ qarr(q), vec(eval_field(spec, q)), rtol=1e-12, atol=1e-12)


@given(quaternions, quaternions, quaternions, quaternions)
def test_linear_fields_are_linear(a, b, p, q):
    if a.norm_sq() < 1e-6:
        return
    spec = FieldSpec(Family.LINEAR_LCONJ, a, b=b)
    lhs = vec(eval_field(spec, 2.5 * p + q))
    rhs = 2.5 * vec(eval_field(spec, p)) + vec(eval_field(spec, q))
    assert np.allclose(lhs, rhs, rtol=1e-12, atol=1e-11)


def test_matrix_needs_linear_family():
    with pytest.raises(WrongFamily):
        component_matrix_linear(FieldSpec.cubic(Quaternion(0, 1), 1.0))


def test_affine_reduce_zero_b():
    spec = FieldSpec(Family.AFFINE_L, Quaternion(0.5, 1), b=Quaternion())
    lin, shift = affine_reduce(spec)
    assert shift == Quaternion()
    assert lin.family is Family.LINEAR_LL


def test_affine_reduce_i_j():
    spec = FieldSpec(Family.AFFINE_L, Quaternion(0, 1), b=Quaternion(0, 0, 1))
    _, shift = affine_reduce(spec)
    assert np.allclose(qarr(shift), [0, 0, 0, -1])
    assert np.max(np.abs(vec(eval_field(spec, -shift)))) < 1e-15


@given(quaternions, quaternions)
def test_affine_zero_at_translated_origin(a, b):
    if a.norm_sq() < 1e-3:
        return
    for fam in (Family.AFFINE_L, Family.AFFINE_R):
        spec = FieldSpec(fam, a, b=b)
        lin, shift = affine_reduce(spec)
        assert np.max(np.abs(vec(eval_field(spec, -shift)))) < 1e-13 * max(1.0, abs(b))


def test_affine_needs_nonzero_a():
    with pytest.raises((DomainError, ConfigError)):
        affine_reduce(FieldSpec(Family.AFFINE_L, Quaternion(), b=Quaternion(1.0)))


def test_roots_on_circle_radius():
    c0, n = 3.0, 4
    spec = FieldSpec.bernoulli(Quaternion(1.0), Quaternion(c0), n)
    r = c0 ** (1.0 / (n - 1))
    q = Quaternion(r * np.cos(2 * np.pi / 3), r * np.sin(2 * np.pi / 3))
    assert np.allclose(qarr(qpow(q, n - 1)), [c0, 0, 0, 0], atol=1e-12)
    assert np.max(np.abs(vec(eval_field(spec, q)))) < 1e-12
