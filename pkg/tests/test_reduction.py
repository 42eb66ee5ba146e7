import math

import numpy as np
import pytest

from quatdyn.errors import WrongFamily, WrongRegime
from quatdyn.fields import FieldSpec
from quatdyn.integrator import dopri5, integrate
from quatdyn.invariants import get_descriptor
from quatdyn.quaternion import Quaternion
from quatdyn.structure.reduction import (
    case_b_region_report,
    classify_case_a,
    complex_reduce_case_a,
    hyperplane_heteroclinic_report,
    isochronous_centers,
    level_gap_check,
    power_roots,
)
from quatdyn.structure.sphere import sphere_and_annuli_report, sphere_points

CASE_A = FieldSpec.bernoulli(Quaternion(1.0), Quaternion(1.0), 3)


def test_power_roots():
    assert np.allclose(power_roots(1.0, 2), [1.0, -1.0])
    assert np.allclose(power_roots(-1.0, 1), [-1.0])
    roots = power_roots(8.0, 3)
    assert np.allclose(np.abs(roots), 2.0)
    assert np.allclose(np.array(roots) ** 3, 8.0)


def test_reduction_identity_embedding():
    red = complex_reduce_case_a(CASE_A, 0.0, 0.0)
    assert red.scale == 1.0
    assert np.array_equal(red.embed(0.3 + 0.7j), [0.3, 0.7, 0.0, 0.0])
    assert red.project([0.3, 0.7, 0.0, 0.0]) == 0.3 + 0.7j


def test_reduction_equilibria():
    red = complex_reduce_case_a(FieldSpec.bernoulli(Quaternion(1.0), Quaternion(1.0), 4))
    eq = red.equilibria()
    assert eq[0] == 0
    assert np.allclose(np.abs(eq[1:]), 1.0)
    assert max(abs(red.field(z)) for z in eq) < 1e-14


def test_reduction_dual_integration():
    red = complex_reduce_case_a(CASE_A, 0.7, -0.4)
    z0 = 0.3 + 0.25j
    q = integrate(CASE_A, red.embed(z0), (0.0, 5.0), rtol=1e-12, atol=1e-14)
    w = dopri5(red.rhs, (0.0, 5.0), [z0.real, z0.imag], rtol=1e-12, atol=1e-14)
    assert abs(red.project(q.final) - complex(*w.final)) < 1e-8


def test_reduction_wrong_regime():
    with pytest.raises(WrongRegime):
        complex_reduce_case_a(FieldSpec.bernoulli(Quaternion(0, 1), Quaternion(1.0), 3))
    with pytest.raises(WrongFamily):
        complex_reduce_case_a(FieldSpec.cubic(Quaternion(1.0), 1.0))


def test_case_a_planes_conserved(rng):
    # limits at +-i keep q1 away from 0, so H2 and H3 stay regular along the orbit
    spec = FieldSpec.bernoulli(Quaternion(-1.0), Quaternion(-1.0), 3)
    h2, h3 = get_descriptor("H2", spec), get_descriptor("H3", spec)
    for q0 in rng.normal(scale=0.5, size=(5, 4)):
        tr = integrate(spec, q0, (0.0, 20.0))
        v2 = np.array([h2(q) for q in tr.q])
        v3 = np.array([h3(q) for q in tr.q])
        assert np.max(np.abs(v2 - v2[0])) < 1e-8 * max(1, abs(v2[0]))
        assert np.max(np.abs(v3 - v3[0])) < 1e-8 * max(1, abs(v3[0]))


def test_classify_case_a_n3():
    rep = classify_case_a(CASE_A)
    c = rep["counts"]
    assert c["generic_origin_to_zk"] == c["generic_total"]
    assert c["origin_infinity_escapes"] == 2
    assert c["exceptional_escapes"] == c["expected_exceptional"] == 4
    assert np.allclose(sorted(abs(complex(z)) for z in rep["equilibria"]), [0, 1, 1])


def test_classify_case_a_n2_signs():
    rep = classify_case_a(FieldSpec.bernoulli(Quaternion(1.0), Quaternion(1.0), 2), n_generic=3)
    assert rep["counts"]["generic_origin_to_zk"] == 3
    rep = classify_case_a(FieldSpec.bernoulli(Quaternion(1.0), Quaternion(-1.0), 2), n_generic=3)
    assert np.allclose(sorted(complex(z).real for z in rep["equilibria"]), [-1.0, 0.0])


@pytest.mark.parametrize("n,c0,origin,outer", [
    (3, 2.0, math.pi, math.pi / 2),
    (2, 1.0, 2 * math.pi, 2 * math.pi),
])
def test_isochronous_periods(n, c0, origin, outer):
    rep = isochronous_centers(FieldSpec.bernoulli(Quaternion(0, 1), Quaternion(c0), n))
    assert math.isclose(rep["periods"]["origin"], origin)
    assert math.isclose(rep["periods"]["outer"], outer)
    assert rep["max_rel_error"] < 1e-3
    assert rep["opposite_orientation"]


def test_isochronous_small_radius_return():
    rep = isochronous_centers(FieldSpec.bernoulli(Quaternion(0, 1), Quaternion(1.0), 2), (0.01,))
    origin = [r for r in rep["centers"] if r["name"] == "origin"][0]
    assert abs(origin["measured_period"] - 2 * math.pi) < 1e-3 * 2 * math.pi


def test_isochronous_wrong_regime():
    with pytest.raises(WrongRegime):
        isochronous_centers(CASE_A)


@pytest.mark.parametrize("n,c0", [(2, 1.0), (3, 1.0), (3, 2.0), (4, 0.5)])
def test_level_gap_empty(n, c0):
    assert level_gap_check(c0, n, 100_000, seed=1)["in_gap"] == 0


def test_level_gap_vectorized_matches_descriptor(rng):
    spec = FieldSpec.bernoulli(Quaternion(0, 1), Quaternion(2.0), 3)
    d = get_descriptor("Hn", spec)
    for q in rng.normal(size=(500, 4)):
        if d.is_regular(q, 1e-6):
            assert not 0.0 < d(q) < 2.0


def test_case_b_report():
    spec = FieldSpec.bernoulli(Quaternion(1.0, 1.0), Quaternion(1.0), 3)
    rep = case_b_region_report(spec, n_samples=4, n_gap=10_000)
    c = rep["counts"]
    assert c["d3_sign_matches"] == c["total"] == 4
    assert c["origin_root_heteroclinic"] == 4
    with pytest.raises(WrongRegime):
        case_b_region_report(FieldSpec.bernoulli(Quaternion(1.0), Quaternion(0.5, 1.0), 2))


@pytest.mark.parametrize("spec", [
    FieldSpec.bernoulli(Quaternion(1.0), Quaternion(0.5, 0.8), 2),
    FieldSpec.bernoulli(Quaternion(-1.0), Quaternion(-0.7, 0.4, 0.3, 0.0), 2),
    FieldSpec.cubic(Quaternion(-1.0), 1.0),
    FieldSpec.cubic(Quaternion(0.5, 0.8), 1.3),
])
def test_hyperplane_heteroclinics(spec):
    rep = hyperplane_heteroclinic_report(spec, n_starts=6, seed=2)
    assert rep["counts"]["matching"] == rep["counts"]["total"] == 6
    assert rep["residuals"]["max_terminal_distance"] < 1e-4


def test_sphere_points_on_sphere(rng):
    pts = sphere_points(1.7, 50, rng)
    res = pts[:, 1] ** 2 + pts[:, 2] ** 2 + pts[:, 3] ** 2 - 1.7 * pts[:, 1]
    assert np.max(np.abs(res)) < 1e-14 and np.all(pts[:, 0] == 0)


def test_sphere_and_annuli():
    spec = FieldSpec.bernoulli(Quaternion(0.8), Quaternion(0, 0.6, 0.8, 0), 2)
    rep = sphere_and_annuli_report(spec, n_orbits=4)
    r = rep["residuals"]
    assert r["plane_tangency"] < 1e-12
    assert r["sphere_tangency"] < 1e-12
    assert r["sphere_drift"] < 1e-8
    assert r["sphere_closure"] < 1e-6
    assert r["sphere_q23_conservation"] < 1e-8
    assert r["annulus_period_rel_error"] < 1e-3
    assert math.isclose(rep["period"], 2 * math.pi / 0.8)
    with pytest.raises(WrongRegime):
        sphere_and_annuli_report(FieldSpec.bernoulli(Quaternion(0.8), Quaternion(0.3, 1.0), 2))
