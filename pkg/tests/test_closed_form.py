import math

import numpy as np
import pytest

from quatdyn.errors import DomainError
from quatdyn.fields import FieldSpec
from quatdyn.integrator import integrate
from quatdyn.quaternion import Quaternion
from quatdyn.structure.closed_form import closed_form_n2, closed_form_n2_state, n2_period

C0 = 1.0
Z0, R_, TH0 = 0.3 + 0.2j, 0.5, 0.7


def test_initial_value():
    z, th = closed_form_n2(Z0, R_, TH0, 0.0, C0)
    assert abs(z - Z0) < 1e-15 and abs(th - TH0) < 1e-15


def test_fixed_point():
    R = math.sqrt(R_ ** 2 + C0 ** 2 / 4)
    z, _ = closed_form_n2(R, R_, TH0, np.linspace(0, 10, 50), C0)
    assert np.max(np.abs(z - R)) < 1e-14


def test_period_pi_over_r():
    R = math.sqrt(R_ ** 2 + C0 ** 2 / 4)
    t = np.linspace(0, 3, 40)
    z1, th1 = closed_form_n2(Z0, R_, TH0, t, C0)
    z2, th2 = closed_form_n2(Z0, R_, TH0, t + math.pi / R, C0)
    assert np.max(np.abs(z1 - z2)) < 1e-12
    dth = th2 - th1
    assert np.max(np.abs(dth - dth[0])) < 1e-12
    assert abs(n2_period(R_, C0) - math.pi / R) < 1e-15


def test_riccati_residual():
    R2 = R_ ** 2 + C0 ** 2 / 4
    t = np.linspace(0.1, 3.0, 30)
    h = 1e-5
    zp, _ = closed_form_n2(Z0, R_, TH0, t + h, C0)
    zm, _ = closed_form_n2(Z0, R_, TH0, t - h, C0)
    z, _ = closed_form_n2(Z0, R_, TH0, t, C0)
    dz = (zp - zm) / (2 * h)
    assert np.max(np.abs(dz - (-1j * z ** 2 + 1j * R2))) < 1e-6


def test_theta_continuous():
    _, th = closed_form_n2(Z0, R_, TH0, np.linspace(0, 30, 3000), C0)
    assert np.max(np.abs(np.diff(th))) < 0.5


def test_domain_errors():
    with pytest.raises(DomainError):
        closed_form_n2(0.3j, R_, TH0, 1.0, C0)
    with pytest.raises(DomainError):
        closed_form_n2(0.3, 0.0, TH0, 1.0, 0.0)


def test_matches_numeric_flow(rng):
    spec = FieldSpec.bernoulli(Quaternion(0, 1), Quaternion(C0), 2)
    for _ in range(5):
        q0 = rng.normal(scale=0.6, size=4)
        t = np.linspace(0, 3, 31)
        tr = integrate(spec, q0, (0.0, 3.0), rtol=1e-12, atol=1e-14)
        assert np.max(np.abs(tr(t) - closed_form_n2_state(q0, t, C0))) < 1e-6
