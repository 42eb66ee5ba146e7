import math

import numpy as np
import pytest

from quatdyn.errors import ConfigError, NonFiniteRHS, StepSizeUnderflow
from quatdyn.fields import Family, FieldSpec
from quatdyn.integrator import (
    EventSpec,
    ProbeStatus,
    Status,
    dopri5,
    integrate,
    limit_set_probe,
)
from quatdyn.invariants import get_descriptor
from quatdyn.quaternion import Quaternion


def test_linear_real_coefficients_exponential():
    spec = FieldSpec(Family.LINEAR_LL, Quaternion(0.3), b=Quaternion(0.4))
    q0 = np.array([0.2, -0.5, 1.0, 0.3])
    tr = integrate(spec, q0, (0.0, 1.0))
    assert tr.status is Status.COMPLETED
    expected = np.linalg.norm(q0) * math.exp(0.7)
    assert abs(np.linalg.norm(tr.final) - expected) < 1e-8 * expected


def test_isochronous_return_n2():
    spec = FieldSpec.bernoulli(Quaternion(0, 1), Quaternion(1.0), 2)
    q0 = np.array([0.05, 0.0, 0.0, 0.0])
    tr = integrate(spec, q0, (0.0, 2 * math.pi), rtol=1e-12, atol=1e-14)
    assert np.linalg.norm(tr.final - q0) < 1e-6


def test_event_on_hyperboloid():
    spec = FieldSpec.cubic(Quaternion(-1.0), 1.0)
    L = get_descriptor("L_hyp", spec)
    ev = EventSpec("L=0", lambda y: L(y), direction=0)
    tr = integrate(spec, [0.70, 0.1, 0.05, 0.0], (0.0, 10.0), events=[ev])
    hits = [e for e in tr.events if e.name == "L=0"]
    assert hits
    for e in hits:
        assert abs(L(e.q)) < 1e-10
        assert np.allclose(tr(e.t), e.q, atol=1e-12)


def test_event_idempotence():
    spec = FieldSpec.bernoulli(Quaternion(0, 1), Quaternion(1.0), 3)
    q0 = [0.3, 0.1, 0.2, 0.1]
    ev = EventSpec("q1", lambda y: y[1], direction=1)
    first = integrate(spec, q0, (0.0, 20.0), events=[ev]).events
    assert first
    shifted = [EventSpec("q1", lambda y, r=e.g: y[1] - r, direction=1) for e in first[:1]]
    again = integrate(spec, q0, (0.0, 20.0), events=shifted).events
    assert abs(again[0].t - first[0].t) < 1e-9


def test_terminal_event_stops():
    spec = FieldSpec.bernoulli(Quaternion(0, 1), Quaternion(1.0), 3)
    ev = EventSpec("q1", lambda y: y[1], direction=1, terminal=True)
    tr = integrate(spec, [0.3, 0.1, 0.2, 0.1], (0.0, 50.0), events=[ev])
    assert tr.status is Status.EVENT
    assert tr.t_final == tr.events[-1].t
    assert tr.t_final < 50.0


def test_event_at_start_not_reported():
    spec = FieldSpec.bernoulli(Quaternion(0, 1), Quaternion(1.0), 3)
    ev = EventSpec("q1", lambda y: y[1], direction=0, terminal=True)
    tr = integrate(spec, [0.3, 0.0, 0.2, 0.1], (0.0, 0.5), events=[ev])
    assert all(e.t > 0 for e in tr.events)


def test_dense_output_and_monotone_times():
    spec = FieldSpec.bernoulli(Quaternion(0.2, 1), Quaternion(1.0), 3)
    for span in ((0.0, 5.0), (0.0, -5.0)):
        tr = integrate(spec, [0.3, 0.1, 0.2, 0.1], span)
        d = np.diff(tr.t)
        assert np.all(d > 0) if span[1] > 0 else np.all(d < 0)
        assert np.max(np.abs(tr(tr.t) - tr.q)) < 1e-12
    with pytest.raises(ValueError):
        tr(1.0)


def test_time_reversal():
    spec = FieldSpec.bernoulli(Quaternion(0, 1), Quaternion(1.0), 3)
    q0 = np.array([0.3, 0.1, 0.2, 0.1])
    fwd = integrate(spec, q0, (0.0, 10.0))
    back = integrate(spec, fwd.final, (10.0, 0.0))
    assert np.linalg.norm(back.final - q0) < 1e-7


def test_fixed_step_order():
    spec = FieldSpec(Family.LINEAR_LL, Quaternion(0.1, 1.0, 0.5), b=Quaternion(-0.2, 0, 0.7, 0.3))
    q0 = np.array([1.0, 0.2, -0.4, 0.3])
    ref = integrate(spec, q0, (0.0, 2.0), rtol=1e-13, atol=1e-15).final
    errs = []
    hs = [0.2, 0.1, 0.05, 0.025]
    for h in hs:
        errs.append(np.linalg.norm(integrate(spec, q0, (0.0, 2.0), h_fixed=h).final - ref))
    orders = [math.log2(e0 / e1) for e0, e1 in zip(errs, errs[1:])]
    assert min(orders) >= 4.7


def test_escape_flag_and_record():
    spec = FieldSpec.bernoulli(Quaternion(1.0), Quaternion(1.0), 3)
    tr = integrate(spec, [0.0, 0.5, 0.0, 0.0], (0.0, 10.0))
    assert tr.status is Status.ESCAPE
    assert tr.events[-1].name == "ESCAPE"
    # cubic blow-up collapses the step size before |q| reaches 1e8
    assert np.linalg.norm(tr.final) > 1e3
    assert tr.t_final < 1.0


def test_non_finite_rhs():
    with pytest.raises(NonFiniteRHS):
        dopri5(lambda t, y: np.full_like(y, np.nan), (0.0, 1.0), np.ones(4))


def test_step_size_underflow_reports_state():
    with pytest.raises(StepSizeUnderflow) as info:
        dopri5(lambda t, y: y * y, (0.0, 2.0), np.array([1.0]), escape_radius=None)
    assert info.value.state is not None
    assert info.value.t < 1.0 + 1e-6


def test_config_errors():
    spec = FieldSpec.bernoulli(Quaternion(0, 1), Quaternion(1.0), 3)
    with pytest.raises(ConfigError):
        integrate(spec, [0.1, 0, 0, 0], (1.0, 1.0))
    with pytest.raises(ConfigError):
        integrate(spec, [0.1, 0, 0, 0], (0.0, 1.0), rtol=0.0)
    with pytest.raises(ConfigError):
        EventSpec("x", lambda y: y[0], direction=2)


def test_csv_layout():
    spec = FieldSpec.bernoulli(Quaternion(0, 1), Quaternion(1.0), 3)
    tr = integrate(spec, [0.3, 0.1, 0.2, 0.1], (0.0, 1.0))
    text = tr.to_csv(integrals=[get_descriptor("Hn", spec), get_descriptor("F_cyl", spec)])
    lines = text.strip().splitlines()
    assert lines[0] == "t,q0,q1,q2,q3,Hn,F_cyl"
    assert len(lines) == len(tr) + 1
    row = lines[1].split(",")
    assert len(row) == 7 and float(row[2]) == 0.1
    assert tr.events_to_csv().strip() == "t,event_name,q0,q1,q2,q3"


def test_probe_at_equilibrium():
    spec = FieldSpec.cubic(Quaternion(-1.0), 1.0)
    r = limit_set_probe(spec, [1.0, 0, 0, 0], "forward", [[1.0, 0, 0, 0]], 10.0)
    assert r.status is ProbeStatus.CONVERGED and r.residual == 0.0


def test_probe_hyperboloid_heteroclinic():
    spec = FieldSpec.cubic(Quaternion(-1.0), 1.0)
    targets = [[0.0, 0, 0, 0], [1.0, 0, 0, 0], [-1.0, 0, 0, 0]]
    v = np.array([0.3, -0.2, 0.1])
    q0 = np.concatenate(([math.sqrt(v @ v + 0.5)], v))
    fwd = limit_set_probe(spec, q0, "forward", targets, 100.0)
    back = limit_set_probe(spec, q0, "backward", targets, 100.0)
    assert fwd.status is ProbeStatus.CONVERGED and fwd.target_index == 1
    assert back.status is ProbeStatus.CONVERGED and back.target_index == 0
    assert fwd.residual < 1e-4 and back.residual < 1e-4


def test_probe_case_a_generic():
    spec = FieldSpec.bernoulli(Quaternion(1.0), Quaternion(1.0), 3)
    targets = [[0.0, 0, 0, 0], [1.0, 0, 0, 0], [-1.0, 0, 0, 0]]
    q0 = [0.4, 0.3, 0.0, 0.0]
    fwd = limit_set_probe(spec, q0, "forward", targets, 60.0)
    back = limit_set_probe(spec, q0, "backward", targets, 60.0)
    assert fwd.status is ProbeStatus.CONVERGED and fwd.target_index == 1
    assert back.status is ProbeStatus.CONVERGED and back.target_index == 0


def test_probe_rejects_non_equilibrium_targets():
    spec = FieldSpec.cubic(Quaternion(-1.0), 1.0)
    with pytest.raises(ConfigError):
        limit_set_probe(spec, [0.5, 0, 0, 0], "forward", [[0.5, 0, 0, 0]], 1.0)
    with pytest.raises(ConfigError):
        limit_set_probe(spec, [0.5, 0, 0, 0], "sideways", [[0.0, 0, 0, 0]], 1.0)
