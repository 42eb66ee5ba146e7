import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from quatdyn.quaternion import Quaternion

settings.register_profile("default", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

component = st.floats(min_value=-3.0, max_value=3.0, allow_nan=False, allow_infinity=False)
quaternions = st.builds(Quaternion, component, component, component, component)


def qarr(q):
    return np.array(q, dtype=float)


def rel_close(x, y, tol, floor=1.0):
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    scale = max(floor, float(np.max(np.abs(y))))
    return float(np.max(np.abs(x - y))) <= tol * scale


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
