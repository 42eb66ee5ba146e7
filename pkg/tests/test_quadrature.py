import math

import numpy as np
import pytest

from quatdyn.errors import QuadratureFailure
from quatdyn.quadrature import gauss_kronrod, simpson


def test_polynomial_exact():
    v, e = gauss_kronrod(lambda x: 3 * x ** 2, 0.0, 2.0)
    assert abs(v - 8.0) < 1e-14 and e < 1e-13


def test_smooth_periodic():
    v, e = gauss_kronrod(lambda x: 1.0 / (2.0 + np.cos(x)), 0.0, 2 * math.pi)
    assert abs(v - 2 * math.pi / math.sqrt(3.0)) < 1e-13
    assert e < 1e-13


def test_simpson_agrees():
    ref = 2 * math.pi / math.sqrt(3.0)
    assert abs(simpson(lambda x: 1.0 / (2.0 + np.cos(x)), 0.0, 2 * math.pi, panels=2 ** 12) - ref) < 1e-12
    with pytest.raises(ValueError):
        simpson(np.sin, 0.0, 1.0, panels=3)


def test_failure_on_singularity():
    with pytest.raises(QuadratureFailure):
        gauss_kronrod(lambda x: 1.0 / np.abs(x - 0.3), 0.0, 1.0, limit=50)
    with pytest.raises(QuadratureFailure):
        gauss_kronrod(lambda x: np.full_like(x, np.nan), 0.0, 1.0)
