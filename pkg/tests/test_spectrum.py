import numpy as np
import pytest

from quatdyn.errors import WrongFamily
from quatdyn.fields import Family, FieldSpec
from quatdyn.quaternion import Quaternion
from quatdyn.structure.spectrum import (
    affine_check,
    esu1_energy_residual,
    formula_eigenvalues,
    linear_spectrum,
    literal_eigenvalues,
    match_multisets,
)

LINEAR = (Family.LINEAR_LL, Family.LINEAR_LCONJ, Family.LINEAR_CONJL)


def test_real_coefficients_diagonal():
    spec = FieldSpec(Family.LINEAR_LL, Quaternion(0.4), b=Quaternion(-1.1))
    assert match_multisets(formula_eigenvalues(spec), [-0.7] * 4) < 1e-15


def test_esu1_i_j():
    spec = FieldSpec(Family.LINEAR_LL, Quaternion(0, 1), b=Quaternion(0, 0, 1))
    assert match_multisets(formula_eigenvalues(spec), [2j, 0, 0, -2j]) < 1e-15
    assert linear_spectrum(spec).max_deviation < 1e-10


def test_esu2_example_corrected_and_literal():
    spec = FieldSpec(Family.LINEAR_LCONJ, Quaternion(1, 1), b=Quaternion(1.0))
    res = linear_spectrum(spec)
    assert res.max_deviation < 1e-10
    assert match_multisets(res.numeric, [1j, -1j, 1, 1]) < 1e-7
    # the printed radicand gives 1 +- (sqrt 5 / 2) i, which the matrix does not have
    lit = literal_eigenvalues(spec)
    assert match_multisets(lit, [1j, -1j, 1 + 1.118033988749895j, 1 - 1.118033988749895j]) < 1e-12
    assert res.literal_deviation > 1.0


@pytest.mark.parametrize("fam", LINEAR)
def test_formula_matches_numeric_random(fam, rng):
    worst = 0.0
    for _ in range(1000):
        a, b = rng.normal(size=4), rng.normal(size=4)
        worst = max(worst, linear_spectrum(FieldSpec(fam, Quaternion(*a), b=Quaternion(*b)),
                                           energy=False).max_deviation)
    assert worst < 1e-10


def test_esu1_energy_identity():
    spec = FieldSpec(Family.LINEAR_LL, Quaternion(0.3, 1, -2, 0.5), b=Quaternion(-0.8, 0.2, 0, 1))
    assert esu1_energy_residual(spec, 1000) < 1e-10
    with pytest.raises(WrongFamily):
        esu1_energy_residual(FieldSpec(Family.LINEAR_LCONJ, Quaternion(1.0), b=Quaternion(1.0)))


def test_wrong_family():
    with pytest.raises(WrongFamily):
        linear_spectrum(FieldSpec.cubic(Quaternion(0, 1), 1.0))


@pytest.mark.parametrize("fam", (Family.AFFINE_L, Family.AFFINE_R))
def test_affine_check(fam, rng):
    for _ in range(50):
        a, b = rng.normal(size=4), rng.normal(size=4)
        rep = affine_check(FieldSpec(fam, Quaternion(*a), b=Quaternion(*b)))
        assert rep["field_at_zero"] < 1e-13 * max(1.0, np.linalg.norm(b))
        assert rep["conjugacy_residual"] < 1e-12
