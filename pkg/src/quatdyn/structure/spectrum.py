"""Closed-form spectra of the linear quaternion equations and the affine shift."""

from __future__ import annotations

import cmath
import itertools
from dataclasses import dataclass

import numpy as np

from ..errors import WrongFamily
from ..fields import Family, FieldSpec, affine_reduce, component_matrix_linear, eval_field
from ..quaternion import Quaternion

__all__ = [
    "SpectrumResult",
    "formula_eigenvalues",
    "literal_eigenvalues",
    "linear_spectrum",
    "match_multisets",
    "esu1_energy_residual",
    "affine_check",
]


def _vec_norm(q: Quaternion) -> float:
    return float(np.linalg.norm(q.imag))


def _sqrt_real(x: float) -> complex:
    # sqrt of a real scalar; negative values give +i sqrt|x|, the formula's +- spans the pair
    return cmath.sqrt(complex(x, 0.0))


def literal_eigenvalues(spec: FieldSpec) -> list[complex]:
    """The appendix formulas evaluated as printed.

    ``(a - abar)^2 = -4 |Im a|^2`` is a real scalar, so every square root is
    of a real number.
    """
    a, b = spec.a, spec.b
    a0, b0 = a.q0, b.q0
    va, vb = np.array(a.imag), np.array(b.imag)
    if spec.family is Family.LINEAR_LL:
        ra = _sqrt_real(-4.0 * va @ va)
        rb = _sqrt_real(-4.0 * vb @ vb)
        m = a0 + b0
        return [m + (ra + rb) / 2, m + (ra - rb) / 2, m - (ra - rb) / 2, m - (ra + rb) / 2]
    if spec.family in (Family.LINEAR_LCONJ, Family.LINEAR_CONJL):
        v = va + vb if spec.family is Family.LINEAR_LCONJ else va - vb
        r1 = _sqrt_real(-4.0 * v @ v) / 2
        r2 = _sqrt_real(-4.0 * va @ va - b.norm_sq()) / 2
        return [a0 - b0 + r1, a0 - b0 - r1, a0 + r2, a0 - r2]
    raise WrongFamily(f"{spec.family.value} is not a linear family")


def formula_eigenvalues(spec: FieldSpec) -> list[complex]:
    """Closed-form eigenvalues of the 4x4 representation.

    Identical to :func:`literal_eigenvalues` except for the second pair of
    the ``q' = a q + qbar b`` and ``q' = a q + b qbar`` equations, which is
    ``a0 +- sqrt(|b|^2 - |Im a|^2)``; the printed radicand
    ``(a - abar)^2 - b bbar`` lacks a factor 4 and has the wrong sign on ``b bbar``.
    """
    vals = literal_eigenvalues(spec)
    if spec.family is Family.LINEAR_LL:
        return vals
    a, b = spec.a, spec.b
    r2 = _sqrt_real(b.norm_sq() - _vec_norm(a) ** 2)
    return vals[:2] + [a.q0 + r2, a.q0 - r2]


def match_multisets(x, y) -> float:
    """Max deviation between two 4-element multisets under the best pairing."""
    x, y = list(x), list(y)
    if len(x) != len(y):
        raise ValueError("multisets must have equal size")
    best = np.inf
    for perm in itertools.permutations(range(len(y))):
        d = max(abs(x[i] - y[j]) for i, j in enumerate(perm))
        best = min(best, d)
    return float(best)


@dataclass
class SpectrumResult:
    family: str
    formula: list
    numeric: list
    literal: list
    max_deviation: float
    literal_deviation: float
    energy_residual: float | None = None

    def to_dict(self):
        return {
            "family": self.family,
            "formula": self.formula,
            "numeric": self.numeric,
            "literal": self.literal,
            "residuals": {"max_deviation": self.max_deviation,
                          "literal_deviation": self.literal_deviation,
                          "energy_residual": self.energy_residual},
        }


def esu1_energy_residual(spec: FieldSpec, n_points: int = 100, seed: int = 0) -> float:
    """Max relative residual of ``d|q|^2/dt = (a + abar + b + bbar) |q|^2`` for ``q' = a q + q b``."""
    if spec.family is not Family.LINEAR_LL:
        raise WrongFamily("the energy identity is stated for q' = a q + q b")
    rng = np.random.default_rng(seed)
    k = 2.0 * (spec.a.q0 + spec.b.q0)
    worst = 0.0
    for q in rng.normal(size=(n_points, 4)):
        v = np.array(eval_field(spec, q))
        lhs = 2.0 * float(q @ v)
        rhs = k * float(q @ q)
        worst = max(worst, abs(lhs - rhs) / max(1.0, abs(rhs)))
    return worst


def linear_spectrum(spec: FieldSpec, energy: bool = True) -> SpectrumResult:
    """Compare the closed-form eigenvalues with a numeric 4x4 eigensolve.

    Raises
    ------
    WrongFamily
        If ``spec`` is not one of the three linear families.
    """
    if not spec.family.is_linear:
        raise WrongFamily(f"{spec.family.value} is not a linear family")
    M = component_matrix_linear(spec)
    numeric = [complex(z) for z in np.linalg.eigvals(M)]
    formula = [complex(z) for z in formula_eigenvalues(spec)]
    literal = [complex(z) for z in literal_eigenvalues(spec)]
    res = SpectrumResult(
        spec.family.value, formula, numeric, literal,
        match_multisets(formula, numeric), match_multisets(literal, numeric),
    )
    if energy and spec.family is Family.LINEAR_LL:
        res.energy_residual = esu1_energy_residual(spec)
    return res


def affine_check(spec: FieldSpec) -> dict:
    """Zero of the affine field at ``-shift`` and conjugacy to the linear field."""
    lin, shift = affine_reduce(spec)
    zero = -shift
    v = np.array(eval_field(spec, zero))
    rng = np.random.default_rng(0)
    conj = 0.0
    for q in rng.normal(size=(20, 4)):
        qq = Quaternion(*q)
        lhs = np.array(eval_field(spec, qq))
        rhs = np.array(eval_field(lin, qq + shift))
        conj = max(conj, float(np.max(np.abs(lhs - rhs))))
    return {"family": spec.family.value, "shift": shift, "zero": zero,
            "field_at_zero": float(np.max(np.abs(v))), "conjugacy_residual": conj}
