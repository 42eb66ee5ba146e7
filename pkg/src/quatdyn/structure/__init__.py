"""Reductions, closed forms, tori, spectra and phase-portrait reports."""

from .closed_form import closed_form_n2, closed_form_n2_state, n2_period
from .reduction import (
    CaseAReduction,
    case_b_region_report,
    classify_case_a,
    complex_reduce_case_a,
    hyperplane_heteroclinic_report,
    isochronous_centers,
    level_gap_check,
)
from .sphere import sphere_and_annuli_report
from .spectrum import SpectrumResult, affine_check, linear_spectrum
from .torus import (
    Classification,
    RotationResult,
    SearchResult,
    TorusSpec,
    classify_rational,
    cubic_torus_analysis,
    periodic_torus_search,
    rotation_number,
)

__all__ = [
    "closed_form_n2", "closed_form_n2_state", "n2_period",
    "CaseAReduction", "case_b_region_report", "classify_case_a", "complex_reduce_case_a",
    "hyperplane_heteroclinic_report", "isochronous_centers", "level_gap_check",
    "sphere_and_annuli_report",
    "SpectrumResult", "affine_check", "linear_spectrum",
    "Classification", "RotationResult", "SearchResult", "TorusSpec", "classify_rational",
    "cubic_torus_analysis", "periodic_torus_search", "rotation_number",
]
