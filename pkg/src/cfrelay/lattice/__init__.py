"""Gaussian-integer searches over Hermitian quadratic forms."""

from .search import (
    DEFAULT_HARD_CAP,
    Ecv,
    InfeasibleSearch,
    SearchBudget,
    SearchOverflow,
    canonical,
    count_candidates,
    enumerate_candidates,
    icmf_radius,
    min_form_matrix,
    min_form_vector,
    span_projector,
    spectral_radius,
    with_overflow_retry,
    search_layout,
    layout_of,
    ecv_from_layout,
)

__all__ = [
    "DEFAULT_HARD_CAP",
    "Ecv",
    "InfeasibleSearch",
    "SearchBudget",
    "SearchOverflow",
    "canonical",
    "count_candidates",
    "enumerate_candidates",
    "icmf_radius",
    "min_form_matrix",
    "min_form_vector",
    "span_projector",
    "spectral_radius",
    "with_overflow_retry",
    "search_layout",
    "layout_of",
    "ecv_from_layout",
]
