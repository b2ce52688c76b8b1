"""Searches for Gaussian-integer vectors that minimise a Hermitian form.

All searches are exact over the stated candidate set: every nonzero
Gaussian-integer vector with squared norm at most ``radius_sq`` that is
linearly independent of the excluded rows. Winners are reported in canonical
unit form and ties are broken by (value, squared norm, lexicographic order of
the ``(re, im)`` pairs). Two values count as tied when they agree to within
``TIE_RTOL`` relative plus ``TIE_ATOL`` absolute.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from ..numerics import (
    as_complex_matrix,
    exact_rank,
    hermitian_form,
    lift_slack,
    projector,
)
from . import _core
from ._enum import OVERFLOW

__all__ = [
    "Ecv",
    "SearchBudget",
    "SearchOverflow",
    "InfeasibleSearch",
    "DEFAULT_HARD_CAP",
    "canonical",
    "count_candidates",
    "enumerate_candidates",
    "min_form_vector",
    "min_form_matrix",
    "span_projector",
    "icmf_radius",
    "spectral_radius",
    "with_overflow_retry",
    "search_layout",
    "layout_of",
    "ecv_from_layout",
]

TIE_RTOL = _core.TIE_RTOL
TIE_ATOL = _core.TIE_ATOL
DEFAULT_HARD_CAP = 5_000_000
MIN_RETRY_RADIUS = 9.0
DEFAULT_RADIUS_CAP = 1e6


class SearchOverflow(RuntimeError):
    """The candidate count exceeded the budget's hard cap."""

    def __init__(self, message: str = "search space overflow"):
        super().__init__(message)


class InfeasibleSearch(RuntimeError):
    """No admissible candidate exists within the search radius."""

    def __init__(self, message: str = "infeasible search"):
        super().__init__(message)


@dataclass(frozen=True, order=True)
class Ecv:
    """Nonzero Gaussian-integer coefficient vector in canonical unit form.

    ``coeffs`` holds one ``(re, im)`` integer pair per user. The first
    nonzero entry always has positive real part and nonnegative imaginary
    part, which picks one representative out of ``{a, -a, ia, -ia}``.
    """

    coeffs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if not self.coeffs or all(p == (0, 0) for p in self.coeffs):
            raise ValueError("ECV must be nonzero")
        re, im = next(p for p in self.coeffs if p != (0, 0))
        if not (re > 0 and im >= 0):
            raise ValueError(f"ECV {self.coeffs} is not in canonical form")

    @classmethod
    def from_vector(cls, a) -> "Ecv":
        """Canonicalise any nonzero Gaussian-integer vector."""
        return cls(canonical(a))

    @property
    def length(self) -> int:
        return len(self.coeffs)

    @property
    def vector(self) -> np.ndarray:
        return np.array([complex(re, im) for re, im in self.coeffs])

    @property
    def norm_sq(self) -> int:
        return sum(re * re + im * im for re, im in self.coeffs)

    def sort_key(self) -> tuple:
        return (self.norm_sq, self.coeffs)

    def __str__(self) -> str:
        def fmt(re, im):
            if im == 0:
                return str(re)
            if re == 0:
                return f"{im}i"
            return f"{re}{'+' if im > 0 else '-'}{abs(im)}i"
        return "(" + ", ".join(fmt(*p) for p in self.coeffs) + ")"


@dataclass(frozen=True)
class SearchBudget:
    radius_sq: float
    hard_cap: int = DEFAULT_HARD_CAP

    def __post_init__(self):
        if not self.radius_sq >= 1.0:
            raise ValueError(f"radius_sq must be >= 1, got {self.radius_sq}")
        if self.hard_cap < 1:
            raise ValueError("hard_cap must be positive")


def canonical(a) -> tuple[tuple[int, int], ...]:
    """Canonical ``(re, im)`` pairs of the unit multiple of ``a``."""
    pairs = []
    for z in np.asarray(a, dtype=complex).ravel():
        re, im = int(round(z.real)), int(round(z.imag))
        pairs.append((re, im))
    lead = next((p for p in pairs if p != (0, 0)), None)
    if lead is None:
        raise ValueError("zero vector has no canonical form")
    re, im = lead
    if re > 0 and im >= 0:
        return tuple(pairs)
    if re <= 0 and im > 0:       # multiply by -i
        return tuple((b, -a_) for a_, b in pairs)
    if re < 0 and im <= 0:       # multiply by -1
        return tuple((-a_, -b) for a_, b in pairs)
    return tuple((-b, a_) for a_, b in pairs)   # multiply by i


def _gaussian_norm_counts(limit: int) -> np.ndarray:
    # counts[n] = #{z in Z[i] : |z|^2 = n}
    counts = np.zeros(limit + 1, dtype=object)
    r = int(np.floor(np.sqrt(limit)))
    for x in range(-r, r + 1):
        for y in range(-r, r + 1):
            n = x * x + y * y
            if n <= limit:
                counts[n] += 1
    return counts


def count_candidates(L: int, radius_sq: float) -> int:
    """Number of canonical nonzero vectors with squared norm <= radius_sq."""
    limit = int(np.floor(radius_sq))
    single = _gaussian_norm_counts(limit)
    total = np.zeros(limit + 1, dtype=object)
    total[0] = 1
    for _ in range(L):
        nxt = np.zeros(limit + 1, dtype=object)
        for n, cnt in enumerate(total):
            if cnt:
                for m in range(limit + 1 - n):
                    if single[m]:
                        nxt[n + m] += cnt * single[m]
        total = nxt
    return (int(sum(total)) - 1) // 4


def enumerate_candidates(L: int, radius_sq: float,
                         hard_cap: int = DEFAULT_HARD_CAP) -> Iterator[Ecv]:
    """Yield every canonical nonzero vector with ``|a|^2 <= radius_sq`` once.

    Raises
    ------
    SearchOverflow
        If more than ``hard_cap`` candidates would be produced.
    """
    if radius_sq < 1:
        raise ValueError("radius_sq must be >= 1")
    if count_candidates(L, radius_sq) > hard_cap:
        raise SearchOverflow()
    r = int(np.floor(np.sqrt(radius_sq)))
    span = range(-r, r + 1)
    for parts in itertools.product(span, repeat=2 * L):
        pairs = tuple(zip(parts[:L], parts[L:]))
        if sum(x * x + y * y for x, y in pairs) > radius_sq:
            continue
        lead = next((p for p in pairs if p != (0, 0)), None)
        if lead is None or not (lead[0] > 0 and lead[1] >= 0):
            continue
        yield Ecv(pairs)


def span_projector(rows, dim: int) -> np.ndarray:
    """Orthogonal projector onto the span of the given ECV rows."""
    E = as_complex_matrix(rows, cols=dim)
    return projector(E.conj(), dim)


def _stack(rows: Sequence, L: int) -> np.ndarray:
    if isinstance(rows, np.ndarray):
        return as_complex_matrix(rows, cols=L)
    vecs = [r.vector if isinstance(r, Ecv) else np.asarray(r, dtype=complex)
            for r in rows]
    if not vecs:
        return np.zeros((0, L), dtype=complex)
    return np.vstack(vecs)


def _int_layout(rows: np.ndarray) -> np.ndarray:
    L = rows.shape[1]
    out = np.empty((rows.shape[0], 2 * L), dtype=np.int64)
    out[:, :L] = np.rint(rows.real)
    out[:, L:] = np.rint(rows.imag)
    return out


def _ecv(x) -> Ecv:
    L = len(x) // 2
    return Ecv(tuple((int(x[t]), int(x[t + L])) for t in range(L)))


def _inputs(V, excluded):
    V = np.ascontiguousarray(V, dtype=complex)
    if V.ndim != 2 or V.shape[0] != V.shape[1]:
        raise ValueError(f"form must be square, got shape {V.shape}")
    L = V.shape[0]
    ex = _stack(excluded if excluded is not None else [], L)
    if ex.shape[1] != L:
        raise ValueError(f"excluded rows have length {ex.shape[1]}, expected {L}")
    ex = np.ascontiguousarray(ex)
    return V, ex, _int_layout(ex)


def _is_independent(vec, rows_mat: np.ndarray) -> bool:
    if rows_mat.shape[0] == 0:
        return True
    return exact_rank(np.vstack([rows_mat, vec])) == rows_mat.shape[0] + 1


def min_form_vector(V, budget: SearchBudget, excluded=None, *,
                    cutoff: float | None = None):
    """Canonical ECV minimising ``a* V a`` subject to independence.

    Parameters
    ----------
    V : (L, L) array_like
        Hermitian positive semidefinite form.
    budget : SearchBudget
        Radius of the candidate ball and candidate cap.
    excluded : sequence of Ecv or (k, L) array_like, optional
        Rows the result must be linearly independent of.
    cutoff : float, optional
        Only values ``<= cutoff`` are of interest. If nothing qualifies,
        ``None`` is returned instead of raising.

    Returns
    -------
    (Ecv, float)
        The winner and its form value.

    Raises
    ------
    InfeasibleSearch
        No admissible candidate within the radius.
    SearchOverflow
        The enumeration visited more than ``budget.hard_cap`` leaves.
    """
    V, ex_c, ex_int = _inputs(V, excluded)
    cut = np.inf if cutoff is None else float(cutoff)
    x, val, status = _core.min_vector(V, ex_c, ex_int, float(budget.radius_sq),
                                      int(budget.hard_cap), cut)
    if status == _core.OK:
        return _ecv(x), float(val)
    if status == OVERFLOW:
        raise SearchOverflow()
    if status == _core.UNSURE:
        return _min_vector_slow(V, ex_c, budget, cut)
    if cutoff is not None:
        return None
    raise InfeasibleSearch()


def _min_vector_slow(V, ex_c, budget, cut):
    # exact independence on Python integers; only reached for huge entries
    bound = min(cut, max(V[i, i].real for i in range(V.shape[0])))
    pts, vals, status = _core.collect(V, ex_c, float(bound),
                                      float(budget.radius_sq), int(budget.hard_cap))
    if status == OVERFLOW:
        raise SearchOverflow()
    ranked = sorted(((float(v), _ecv(p)) for p, v in zip(pts, vals)),
                    key=lambda t: (t[0],) + t[1].sort_key())
    while ranked:
        vmin = ranked[0][0]
        lim = vmin * (1.0 + _core.TIE_RTOL) + _core.TIE_ATOL
        tied = sorted({e for v, e in ranked if v <= lim}, key=Ecv.sort_key)
        for e in tied:
            if _is_independent(e.vector, ex_c):
                return e, hermitian_form(e.vector, V)
        ranked = [(v, e) for v, e in ranked if v > lim]
    if np.isfinite(cut):
        return None
    raise InfeasibleSearch()


def min_form_matrix(V, budget: SearchBudget, fixed_rows=None, rows_needed: int = 1):
    """Greedy bottleneck choice of ``rows_needed`` independent ECVs.

    Candidates are admitted in ascending form value (ties by norm, then
    lexicographically) whenever they keep the stack with ``fixed_rows`` at
    full rank. For independence constraints alone this greedy choice
    minimises the largest form value among the admitted rows.

    Returns
    -------
    (list of Ecv, float)
        The admitted rows in admission order and the largest of their form
        values.
    """
    if rows_needed < 1:
        raise ValueError("rows_needed must be >= 1")
    V, ex_c, ex_int = _inputs(V, fixed_rows)
    rows, vals, status = _core.min_matrix(V, ex_c, ex_int, int(rows_needed),
                                          float(budget.radius_sq), int(budget.hard_cap))
    if status == _core.OK:
        return [_ecv(r) for r in rows], float(np.max(vals))
    if status == OVERFLOW:
        raise SearchOverflow()
    if status == _core.UNSURE:
        return _min_matrix_slow(V, ex_c, budget, rows_needed)
    raise InfeasibleSearch()


def search_layout(V, ex_c, ex_int, radius_sq: float,
                  hard_cap: int = DEFAULT_HARD_CAP, cutoff: float = np.inf):
    """Array-level :func:`min_form_vector` for hot loops.

    ``ex_c`` holds excluded vectors as complex rows and ``ex_int`` the same
    rows in the real layout ``[Re..., Im...]``. Returns ``(x, value)`` with
    ``x`` the winner in real layout, or ``None`` when nothing reaches
    ``cutoff``. Overflow is retried with a halved radius like
    :func:`with_overflow_retry`.
    """
    floor = min(MIN_RETRY_RADIUS, radius_sq)
    while True:
        x, val, status = _core.min_vector(V, ex_c, ex_int, float(radius_sq),
                                          int(hard_cap), float(cutoff))
        if status == _core.OK:
            return x, float(val)
        if status == OVERFLOW:
            if radius_sq <= floor:
                raise SearchOverflow()
            radius_sq = max(floor, radius_sq / 2)
            continue
        if status == _core.UNSURE:
            res = _min_vector_slow(V, ex_c, SearchBudget(radius_sq, hard_cap), cutoff)
            if res is None:
                return None
            e, v = res
            return layout_of(e), v
        if np.isfinite(cutoff):
            return None
        raise InfeasibleSearch()


def layout_of(e: "Ecv") -> np.ndarray:
    """Real layout ``[Re a_1..Re a_L, Im a_1..Im a_L]`` of an ECV."""
    return np.array([p[0] for p in e.coeffs] + [p[1] for p in e.coeffs], dtype=np.int64)


def ecv_from_layout(x) -> "Ecv":
    """Inverse of :func:`layout_of`."""
    return _ecv(x)


def _value_key(v: float) -> float:
    return float(f"{v:.12g}")


def _min_matrix_slow(V, ex_c, budget, rows_needed):
    L = V.shape[0]
    free = [V[i, i].real for i in range(L)]
    ceiling = max(free)
    b = max(min(free), _core.TIE_ATOL)
    while True:
        pts, vals, status = _core.collect(V, ex_c, float(b), float(budget.radius_sq),
                                          int(budget.hard_cap))
        if status == OVERFLOW:
            raise SearchOverflow()
        cands = {_ecv(p): float(v) for p, v in zip(pts, vals)}
        ordered = sorted(cands.items(),
                         key=lambda kv: (_value_key(kv[1]),) + kv[0].sort_key())
        stack = ex_c
        chosen: list[tuple[Ecv, float]] = []
        for e, v in ordered:
            if _is_independent(e.vector, stack):
                stack = np.vstack([stack, e.vector])
                chosen.append((e, v))
                if len(chosen) == rows_needed:
                    return [e for e, _ in chosen], max(v for _, v in chosen)
        if b >= ceiling:
            raise InfeasibleSearch()
        b = min(4.0 * b, ceiling)


def with_overflow_retry(search, budget: SearchBudget, *args, **kwargs):
    """Call ``search(V, budget, ...)``, halving the radius on overflow.

    The radius never drops below ``MIN_RETRY_RADIUS`` (or the original
    radius, if smaller); unit vectors therefore stay reachable.
    """
    floor = min(MIN_RETRY_RADIUS, budget.radius_sq)
    while True:
        try:
            return search(*args[:1], budget, *args[1:], **kwargs)
        except SearchOverflow:
            if budget.radius_sq <= floor:
                raise
            budget = SearchBudget(max(floor, budget.radius_sq / 2), budget.hard_cap)


def icmf_radius(snr_t: float, g_eff, E=None, *, slack: float | None = None,
                proj_fro: float | None = None) -> float:
    """Search radius for the stage-wise relay search.

    The form ``V`` built from an effective channel ``g`` orthogonal to the
    equation log has smallest nonzero eigenvalue ``1/(1 + snr_t |g|^2)`` on
    the complement of the log. A candidate with a positive rate therefore
    has complement component below ``1 + snr_t |g|^2``, and some member of
    its coset differs from it by at most the nearest-plane slack of the log.

    The closed-form radius obtained from the Frobenius norm of the log
    projector is also evaluated; it only takes over if it is positive and
    smaller, which happens at most when the log is empty.

    ``slack`` and ``proj_fro`` may be passed in when the caller already
    knows the log's nearest-plane slack and projector Frobenius norm.
    """
    g = np.asarray(g_eff, dtype=complex).ravel()
    L = g.size
    if slack is None or proj_fro is None:
        rows = _stack(np.zeros((0, L)) if E is None else E, L)
        slack = lift_slack(rows)
        proj_fro = float(np.linalg.norm(span_projector(rows, L)))
    gg = float(np.vdot(g, g).real)
    safe = 1.0 + snr_t * gg + slack
    noise = 1.0 / snr_t
    denom = noise / (noise + gg) - proj_fro
    if denom > 0:
        closed = 1.0 / denom
        if closed < safe:
            return max(1.0, closed)
    return safe


def spectral_radius(absorbed, cap: float = DEFAULT_RADIUS_CAP, extra: float = 0.0) -> float:
    """Radius ``1/(1 - lambda_max(absorbed)) + extra`` or ``cap`` if undefined.

    ``absorbed`` is the PSD part subtracted from the identity in a form
    ``V = I - absorbed``; ``a* V a >= |a|^2 (1 - lambda_max)``.
    """
    lam = float(np.linalg.eigvalsh(np.asarray(absorbed, dtype=complex))[-1])
    gap = 1.0 - lam
    if gap <= 0 or not np.isfinite(gap):
        return cap
    return max(1.0, min(cap, 1.0 / gap + extra))
