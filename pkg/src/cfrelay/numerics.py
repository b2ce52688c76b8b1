"""Small linear-algebra helpers over complex scalars and Gaussian integers.

Everything here works on tiny matrices (at most a handful of rows and
columns), so clarity wins over vectorisation. Gaussian-integer matrices are
plain integer arrays of complex dtype (``complex128`` with integral parts) or
nested sequences of Python ``complex``/``int``; exact work is done on Python
integers.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

__all__ = [
    "DependentEquationError",
    "as_complex_matrix",
    "hermitian_form",
    "projector",
    "exact_rank",
    "real_embedding",
    "lift_slack",
    "check_quadratic_form",
]

HERMITIAN_TOL = 1e-9
PSD_TOL = 1e-9
MAX_GAUSSIAN_INT = 2 ** 20
GRAM_COND_LIMIT = 1e12


class DependentEquationError(ValueError):
    """Raised when an equation log that must be full-rank is not."""


def as_complex_matrix(a, cols: int | None = None) -> np.ndarray:
    """Return ``a`` as a 2-D ``complex128`` array.

    An empty input becomes a ``(0, cols)`` array so that callers can treat
    "no equations yet" like any other log.
    """
    arr = np.asarray(a, dtype=complex)
    if arr.size == 0:
        if cols is None:
            cols = arr.shape[-1] if arr.ndim == 2 else 0
        return np.zeros((0, cols), dtype=complex)
    if arr.ndim == 1:
        arr = arr[np.newaxis, :]
    if arr.ndim != 2:
        raise ValueError(f"expected a matrix, got shape {arr.shape}")
    return arr


def check_quadratic_form(V: np.ndarray) -> None:
    """Validate that ``V`` is Hermitian PSD up to the module tolerances."""
    V = np.asarray(V, dtype=complex)
    if V.ndim != 2 or V.shape[0] != V.shape[1] or V.shape[0] < 1:
        raise ValueError(f"quadratic form must be square, got shape {V.shape}")
    if not np.all(np.isfinite(V)):
        raise ValueError("quadratic form has non-finite entries")
    if np.max(np.abs(V - V.conj().T)) > HERMITIAN_TOL:
        raise ValueError("quadratic form is not Hermitian")
    if np.linalg.eigvalsh(0.5 * (V + V.conj().T))[0] < -PSD_TOL:
        raise ValueError("quadratic form is not positive semidefinite")


def hermitian_form(a, V) -> float:
    """Evaluate ``a* V a`` and return its real part.

    >>> hermitian_form([1, 0], np.diag([0.5, 2.0]))
    0.5
    """
    a = np.asarray(a, dtype=complex).ravel()
    V = np.asarray(V, dtype=complex)
    if V.shape != (a.size, a.size):
        raise ValueError(
            f"dimension mismatch: vector of length {a.size}, form {V.shape}")
    return float(np.real(np.vdot(a, V @ a)))


def projector(E, dim: int | None = None) -> np.ndarray:
    """Orthogonal projector ``E* (E E*)^{-1} E`` onto the row space of ``E``.

    Parameters
    ----------
    E : array_like
        Gaussian-integer matrix whose rows are linearly independent. May
        have zero rows, in which case ``dim`` fixes the output size.
    dim : int, optional
        Ambient dimension; required only when ``E`` is empty.

    Raises
    ------
    DependentEquationError
        If the rows of ``E`` are linearly dependent.
    """
    E = as_complex_matrix(E, cols=dim)
    n = E.shape[1] if dim is None else dim
    if E.shape[1] != n:
        raise ValueError(f"E has {E.shape[1]} columns, expected {n}")
    if E.shape[0] == 0:
        return np.zeros((n, n), dtype=complex)
    gram = E @ E.conj().T
    if np.linalg.cond(gram) > GRAM_COND_LIMIT:
        raise DependentEquationError("dependent equation log")
    return E.conj().T @ np.linalg.solve(gram, E)


def _to_int_pairs(A) -> list[list[tuple[int, int]]]:
    rows = []
    for row in np.atleast_2d(np.asarray(A, dtype=complex)):
        out = []
        for z in row:
            re, im = round(z.real), round(z.imag)
            if abs(re) > MAX_GAUSSIAN_INT or abs(im) > MAX_GAUSSIAN_INT:
                raise ValueError("Gaussian integer entry out of range")
            out.append((int(re), int(im)))
        rows.append(out)
    return rows


def exact_rank(A) -> int:
    """Rank of a Gaussian-integer matrix, computed without rounding.

    The complex rank equals half the rank of the real embedding
    ``[[Re, -Im], [Im, Re]]``, which is found by fraction-free (Bareiss)
    elimination on Python integers.
    """
    A = np.asarray(A, dtype=complex)
    if A.size == 0:
        return 0
    pairs = _to_int_pairs(A)
    r, c = len(pairs), len(pairs[0])
    M = [[0] * (2 * c) for _ in range(2 * r)]
    for i, row in enumerate(pairs):
        for j, (re, im) in enumerate(row):
            M[i][j] = re
            M[i][j + c] = -im
            M[i + r][j] = im
            M[i + r][j + c] = re
    return _bareiss_rank(M) // 2


def _bareiss_rank(M: list[list[int]]) -> int:
    rows, cols = len(M), len(M[0])
    rank = 0
    prev = 1
    for col in range(cols):
        pivot = next((i for i in range(rank, rows) if M[i][col] != 0), None)
        if pivot is None:
            continue
        M[rank], M[pivot] = M[pivot], M[rank]
        p = M[rank][col]
        for i in range(rank + 1, rows):
            mi = M[i][col]
            row_i, row_r = M[i], M[rank]
            for j in range(col + 1, cols):
                row_i[j] = (p * row_i[j] - mi * row_r[j]) // prev
            row_i[col] = 0
        prev = p
        rank += 1
        if rank == rows:
            break
    return rank


def real_embedding(V: np.ndarray) -> np.ndarray:
    """Real symmetric matrix ``Q`` with ``x^T Q x = a* V a``.

    Here ``x = [Re a, Im a]`` stacks real parts above imaginary parts.
    """
    V = np.asarray(V, dtype=complex)
    n = V.shape[0]
    out = np.empty((2 * n, 2 * n))
    out[:n, :n] = out[n:, n:] = V.real
    out[:n, n:] = -V.imag
    out[n:, :n] = V.imag
    return out


def lift_slack(E: Sequence) -> float:
    """Half the summed squared Gram-Schmidt norms of the rows of ``E``.

    Any coset ``a + span_Z[i](E)`` has a member whose component inside the
    row space of ``E`` has squared norm at most this value (nearest-plane
    rounding, each complex coefficient rounded within a unit square).
    """
    E = as_complex_matrix(E)
    if E.shape[0] == 0:
        return 0.0
    basis: list[np.ndarray] = []
    total = 0.0
    for row in E.conj():
        v = row.copy()
        for b in basis:
            v = v - (np.vdot(b, v) / np.vdot(b, b)) * b
        basis.append(v)
        total += float(np.vdot(v, v).real)
    return 0.5 * total
