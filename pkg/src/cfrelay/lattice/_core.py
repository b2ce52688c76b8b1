"""Compiled search drivers built on :func:`enumerate_form`.

Vectors live in the real layout ``x = [Re a_1..Re a_L, Im a_1..Im a_L]``.
Exclusion sets arrive both as complex rows (for projectors) and as int64
rows in the same real layout (for exact rank tests).

Exact rank uses fraction-free elimination on int64. Every intermediate of
that elimination is a minor of the input, so it is bounded by the product of
row norms (Hadamard); when the square of that bound could overflow, the
functions return ``UNSURE`` and the caller redoes the test on Python
integers.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from ._enum import OVERFLOW, enumerate_form

OK = 0
INFEASIBLE = 2
UNSURE = 3

MODE_DEFINITE = 0
MODE_COSET = 1
MODE_BALL = 2

TIE_RTOL = 1e-9
TIE_ATOL = 1e-12
INDEP_TOL = 1e-9
_INT64_SAFE = 2.0 ** 61


@njit(cache=True)
def embed(V):
    n = V.shape[0]
    out = np.empty((2 * n, 2 * n))
    for i in range(n):
        for j in range(n):
            re = V[i, j].real
            im = V[i, j].imag
            out[i, j] = re
            out[i + n, j + n] = re
            out[i, j + n] = -im
            out[i + n, j] = im
    return out


@njit(cache=True)
def span_projector(rows, L):
    """Projector onto span of the complex vectors stored as rows."""
    k = rows.shape[0]
    P = np.zeros((L, L), dtype=np.complex128)
    if k == 0:
        return P
    B = rows.T.copy()                      # L x k, columns are the vectors
    gram = B.conj().T @ B
    P = B @ np.linalg.solve(gram, B.conj().T)
    return 0.5 * (P + P.conj().T)


@njit(cache=True)
def lift_slack(rows):
    k, L = rows.shape
    basis = np.zeros((k, L), dtype=np.complex128)
    total = 0.0
    for r in range(k):
        v = rows[r].copy()
        for b in range(r):
            bb = 0.0
            bv = 0.0 + 0.0j
            for t in range(L):
                bb += (basis[b, t] * np.conj(basis[b, t])).real
                bv += np.conj(basis[b, t]) * v[t]
            v = v - (bv / bb) * basis[b]
        basis[r] = v
        for t in range(L):
            total += (v[t] * np.conj(v[t])).real
    return 0.5 * total


@njit(cache=True)
def _chol_upper(W, min_rel):
    n = W.shape[0]
    Lw = np.zeros((n, n))
    dmax = 1.0
    for i in range(n):
        if W[i, i] > dmax:
            dmax = W[i, i]
    for j in range(n):
        s = W[j, j]
        for k in range(j):
            s -= Lw[j, k] * Lw[j, k]
        if s <= min_rel * dmax:
            return Lw.T.copy(), False
        d = np.sqrt(s)
        Lw[j, j] = d
        for i in range(j + 1, n):
            t = W[i, j]
            for k in range(j):
                t -= Lw[i, k] * Lw[j, k]
            Lw[i, j] = t / d
    return Lw.T.copy(), True


@njit(cache=True)
def prepare(V, ex_c):
    """Return ``(Q, Pr, R, beta, mode, unit_best, unit_worst, n_free)``."""
    L = V.shape[0]
    Vh = 0.5 * (V + V.conj().T)
    Q = embed(Vh)
    k = ex_c.shape[0]
    P = span_projector(ex_c, L)
    Pr = embed(P)
    unit_best = np.inf
    unit_worst = -np.inf
    n_free = 0
    for i in range(L):
        if 1.0 - P[i, i].real > INDEP_TOL:
            n_free += 1
            v = Vh[i, i].real
            if v < unit_best:
                unit_best = v
            if v > unit_worst:
                unit_worst = v
    scale = 1.0
    for i in range(L):
        for j in range(L):
            if abs(Vh[i, j]) > scale:
                scale = abs(Vh[i, j])
    if k > 0:
        VP = Vh @ P
        mx = 0.0
        for i in range(L):
            for j in range(L):
                if abs(VP[i, j]) > mx:
                    mx = abs(VP[i, j])
        if mx <= 1e-9 * scale:
            R, ok = _chol_upper(Q + Pr, 0.0)
            if ok:
                return Q, Pr, R, lift_slack(ex_c), MODE_COSET, unit_best, unit_worst, n_free
    R, ok = _chol_upper(Q, 1e-12)
    if ok:
        return Q, Pr, R, 0.0, MODE_DEFINITE, unit_best, unit_worst, n_free
    return Q, Pr, R, 0.0, MODE_BALL, unit_best, unit_worst, n_free


@njit(cache=True)
def run_enum(Q, Pr, R, beta, mode, radius_sq, start, shrink, hard_cap):
    n = Q.shape[0]
    if mode == MODE_BALL:
        # x'(Q + delta I)x <= cut + delta*radius covers the ball; a zero
        # start would make delta vanish and the pruning useless
        lift = start if start > 0 else 1.0
        delta = lift / radius_sq
        W = Q.copy()
        for i in range(n):
            W[i, i] += delta
        R2, ok = _chol_upper(W, 0.0)
        b = lift + 1e-9 * (1.0 + lift)
        return enumerate_form(R2, Q, Pr, radius_sq, INDEP_TOL, b, start,
                              shrink, TIE_RTOL, TIE_ATOL, hard_cap, True)
    if mode == MODE_COSET:
        # Value is constant along the excluded span; weight that span so the
        # nearest-plane lift (projected part <= beta) costs at most ``start``.
        lam = start / beta if beta > 0 else 1.0
        if lam > 1.0:
            lam = 1.0
        if lam < 1e-9:
            lam = 1e-9
        R2, ok = _chol_upper(Q + lam * Pr, 0.0)
        if ok:
            b = lam * beta + 1e-9 * (1.0 + start)
            return enumerate_form(R2, Q, Pr, radius_sq, INDEP_TOL, b, start,
                                  shrink, TIE_RTOL, TIE_ATOL, hard_cap, True)
    b = beta + 1e-9 * (1.0 + start)
    return enumerate_form(R, Q, Pr, radius_sq, INDEP_TOL, b, start,
                          shrink, TIE_RTOL, TIE_ATOL, hard_cap, True)


@njit(cache=True)
def canonicalize(x):
    """Unit multiple of ``x`` whose first nonzero entry has re > 0, im >= 0."""
    L = x.shape[0] // 2
    out = x.copy()
    for t in range(L):
        re = x[t]
        im = x[t + L]
        if re == 0 and im == 0:
            continue
        if re > 0 and im >= 0:
            return out
        for s in range(L):
            a = x[s]
            b = x[s + L]
            if re <= 0 and im > 0:      # times -i
                out[s] = b
                out[s + L] = -a
            elif re < 0 and im <= 0:    # times -1
                out[s] = -a
                out[s + L] = -b
            else:                       # times i
                out[s] = -b
                out[s + L] = a
        return out
    return out


@njit(cache=True)
def key_less(x, y):
    """Order by squared norm, then lexicographically on (re, im) pairs."""
    L = x.shape[0] // 2
    nx = 0
    ny = 0
    for t in range(2 * L):
        nx += x[t] * x[t]
        ny += y[t] * y[t]
    if nx != ny:
        return nx < ny
    for t in range(L):
        if x[t] != y[t]:
            return x[t] < y[t]
        if x[t + L] != y[t + L]:
            return x[t + L] < y[t + L]
    return False


@njit(cache=True)
def bareiss_rank(M):
    """Rank of an int64 matrix, or -1 when overflow cannot be ruled out."""
    rows, cols = M.shape
    bound = 1.0
    for i in range(rows):
        s = 0.0
        for j in range(cols):
            s += float(M[i, j]) * float(M[i, j])
        if s > 1.0:
            bound *= np.sqrt(s)
    if bound * bound > _INT64_SAFE:
        return -1
    A = M.copy()
    rank = 0
    prev = np.int64(1)
    for col in range(cols):
        piv = -1
        for i in range(rank, rows):
            if A[i, col] != 0:
                piv = i
                break
        if piv < 0:
            continue
        if piv != rank:
            for j in range(cols):
                tmp = A[rank, j]
                A[rank, j] = A[piv, j]
                A[piv, j] = tmp
        p = A[rank, col]
        for i in range(rank + 1, rows):
            mi = A[i, col]
            for j in range(col + 1, cols):
                A[i, j] = (p * A[i, j] - mi * A[rank, j]) // prev
            A[i, col] = 0
        prev = p
        rank += 1
        if rank == rows:
            break
    return rank


@njit(cache=True)
def complex_rank(rows):
    """Complex rank of Gaussian-integer rows in real layout, or -1."""
    k = rows.shape[0]
    if k == 0:
        return 0
    L = rows.shape[1] // 2
    M = np.zeros((2 * k, 2 * L), dtype=np.int64)
    for i in range(k):
        for j in range(L):
            re = rows[i, j]
            im = rows[i, j + L]
            M[i, j] = re
            M[i, j + L] = -im
            M[i + k, j] = im
            M[i + k, j + L] = re
    r = bareiss_rank(M)
    if r < 0:
        return -1
    return r // 2


@njit(cache=True)
def independent(stack, x):
    """1 if ``x`` is independent of the rows of ``stack``, 0 if not, -1 unsure."""
    k = stack.shape[0]
    if k == 0:
        return 1
    M = np.empty((k + 1, stack.shape[1]), dtype=np.int64)
    M[:k] = stack
    M[k] = x
    r = complex_rank(M)
    if r < 0:
        return -1
    return 1 if r == k + 1 else 0


@njit(cache=True)
def min_vector(V, ex_c, ex_int, radius_sq, hard_cap, cutoff):
    """Winner of the constrained minimisation.

    Returns ``(x, value, status)``; ``status`` is OK, OVERFLOW, INFEASIBLE
    (nothing admissible, or nothing at or below ``cutoff``) or UNSURE.
    """
    L = V.shape[0]
    Q, Pr, R, beta, mode, unit_best, unit_worst, n_free = prepare(V, ex_c)
    dummy = np.zeros(2 * L, dtype=np.int64)
    if n_free == 0:
        return dummy, np.inf, INFEASIBLE
    start = unit_best
    if cutoff < start:
        start = cutoff
    pts, vals, status, visited = run_enum(Q, Pr, R, beta, mode, radius_sq,
                                          start, True, hard_cap)
    if status == OVERFLOW:
        return dummy, np.inf, OVERFLOW
    order = np.argsort(vals, kind="mergesort")
    done = np.zeros(vals.shape[0], dtype=np.bool_)
    remaining = vals.shape[0]
    while remaining > 0:
        vmin = np.inf
        for t in range(vals.shape[0]):
            if not done[t] and vals[t] < vmin:
                vmin = vals[t]
        cut = vmin * (1.0 + TIE_RTOL) + TIE_ATOL
        # tied set, best key first; test independence in key order
        best = np.zeros(2 * L, dtype=np.int64)
        tied = np.zeros(vals.shape[0], dtype=np.bool_)
        for t in range(vals.shape[0]):
            if not done[t] and vals[t] <= cut:
                tied[t] = True
        while True:
            have = False
            bi = -1
            for t in range(vals.shape[0]):
                if tied[t]:
                    c = canonicalize(pts[t])
                    if not have or key_less(c, best):
                        best = c
                        bi = t
                        have = True
            if not have:
                break
            ind = independent(ex_int, best)
            if ind < 0:
                return best, vals[bi], UNSURE
            if ind == 1:
                return best, _value(Q, best), OK
            # drop every tied entry equal to this canonical vector
            for t in range(vals.shape[0]):
                if tied[t]:
                    c = canonicalize(pts[t])
                    same = True
                    for s in range(2 * L):
                        if c[s] != best[s]:
                            same = False
                            break
                    if same:
                        tied[t] = False
                        done[t] = True
                        remaining -= 1
        for t in range(vals.shape[0]):
            if not done[t] and vals[t] <= cut:
                done[t] = True
                remaining -= 1
    return dummy, np.inf, INFEASIBLE


@njit(cache=True)
def _value(Q, x):
    n = x.shape[0]
    s = 0.0
    for i in range(n):
        if x[i] == 0:
            continue
        row = 0.0
        for j in range(n):
            row += Q[i, j] * x[j]
        s += x[i] * row
    return s


@njit(cache=True)
def _round12(v):
    if v == 0.0 or not np.isfinite(v):
        return v
    e = np.floor(np.log10(abs(v)))
    scale = 10.0 ** (11 - e)
    return np.round(v * scale) / scale


@njit(cache=True)
def min_matrix(V, ex_c, ex_int, need, radius_sq, hard_cap):
    """Greedy independent choice of ``need`` rows by ascending value.

    Returns ``(rows, values, status)`` with rows in admission order.
    """
    L = V.shape[0]
    Q, Pr, R, beta, mode, unit_best, unit_worst, n_free = prepare(V, ex_c)
    out = np.zeros((need, 2 * L), dtype=np.int64)
    outv = np.zeros(need)
    k0 = ex_int.shape[0]
    if n_free == 0 or k0 + need > L:
        return out, outv, INFEASIBLE
    pts, vals, status, visited = run_enum(Q, Pr, R, beta, mode, radius_sq,
                                          unit_best, True, hard_cap)
    if status == OVERFLOW:
        return out, outv, OVERFLOW
    b = unit_worst
    if vals.shape[0] > 0:
        b = np.min(vals)
        if b < TIE_ATOL:
            b = TIE_ATOL
    if b > unit_worst:
        b = unit_worst
    while True:
        pts, vals, status, visited = run_enum(Q, Pr, R, beta, mode, radius_sq,
                                              b, False, hard_cap)
        if status == OVERFLOW:
            return out, outv, OVERFLOW
        m = vals.shape[0]
        canon = np.empty((m, 2 * L), dtype=np.int64)
        cval = np.empty(m)
        keyv = np.empty(m)
        for t in range(m):
            canon[t] = canonicalize(pts[t])
            cval[t] = _value(Q, canon[t])
            keyv[t] = _round12(cval[t])
        # selection order: value key, then norm, then lexicographic
        idx = np.argsort(keyv, kind="mergesort")
        order = np.empty(m, dtype=np.int64)
        for t in range(m):
            order[t] = idx[t]
        for a in range(1, m):
            cur = order[a]
            j = a - 1
            while j >= 0:
                prv = order[j]
                if keyv[prv] < keyv[cur]:
                    break
                if keyv[prv] == keyv[cur] and not key_less(canon[cur], canon[prv]):
                    break
                order[j + 1] = prv
                j -= 1
            order[j + 1] = cur
        stack = np.empty((k0 + need, 2 * L), dtype=np.int64)
        stack[:k0] = ex_int
        got = 0
        for a in range(m):
            t = order[a]
            ind = independent(stack[:k0 + got], canon[t])
            if ind < 0:
                return out, outv, UNSURE
            if ind == 1:
                stack[k0 + got] = canon[t]
                out[got] = canon[t]
                outv[got] = cval[t]
                got += 1
                if got == need:
                    return out, outv, OK
        if b >= unit_worst:
            return out, outv, INFEASIBLE
        b = min(4.0 * b, unit_worst)


@njit(cache=True)
def collect(V, ex_c, bound, radius_sq, hard_cap):
    """All admissible canonical candidates with value <= bound (with ties)."""
    Q, Pr, R, beta, mode, unit_best, unit_worst, n_free = prepare(V, ex_c)
    pts, vals, status, visited = run_enum(Q, Pr, R, beta, mode, radius_sq,
                                          bound, False, hard_cap)
    m = vals.shape[0]
    canon = np.empty((m, pts.shape[1]), dtype=np.int64)
    cval = np.empty(m)
    for t in range(m):
        canon[t] = canonicalize(pts[t])
        cval[t] = _value(Q, canon[t])
    return canon, cval, status
