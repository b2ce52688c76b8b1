"""Compiled Schnorr-Euchner enumeration over integer vectors.

The search runs on the real embedding: integer ``x`` of length ``2L`` and
three real symmetric matrices,

* ``W``  positive definite pruning form, passed as its upper Cholesky factor,
* ``Q``  the objective (may be singular),
* ``P``  projector onto excluded directions (zero when nothing is excluded).

A leaf is *admissible* when ``x != 0``, ``|x|^2 <= radius_sq`` and
``|x|^2 - x^T P x > indep_tol`` (not inside the excluded span). The pruning
bound on ``x^T W x`` is ``threshold(best) + beta`` where ``threshold`` is the
tie-inclusive value cut.
"""

from __future__ import annotations

import numpy as np
from numba import njit

OVERFLOW = 1


@njit(cache=True, nogil=True)
def _quad(M, x):
    n = x.shape[0]
    s = 0.0
    for i in range(n):
        xi = x[i]
        if xi == 0:
            continue
        row = 0.0
        for j in range(n):
            if x[j] != 0:
                row += M[i, j] * x[j]
        s += xi * row
    return s


@njit(cache=True, nogil=True)
def enumerate_form(R, Q, P, radius_sq, indep_tol, beta, start_best,
                   shrink, rtol, atol, hard_cap, use_half_space):
    """Enumerate admissible leaves.

    With ``shrink`` true the value cut tracks the best value seen so far
    (starting from ``start_best``); otherwise it stays at ``start_best``.
    Returns ``(points, values, status, visited)`` where ``points`` holds every
    admissible leaf whose ``Q`` value is within the final cut.

    When ``use_half_space`` is set only one of ``x`` / ``-x`` is visited.
    """
    n = R.shape[0]
    inv_diag = np.empty(n)
    diag_sq = np.empty(n)
    mu = np.zeros((n, n))
    for i in range(n):
        inv_diag[i] = 1.0 / R[i, i]
        diag_sq[i] = R[i, i] * R[i, i]
        for j in range(i + 1, n):
            mu[i, j] = R[i, j] * inv_diag[i]

    best = start_best
    cut = best * (1.0 + rtol) + atol
    bound = cut + beta

    cap_buf = 64
    buf = np.zeros((cap_buf, n), dtype=np.int64)
    vals = np.empty(cap_buf)
    count = 0

    x = np.zeros(n, dtype=np.int64)
    c = np.zeros(n)
    partial = np.zeros(n + 1)
    dx = np.zeros(n, dtype=np.int64)
    ddx = np.zeros(n, dtype=np.int64)
    zero_above = np.zeros(n + 1, dtype=np.bool_)
    zero_above[n] = True

    visited = 0
    status = 0

    # ddx == 0 marks one-sided stepping 0, 1, 2, ...; otherwise zig-zag.
    i = n - 1
    x[i] = 0
    dx[i] = 1
    ddx[i] = 0 if use_half_space else 1

    while True:
        diff = x[i] - c[i]
        val = partial[i + 1] + diag_sq[i] * diff * diff
        if val <= bound:
            if i > 0:
                partial[i] = val
                zero_above[i] = zero_above[i + 1] and x[i] == 0
                i -= 1
                s = 0.0
                for j in range(i + 1, n):
                    s += mu[i, j] * x[j]
                c[i] = -s
                if use_half_space and zero_above[i + 1]:
                    x[i] = 0
                    dx[i] = 1
                    ddx[i] = 0
                else:
                    xi = np.floor(c[i] + 0.5)
                    x[i] = np.int64(xi)
                    if c[i] >= xi:
                        dx[i] = 1
                        ddx[i] = 1
                    else:
                        dx[i] = -1
                        ddx[i] = -1
                continue
            # leaf
            visited += 1
            if visited > hard_cap:
                status = OVERFLOW
                break
            nrm = 0.0
            for j in range(n):
                nrm += x[j] * x[j]
            if nrm > 0.0 and nrm <= radius_sq:
                resid = nrm - _quad(P, x)
                if resid > indep_tol:
                    v = _quad(Q, x)
                    if v <= cut:
                        if count == buf.shape[0]:
                            # drop stale entries before growing
                            k = 0
                            for t in range(count):
                                if vals[t] <= cut:
                                    buf[k] = buf[t]
                                    vals[k] = vals[t]
                                    k += 1
                            count = k
                            if count == buf.shape[0]:
                                nb = np.zeros((2 * buf.shape[0], n), dtype=np.int64)
                                nv = np.empty(2 * buf.shape[0])
                                nb[:count] = buf[:count]
                                nv[:count] = vals[:count]
                                buf = nb
                                vals = nv
                        buf[count] = x
                        vals[count] = v
                        count += 1
                        if shrink and v < best:
                            best = v
                            cut = best * (1.0 + rtol) + atol
                            bound = cut + beta
        else:
            # out of bound at this level: climb
            i += 1
            if i == n:
                break
        # advance x[i]
        if ddx[i] == 0:
            x[i] += 1
        else:
            x[i] += dx[i]
            ddx[i] = -ddx[i]
            dx[i] = ddx[i] - dx[i]

    k = 0
    for t in range(count):
        if vals[t] <= cut:
            buf[k] = buf[t]
            vals[k] = vals[t]
            k += 1
    return buf[:k].copy(), vals[:k].copy(), status, visited
