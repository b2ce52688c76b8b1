"""Centralised benchmark: a coordinator picks the best L equations from all relays.

Every relay offers all of its candidate equations, each with the rate at
which it reaches the destination. Choosing ``L`` independent ones with the
largest smallest rate is a bottleneck basis problem on a linear matroid, so
greedy admission in decreasing rate order is optimal. The pool is grown by
form-value thresholds until the greedy bottleneck provably cannot change.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from ..channel import ChannelRealization, NetworkConfig
from ..lattice import DEFAULT_HARD_CAP, _core, ecv_from_layout
from ._base import EquationRecord, SchemeOutcome, layout_rank, log_rate, make_outcome, p2p_rate
from .cmf import cmf_form, cmf_radius


def candidate_pool(real: ChannelRealization, cfg: NetworkConfig, bound: float):
    """All ``(rate, value, relay, layout)`` with form value ``<= bound``.

    Each relay contributes the canonical candidates inside its safe radius.
    """
    L = cfg.num_users
    empty = np.zeros((0, L), dtype=complex)
    pool = []
    for m in range(cfg.num_relays):
        h = real.h_vec(m)
        V = np.ascontiguousarray(cmf_form(h, cfg.snr_t))
        pts, vals, status = _core.collect(V, empty, float(bound), cmf_radius(h, cfg.snr_t),
                                          DEFAULT_HARD_CAP)
        if status != 0:
            raise RuntimeError("candidate pool overflow")
        rt = p2p_rate(real.f[m], cfg.snr_r)
        seen = set()
        for x, v in zip(pts, vals):
            key = tuple(int(t) for t in x)
            if key in seen:
                continue
            seen.add(key)
            pool.append((min(log_rate(float(v)), rt), float(v), m, key))
    return pool


def _pool_order(item):
    rate, value, m, key = item
    L = len(key) // 2
    norm = sum(t * t for t in key)
    pairs = tuple((key[i], key[i + L]) for i in range(L))
    return (-rate, value, norm, pairs, m)


def greedy_basis(pool, L: int):
    """Greedy independent selection in decreasing rate; returns admitted items."""
    chosen = []
    rows = np.zeros((0, 2 * L), dtype=np.int64)
    for item in sorted(pool, key=_pool_order):
        cand = np.vstack([rows, np.array(item[3], dtype=np.int64)])
        if layout_rank(cand) == cand.shape[0]:
            rows = cand
            chosen.append(item)
            if len(chosen) == L:
                break
    return chosen


def exhaustive_basis_value(pool, L: int) -> float:
    """Max over independent L-subsets of the pool of the smallest rate."""
    best = 0.0
    for subset in itertools.combinations(pool, L):
        val = min(it[0] for it in subset)
        if val <= best:
            continue
        rows = np.array([it[3] for it in subset], dtype=np.int64)
        if layout_rank(rows) == L:
            best = val
    return best


def run_centralized(real: ChannelRealization, cfg: NetworkConfig, *,
                    exhaustive_check: bool = False) -> SchemeOutcome:
    """Optimal choice of ``L`` independent equations over all relays.

    With ``exhaustive_check`` the greedy bottleneck is compared against a
    brute-force scan over the final pool.
    """
    L = cfg.num_users
    bound = 1e-6
    while True:
        pool = candidate_pool(real, cfg, bound)
        chosen = greedy_basis(pool, L)
        floor = -math.log2(bound)
        if len(chosen) == L and chosen[-1][0] > floor:
            break
        if bound >= 1.0:
            break
        bound = min(1.0, 4.0 * bound)
    value = chosen[-1][0] if len(chosen) == L else 0.0
    if exhaustive_check:
        brute = exhaustive_basis_value(pool, L)
        if brute != value:
            raise AssertionError(f"greedy bottleneck {value} != exhaustive {brute}")
    records = tuple(EquationRecord(ecv_from_layout(key), log_rate(v), m, i + 1, rate)
                    for i, (rate, v, m, key) in enumerate(chosen))
    return make_outcome("ocmf", L / (L + 1) * value, [it[0] for it in chosen],
                        cfg.target_rate, detail=records if len(chosen) == L else "incomplete")
