"""Conventional compute-and-forward: every relay forwards its own best equation."""

from __future__ import annotations

import itertools

import numpy as np

from ..channel import ChannelRealization, NetworkConfig
from ..lattice import ecv_from_layout, search_layout
from ._base import (EquationRecord, SchemeOutcome, layout_rank, log_rate, make_outcome,
                    p2p_rate)


def cmf_form(h_m, snr_t: float) -> np.ndarray:
    """``I - snr_t/(1 + snr_t |h|^2) h h*`` for channel vector ``h``."""
    h = np.asarray(h_m, dtype=complex).ravel()
    hh = float(np.vdot(h, h).real)
    return np.eye(h.size, dtype=complex) - (snr_t / (1.0 + snr_t * hh)) * np.outer(h, h.conj())


def cmf_radius(h_m, snr_t: float) -> float:
    h = np.asarray(h_m, dtype=complex).ravel()
    return 1.0 + snr_t * float(np.vdot(h, h).real)


def relay_best(real: ChannelRealization, cfg: NetworkConfig, m: int):
    """Unconstrained best equation of relay ``m``: ``(layout, form value)``."""
    L = cfg.num_users
    h = real.h_vec(m)
    V = cmf_form(h, cfg.snr_t)
    empty_c = np.zeros((0, L), dtype=complex)
    empty_i = np.zeros((0, 2 * L), dtype=np.int64)
    return search_layout(V, empty_c, empty_i, cmf_radius(h, cfg.snr_t))


def run_cmf(real: ChannelRealization, cfg: NetworkConfig, *, first_stage=None) -> SchemeOutcome:
    """Best full-rank L-subset of the M independently chosen relay equations.

    ``first_stage`` may carry the per-relay ``(layout, value)`` results when
    they were already computed for another scheme on the same draw.
    """
    L, M = cfg.num_users, cfg.num_relays
    best = first_stage if first_stage is not None else [relay_best(real, cfg, m) for m in range(M)]
    records = []
    for m, (x, v) in enumerate(best):
        r = log_rate(v)
        R = min(r, p2p_rate(real.f[m], cfg.snr_r))
        records.append(EquationRecord(ecv_from_layout(x), r, m, 1, R))
    rows = np.array([x for x, _ in best], dtype=np.int64)

    best_rate = 0.0
    best_subset = None
    for subset in itertools.combinations(range(M), L):
        if layout_rank(rows[list(subset)]) < L:
            continue
        val = min(records[i].delivered_rate for i in subset)
        if best_subset is None or val > best_rate:
            best_rate, best_subset = val, subset
    prefactor = L / (M + 1)
    per_relay = [rec.delivered_rate for rec in records]
    if best_subset is None:
        return make_outcome("cmf", 0.0, per_relay, cfg.target_rate, detail="rank-failure",
                            records=tuple(records))
    return make_outcome("cmf", prefactor * best_rate, per_relay, cfg.target_rate,
                        detail=tuple(records[i] for i in best_subset), records=tuple(records))
