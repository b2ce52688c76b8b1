"""Hybrid compute-amplify-and-forward.

The cooperative stages run as usual until the best deliverable rate of a
stage drops below the per-equation target. From then on the strongest
relays amplify their observations and the destination recovers the missing
equations itself, using the equations already received as side information.
"""

from __future__ import annotations

import math

import numpy as np

from ..channel import ChannelRealization, NetworkConfig
from ..lattice import InfeasibleSearch, SearchBudget, min_form_matrix, spectral_radius
from ..numerics import as_complex_matrix, hermitian_form, projector
from ._base import HcafCombiner, SchemeOutcome, log_rate, make_outcome
from .afc import afc_gains
from .icmf import IcmfTrace, icmf_trace, run_icmf, single_relay_value


def hcaf_combiner(real: ChannelRealization, cfg: NetworkConfig, D, amps, A=None) -> HcafCombiner:
    """Destination receiver for computed equations ``D`` and amplifying relays ``amps``.

    ``D`` holds the conjugated ECVs of the computed equations as rows (may
    be empty). When the ECV rows ``A`` (paper vectors) are given, ``B`` and
    ``C`` are the optimal projections for them; otherwise they are the
    linear maps ``a -> b`` and ``a -> c`` applied to the identity.
    """
    L = cfg.num_users
    amps = list(amps)
    D = as_complex_matrix(D, cols=L)
    if len(amps) != L - D.shape[0]:
        raise ValueError("need exactly L - rows(D) amplifying relays")
    P = projector(D, L)
    F = afc_gains(real, cfg, amps)
    H_af = real.h[:, amps].T
    G = F @ H_af @ (np.eye(L) - P)
    K = (np.eye(len(amps)) + F @ F.conj().T) / cfg.snr_t + G @ G.conj().T
    absorbed = G.conj().T @ np.linalg.solve(K, G)
    absorbed = 0.5 * (absorbed + absorbed.conj().T)
    U = np.eye(L) - absorbed - P
    U = 0.5 * (U + U.conj().T)
    rows = np.eye(L, dtype=complex) if A is None else np.asarray(A, dtype=complex)
    B = rows.conj() @ G.conj().T @ np.linalg.inv(K)
    if D.shape[0]:
        C = rows.conj() @ D.conj().T @ np.linalg.inv(D @ D.conj().T)
    else:
        C = np.zeros((rows.shape[0], 0), dtype=complex)
    return HcafCombiner(B, C, U, G, F, K, absorbed)


def hcaf_noise(b, c, a, comb: HcafCombiner, D, snr_t: float) -> float:
    """Effective noise ``|b|^2 + |F* b|^2 + snr_t |G* b + D* c - a|^2``."""
    b = np.asarray(b, dtype=complex).ravel()
    a = np.asarray(a, dtype=complex).ravel()
    D = as_complex_matrix(D, cols=a.size)
    resid = comb.G.conj().T @ b - a
    if D.shape[0]:
        resid = resid + D.conj().T @ np.asarray(c, dtype=complex).ravel()
    Fb = comb.F_af.conj().T @ b
    return float(np.vdot(b, b).real + np.vdot(Fb, Fb).real + snr_t * np.vdot(resid, resid).real)


def switch_stage(trace: IcmfTrace, cfg: NetworkConfig) -> int | None:
    """First stage (1-based) whose best deliverable rate misses the per-equation target."""
    L = cfg.num_users
    threshold = cfg.target_rate * (L + 1) / L
    for k, R in enumerate(trace.rates):
        if float(np.max(R)) < threshold:
            return k + 1
    return None


def run_hcaf(real: ChannelRealization, cfg: NetworkConfig, *,
             trace: IcmfTrace | None = None) -> SchemeOutcome:
    """Cooperative stages with an amplify-and-forward finish."""
    L, M = cfg.num_users, cfg.num_relays
    if trace is None:
        trace = icmf_trace(real, cfg)
    k = switch_stage(trace, cfg)
    if k is None:
        base = run_icmf(real, cfg, trace=trace)
        return make_outcome("hcaf", base.end_to_end_rate, base.per_stage_rates,
                            cfg.target_rate, detail=base.detail, switch=None, **base.info)

    state = trace.states[k - 1]
    R = trace.rates[k - 1]
    order = sorted(range(M), key=lambda m: (-R[m], m))
    amps = sorted(order[:L - k + 1])
    comb = hcaf_combiner(real, cfg, state.eq_log, amps)
    radius = spectral_radius(comb.absorbed, extra=state.slack)
    prev = state.records[-1].delivered_rate if state.records else math.inf
    computed = [rec.delivered_rate for rec in state.records]
    try:
        rows, _ = min_form_matrix(comb.U, SearchBudget(radius), list(r.ecv for r in state.records),
                                  L - k + 1)
        amp_rates = [min(log_rate(hermitian_form(e.vector, comb.U)), prev) for e in rows]
    except InfeasibleSearch:
        rows, amp_rates = [], [0.0]
    hybrid = min(computed + amp_rates)
    single, who = single_relay_value(real, cfg, trace, hybrid)
    rate = L / (L + 1) * max(hybrid, single)
    detail = (tuple(state.records), tuple(rows))
    return make_outcome("hcaf", rate, computed + amp_rates, cfg.target_rate, detail=detail,
                        switch=k, amplifiers=tuple(amps),
                        mode="single-relay" if who is not None else "hybrid", relay=who)
