"""Amplify-forward-and-compute: relays amplify, the destination solves for equations."""

from __future__ import annotations

import numpy as np

from ..channel import ChannelRealization, NetworkConfig
from ..lattice import InfeasibleSearch, SearchBudget, min_form_matrix, spectral_radius
from ..numerics import hermitian_form
from ._base import InvariantViolation, SchemeOutcome, log_rate, make_outcome


def afc_gains(real: ChannelRealization, cfg: NetworkConfig, relays=None) -> np.ndarray:
    """Diagonal ``diag(f) diag(gamma)`` with power-normalising relay gains.

    ``relays`` restricts (and orders) the relays; all relays by default.
    """
    idx = range(cfg.num_relays) if relays is None else list(relays)
    h = real.h
    gam = [np.sqrt(cfg.snr_r / (cfg.snr_t * float(np.vdot(h[:, m], h[:, m]).real) + 1.0))
           for m in idx]
    return np.diag([real.f[m] * g for m, g in zip(idx, gam)]).astype(complex)


def afc_form(real: ChannelRealization, cfg: NetworkConfig, relays=None):
    """Quadratic form of the destination's integer-forcing receiver.

    Returns ``(V, absorbed, K, FH)`` with ``V = I - absorbed``,
    ``absorbed = (FH)* K^{-1} FH`` and ``K = (I + F F*)/snr_t + FH (FH)*``.
    """
    idx = range(cfg.num_relays) if relays is None else list(relays)
    F = afc_gains(real, cfg, idx)
    H_eff = real.h[:, list(idx)].T            # row m is h_m*
    FH = F @ H_eff
    K = (np.eye(F.shape[0]) + F @ F.conj().T) / cfg.snr_t + FH @ FH.conj().T
    absorbed = FH.conj().T @ np.linalg.solve(K, FH)
    absorbed = 0.5 * (absorbed + absorbed.conj().T)
    V = np.eye(cfg.num_users, dtype=complex) - absorbed
    return V, absorbed, K, FH


def afc_projection(A, FH, K) -> np.ndarray:
    """Optimal projection ``B = A (FH)* K^{-1}`` for ECV rows ``A`` (paper vectors)."""
    A = np.asarray(A, dtype=complex)
    # rows of the ECV matrix are a_l*, hence the conjugate
    return A.conj() @ FH.conj().T @ np.linalg.inv(K)


def afc_noise(b, a, FH, F, snr_t: float) -> float:
    """Normalised effective noise of projection row ``b*`` for ECV ``a``."""
    b = np.asarray(b, dtype=complex).ravel()
    a = np.asarray(a, dtype=complex).ravel()
    resid = FH.conj().T @ b - a
    return float(np.vdot(resid, resid).real
                 + (np.vdot(b, b).real + np.vdot(F.conj().T @ b, F.conj().T @ b).real) / snr_t)


def run_afc(real: ChannelRealization, cfg: NetworkConfig) -> SchemeOutcome:
    """Integer-forcing recovery of ``L`` independent equations at the destination."""
    L, M = cfg.num_users, cfg.num_relays
    V, absorbed, K, FH = afc_form(real, cfg)
    radius = spectral_radius(absorbed)
    try:
        rows, _ = min_form_matrix(V, SearchBudget(radius), None, L)
    except InfeasibleSearch:
        return make_outcome("afc", 0.0, [], cfg.target_rate, detail="infeasible")
    values = [hermitian_form(e.vector, V) for e in rows]
    B = afc_projection([e.vector for e in rows], FH, K)
    F = afc_gains(real, cfg)
    for e, b_row, v in zip(rows, B, values):
        n = afc_noise(b_row.conj(), e.vector, FH, F, cfg.snr_t)
        if abs(n - v) > 1e-9 * max(1.0, v):
            raise InvariantViolation(f"receiver noise {n} disagrees with form value {v}")
    rates = [log_rate(v) for v in values]
    return make_outcome("afc", L / (M + 1) * min(rates), rates, cfg.target_rate,
                        detail=tuple(rows))
