"""Incremental compute-and-forward and its projection-free variant.

Relays recover equations one stage at a time. At stage ``k`` every relay
knows the ``k - 1`` equations already sent, strips their contribution from
its own observation, searches for the best equation independent of them and
competes for the slot; the relay with the highest deliverable rate wins
(lowest index on ties). A single-relay mode, in which one relay produces
all ``L`` equations on its own, is always evaluated alongside.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..channel import ChannelRealization, NetworkConfig
from ..lattice import (Ecv, InfeasibleSearch, _core, ecv_from_layout, icmf_radius, layout_of,
                       search_layout)
from ..numerics import as_complex_matrix, projector
from ._base import CombinerCoeffs, EquationRecord, SchemeOutcome, log_rate, make_outcome, p2p_rate
from .cmf import cmf_form, cmf_radius


@dataclass(frozen=True, eq=False)
class StageState:
    """Equation log seen by the relays before a stage.

    ``records`` lists the equations already sent, in order; ``stage`` is the
    index of the stage about to run (1-based).
    """

    num_users: int
    records: tuple[EquationRecord, ...] = ()
    ex_c: np.ndarray = field(init=False, repr=False)
    ex_int: np.ndarray = field(init=False, repr=False)
    P: np.ndarray = field(init=False, repr=False)
    slack: float = field(init=False, repr=False)
    proj_fro: float = field(init=False, repr=False)

    def __post_init__(self):
        L = self.num_users
        k = len(self.records)
        if k >= L + 1:
            raise ValueError("equation log longer than the number of users")
        ex_int = np.empty((k, 2 * L), dtype=np.int64)
        for j, rec in enumerate(self.records):
            ex_int[j] = layout_of(rec.ecv)
        ex_c = np.ascontiguousarray(ex_int[:, :L] + 1j * ex_int[:, L:])
        rank = _core.complex_rank(ex_int)
        if rank >= 0 and rank != k:
            raise ValueError("dependent equation log")
        P = _core.span_projector(ex_c, L)
        object.__setattr__(self, "ex_c", ex_c)
        object.__setattr__(self, "ex_int", ex_int)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "slack", float(_core.lift_slack(ex_c)))
        object.__setattr__(self, "proj_fro", float(np.linalg.norm(P)))

    @property
    def stage(self) -> int:
        return len(self.records) + 1

    @property
    def eq_log(self) -> np.ndarray:
        """Log matrix whose rows are the conjugated ECVs."""
        return self.ex_c.conj()

    @property
    def origins(self) -> tuple[int, ...]:
        return tuple(r.origin_relay for r in self.records)

    @property
    def origin_rates(self) -> tuple[float, ...]:
        return tuple(r.comp_rate for r in self.records)

    def extended(self, record: EquationRecord) -> "StageState":
        return StageState(self.num_users, self.records + (record,))


def stage_effective(real: ChannelRealization, cfg: NetworkConfig, m: int, state: StageState):
    """Effective channel and quadratic form of relay ``m`` at ``state``'s stage.

    Returns ``(g_eff, V)`` where ``g_eff`` is the relay's channel vector with
    the logged directions removed and ``V`` the matching form. With an empty
    log ``V`` is exactly the conventional single-stage form.
    """
    h = real.h_vec(m)
    if not state.records:
        return h.copy(), cmf_form(h, cfg.snr_t)
    P = state.P
    g = h - P @ h
    gg = float(np.vdot(g, g).real)
    V = np.eye(h.size, dtype=complex) - np.outer(g, g.conj()) / (1.0 / cfg.snr_t + gg) - P
    V = 0.5 * (V + V.conj().T)
    return g, V


def theorem1_coeffs(g_eff, E, a, snr_t: float) -> CombinerCoeffs:
    """Optimal relay combiner for ECV ``a`` given effective channel and log.

    ``E`` holds the conjugated ECVs of the log as rows (may be empty).
    """
    g = np.asarray(g_eff, dtype=complex).ravel()
    vec = a.vector if isinstance(a, Ecv) else np.asarray(a, dtype=complex).ravel()
    E = as_complex_matrix(E, cols=g.size)
    beta = complex(np.vdot(g, vec) / (1.0 / snr_t + float(np.vdot(g, g).real)))
    if E.shape[0] == 0:
        c = np.zeros(0, dtype=complex)
    else:
        projector(E)          # raises on a dependent log
        c = np.linalg.solve(E @ E.conj().T, E @ vec)
    return CombinerCoeffs(beta, c)


def relay_noise(beta: complex, c, g_eff, E, a, snr_t: float) -> float:
    """Effective noise ``|beta|^2 + snr_t |beta g + E* c - a|^2`` of a relay combiner."""
    g = np.asarray(g_eff, dtype=complex).ravel()
    vec = a.vector if isinstance(a, Ecv) else np.asarray(a, dtype=complex).ravel()
    E = as_complex_matrix(E, cols=g.size)
    resid = beta * g - vec
    if E.shape[0]:
        resid = resid + E.conj().T @ np.asarray(c, dtype=complex)
    return float(abs(beta) ** 2 + snr_t * np.vdot(resid, resid).real)


def inter_relay_cap(real: ChannelRealization, cfg: NetworkConfig, m: int,
                    state: StageState, finite_links: bool = True) -> float:
    """Rate at which relay ``m`` holds every logged equation.

    A relay always knows the equations it sent itself. With
    ``finite_links=False`` the relay-to-relay links are treated as noiseless.
    """
    cap = math.inf
    for rec in state.records:
        r = rec.comp_rate
        n = rec.origin_relay
        if finite_links and n != m:
            r = min(r, p2p_rate(real.g[n, m], cfg.snr_r))
        cap = min(cap, r)
    return cap


@dataclass(frozen=True)
class _RelayStage:
    x: np.ndarray | None
    value: float
    form_rate: float
    comp_rate: float
    rate: float


def _relay_stage(real, cfg, m, state, side_info, cap, cutoff=math.inf):
    h = real.h_vec(m)
    if side_info:
        g, V = stage_effective(real, cfg, m, state)
        radius = (cmf_radius(h, cfg.snr_t) if not state.records else
                  icmf_radius(cfg.snr_t, g, slack=state.slack, proj_fro=state.proj_fro))
    else:
        V = cmf_form(h, cfg.snr_t)
        radius = cmf_radius(h, cfg.snr_t)
    try:
        res = search_layout(np.ascontiguousarray(V), state.ex_c, state.ex_int, radius,
                            cutoff=cutoff)
    except InfeasibleSearch:
        res = None
    if res is None:
        return _RelayStage(None, math.inf, 0.0, 0.0, 0.0)
    x, v = res
    fr = log_rate(v)
    r = min(fr, cap)
    return _RelayStage(x, v, fr, r, min(r, p2p_rate(real.f[m], cfg.snr_r)))


@dataclass(frozen=True)
class IcmfTrace:
    """Stage-by-stage record of one cooperative run.

    ``states[k]`` is the log before stage ``k + 1``; ``rates[k]`` holds every
    relay's deliverable rate at that stage and ``winners[k]`` the chosen
    relay. ``complete`` is false when some stage had no usable equation.
    """

    states: tuple[StageState, ...]
    rates: tuple[np.ndarray, ...]
    comp_rates: tuple[np.ndarray, ...]
    winners: tuple[int, ...]
    first_stage: tuple
    complete: bool

    @property
    def records(self) -> tuple[EquationRecord, ...]:
        return self.states[-1].records

    @property
    def stage_rates(self) -> tuple[float, ...]:
        return tuple(float(self.rates[k][w]) for k, w in enumerate(self.winners))

    @property
    def cooperative_rate(self) -> float:
        if not self.complete:
            return 0.0
        return min(self.stage_rates)


def icmf_trace(real: ChannelRealization, cfg: NetworkConfig, *, side_info: bool = True,
               finite_links: bool = True, first_stage=None) -> IcmfTrace:
    """Run the cooperative stages and keep everything later schemes reuse.

    ``side_info=False`` gives the projection-free variant in which relays
    neither use nor need the logged equations (no inter-relay caps).
    ``first_stage`` may supply the per-relay unconstrained searches.
    """
    L, M = cfg.num_users, cfg.num_relays
    state = StageState(L)
    states, rates, comps, winners = [state], [], [], []
    first = []
    for k in range(L):
        stage = []
        for m in range(M):
            cap = inter_relay_cap(real, cfg, m, state, finite_links) if side_info else math.inf
            if k == 0 and first_stage is not None:
                x, v = first_stage[m]
                fr = log_rate(v)
                r = min(fr, cap)
                rs = _RelayStage(x, v, fr, r, min(r, p2p_rate(real.f[m], cfg.snr_r)))
            else:
                rs = _relay_stage(real, cfg, m, state, side_info, cap)
            stage.append(rs)
        if k == 0:
            first = tuple((rs.x, rs.value) for rs in stage)
        R = np.array([rs.rate for rs in stage])
        rates.append(R)
        comps.append(np.array([rs.comp_rate for rs in stage]))
        w = int(np.argmax(R))          # first maximum: lowest index wins ties
        winners.append(w)
        if stage[w].x is None:
            return IcmfTrace(tuple(states), tuple(rates), tuple(comps), tuple(winners),
                             first, False)
        rec = EquationRecord(ecv_from_layout(stage[w].x), stage[w].comp_rate, w, k + 1,
                             stage[w].rate)
        state = state.extended(rec)
        states.append(state)
    return IcmfTrace(tuple(states), tuple(rates), tuple(comps), tuple(winners), first, True)


def single_relay_value(real: ChannelRealization, cfg: NetworkConfig, trace: IcmfTrace,
                       floor: float = 0.0, *, side_info: bool = True):
    """Best rate of one relay producing all equations alone, if above ``floor``.

    Each relay repeats the constrained search against its own growing log.
    Relays that provably cannot beat ``floor`` are abandoned early, so the
    return value is ``(best_rate, relay)`` when some relay exceeds ``floor``
    and ``(floor, None)`` otherwise.
    """
    L, M = cfg.num_users, cfg.num_relays
    best, who = floor, None
    for m in range(M):
        x, v = trace.first_stage[m]
        if x is None:
            continue
        rt = p2p_rate(real.f[m], cfg.snr_r)
        fr = log_rate(v)
        running = min(fr, rt)
        if running <= best:
            continue
        state = StageState(L).extended(EquationRecord(ecv_from_layout(x), fr, m, 1, running))
        for k in range(1, L):
            cutoff = 2.0 ** (-best)
            rs = _relay_stage(real, cfg, m, state, side_info, math.inf, cutoff=cutoff)
            if rs.x is None:
                running = -1.0
                break
            running = min(running, rs.rate)
            if running <= best:
                break
            state = state.extended(EquationRecord(ecv_from_layout(rs.x), rs.comp_rate, m,
                                                  k + 1, rs.rate))
        if running > best:
            best, who = running, m
    return best, who


def _finish(tag, trace, real, cfg, side_info):
    L = cfg.num_users
    coop = trace.cooperative_rate
    single, who = single_relay_value(real, cfg, trace, coop, side_info=side_info)
    mode = "single-relay" if who is not None else "cooperative"
    rate = L / (L + 1) * max(coop, single)
    detail = trace.records if trace.complete else "infeasible"
    return make_outcome(tag, rate, trace.stage_rates, cfg.target_rate, detail=detail,
                        mode=mode, relay=who, winners=trace.winners)


def run_icmf(real: ChannelRealization, cfg: NetworkConfig, *, finite_links: bool = True,
             trace: IcmfTrace | None = None) -> SchemeOutcome:
    """Cooperative stage-wise scheme with side information."""
    if trace is None:
        trace = icmf_trace(real, cfg, finite_links=finite_links)
    return _finish("icmf", trace, real, cfg, True)


def run_modified_icmf(real: ChannelRealization, cfg: NetworkConfig, *,
                      trace: IcmfTrace | None = None) -> SchemeOutcome:
    """Stage-wise scheme whose relays ignore the logged equations."""
    if trace is None:
        trace = icmf_trace(real, cfg, side_info=False)
    return _finish("micmf", trace, real, cfg, False)
