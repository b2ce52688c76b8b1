"""Achievable-rate evaluation of the relaying strategies on one channel draw.

Tags: ``cmf``, ``icmf``, ``micmf``, ``afc``, ``hcaf``, ``df`` and ``ocmf``
(the centralised benchmark). :func:`evaluate` runs several of them on the
same draw and shares the work they have in common.
"""

from __future__ import annotations

from typing import Iterable

from ..channel import ChannelRealization, NetworkConfig
from ._base import (
    CombinerCoeffs,
    EquationRecord,
    HcafCombiner,
    InvariantViolation,
    SchemeOutcome,
    comp_rate,
    log_rate,
    p2p_rate,
)
from .afc import afc_form, afc_gains, afc_noise, afc_projection, run_afc
from .centralized import run_centralized
from .cmf import cmf_form, relay_best, run_cmf
from .df import mac_symmetric_rate, run_df
from .hcaf import hcaf_combiner, hcaf_noise, run_hcaf, switch_stage
from .icmf import (
    IcmfTrace,
    StageState,
    icmf_trace,
    inter_relay_cap,
    relay_noise,
    run_icmf,
    run_modified_icmf,
    single_relay_value,
    stage_effective,
    theorem1_coeffs,
)

SCHEME_TAGS = ("cmf", "icmf", "micmf", "afc", "hcaf", "df", "ocmf")

__all__ = [
    "SCHEME_TAGS",
    "CombinerCoeffs",
    "EquationRecord",
    "HcafCombiner",
    "IcmfTrace",
    "InvariantViolation",
    "SchemeOutcome",
    "StageState",
    "afc_form",
    "afc_gains",
    "afc_noise",
    "afc_projection",
    "cmf_form",
    "comp_rate",
    "evaluate",
    "hcaf_combiner",
    "hcaf_noise",
    "icmf_trace",
    "inter_relay_cap",
    "log_rate",
    "mac_symmetric_rate",
    "p2p_rate",
    "relay_noise",
    "run_afc",
    "run_centralized",
    "run_cmf",
    "run_df",
    "run_hcaf",
    "run_icmf",
    "run_modified_icmf",
    "single_relay_value",
    "stage_effective",
    "switch_stage",
    "theorem1_coeffs",
]


def evaluate(real: ChannelRealization, cfg: NetworkConfig,
             tags: Iterable[str]) -> dict[str, SchemeOutcome]:
    """Run the requested schemes on one draw.

    The unconstrained per-relay searches are shared by the CMF and both
    stage-wise schemes, and the cooperative trace by ICMF and HCAF; each
    outcome equals the one its ``run_*`` function returns on its own.
    """
    tags = list(tags)
    unknown = [t for t in tags if t not in SCHEME_TAGS]
    if unknown:
        raise ValueError(f"unknown scheme tag(s): {', '.join(unknown)}")
    first = None
    trace = None

    def first_stage():
        nonlocal first
        if first is None:
            first = [relay_best(real, cfg, m) for m in range(cfg.num_relays)]
        return first

    def coop():
        nonlocal trace
        if trace is None:
            trace = icmf_trace(real, cfg, first_stage=first_stage())
        return trace

    out = {}
    for tag in tags:
        if tag == "cmf":
            out[tag] = run_cmf(real, cfg, first_stage=first_stage())
        elif tag == "icmf":
            out[tag] = run_icmf(real, cfg, trace=coop())
        elif tag == "hcaf":
            out[tag] = run_hcaf(real, cfg, trace=coop())
        elif tag == "micmf":
            t = icmf_trace(real, cfg, side_info=False, first_stage=first_stage())
            out[tag] = run_modified_icmf(real, cfg, trace=t)
        elif tag == "afc":
            out[tag] = run_afc(real, cfg)
        elif tag == "df":
            out[tag] = run_df(real, cfg)
        else:
            out[tag] = run_centralized(real, cfg)
    return out
