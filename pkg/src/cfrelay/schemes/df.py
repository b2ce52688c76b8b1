"""Decode-and-forward baseline: the best relay decodes every user."""

from __future__ import annotations

import itertools
import math

from ..channel import ChannelRealization, NetworkConfig
from ._base import SchemeOutcome, make_outcome, p2p_rate


def mac_symmetric_rate(gains, snr_t: float) -> float:
    """Largest common rate inside the multiple-access region with powers ``gains``."""
    L = len(gains)
    best = math.inf
    for size in range(1, L + 1):
        for subset in itertools.combinations(gains, size):
            best = min(best, math.log2(1.0 + snr_t * sum(subset)) / size)
    return best


def run_df(real: ChannelRealization, cfg: NetworkConfig) -> SchemeOutcome:
    L, M = cfg.num_users, cfg.num_relays
    rates = []
    for m in range(M):
        gains = [abs(z) ** 2 for z in real.h[:, m]]
        rates.append(min(mac_symmetric_rate(gains, cfg.snr_t), p2p_rate(real.f[m], cfg.snr_r)))
    best = max(range(M), key=lambda m: (rates[m], -m))
    return make_outcome("df", L / (L + 1) * rates[best], rates, cfg.target_rate, relay=best)
