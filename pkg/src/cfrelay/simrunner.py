"""Seeded Monte Carlo outage estimation over SNR grids.

Every trial draws its channel from its own generator, seeded from
``(master_seed, point index, trial index)`` through :class:`numpy.random.SeedSequence`
spawn keys. Results therefore do not depend on how trials are split across
worker processes or in which order they finish; aggregation only adds
integer counters.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .channel import NetworkConfig, db_to_linear, sample_realization
from .schemes import SCHEME_TAGS, evaluate

__all__ = [
    "SweepSpec",
    "OutagePoint",
    "estimate_outage",
    "dominance_check",
    "wilson_interval",
    "trial_rng",
    "point_config",
]

_Z95 = 1.959963984540054
DEFAULT_CHUNK = 1000


@dataclass(frozen=True)
class SweepSpec:
    """What to simulate.

    ``sweep`` picks which SNR follows the grid: ``"both"`` (equal transmit
    and relay SNR), ``"snr_t"`` or ``"snr_r"``; the other one keeps the
    value in the network configuration.
    """

    snr_db_points: tuple[float, ...]
    trials: int
    master_seed: int = 0
    schemes: tuple[str, ...] = ("icmf",)
    paired: bool = True
    sweep: str = "both"

    def __post_init__(self):
        pts = tuple(float(p) for p in self.snr_db_points)
        object.__setattr__(self, "snr_db_points", pts)
        object.__setattr__(self, "schemes", tuple(self.schemes))
        if not pts:
            raise ValueError("at least one SNR point is required")
        if any(b <= a for a, b in zip(pts, pts[1:])):
            raise ValueError("SNR points must be strictly increasing")
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValueError("trials must be a positive integer")
        if not 0 <= int(self.master_seed) < 2 ** 64:
            raise ValueError("master_seed must fit in 64 unsigned bits")
        if not self.schemes:
            raise ValueError("at least one scheme is required")
        bad = [s for s in self.schemes if s not in SCHEME_TAGS]
        if bad:
            raise ValueError(f"unknown scheme tag(s): {', '.join(bad)}")
        if len(set(self.schemes)) != len(self.schemes):
            raise ValueError("duplicate scheme tags")
        if self.sweep not in ("both", "snr_t", "snr_r"):
            raise ValueError(f"unknown sweep mode {self.sweep!r}")


@dataclass(frozen=True)
class OutagePoint:
    scheme: str
    snr_db: float
    trials: int
    outages: int
    outage_prob: float
    ci95_low: float
    ci95_high: float


def wilson_interval(k: int, n: int, z: float = _Z95) -> tuple[float, float]:
    """Wilson score interval for ``k`` successes in ``n`` trials."""
    if n <= 0:
        raise ValueError("n must be positive")
    p = k / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo, hi = max(0.0, centre - half), min(1.0, centre + half)
    # guard the ordering against rounding at k = 0 or k = n
    return min(lo, p), max(hi, p)


def trial_rng(master_seed: int, point: int, trial: int, stream: int | None = None):
    """Independent generator for one trial (and optionally one scheme)."""
    key = (point, trial) if stream is None else (point, trial, stream)
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(master_seed, spawn_key=key)))


def point_config(cfg: NetworkConfig, spec: SweepSpec, snr_db: float) -> NetworkConfig:
    s = db_to_linear(snr_db)
    if spec.sweep == "both":
        return replace(cfg, snr_t=s, snr_r=s)
    if spec.sweep == "snr_t":
        return replace(cfg, snr_t=s)
    return replace(cfg, snr_r=s)


def _chunk(args):
    cfg, spec, point, start, stop, pairs = args
    pcfg = point_config(cfg, spec, spec.snr_db_points[point])
    counts = np.zeros(len(spec.schemes), dtype=np.int64)
    joint = np.zeros(len(pairs), dtype=np.int64)
    flags = np.zeros(len(spec.schemes), dtype=bool)
    for t in range(start, stop):
        if spec.paired:
            real = sample_realization(pcfg, trial_rng(spec.master_seed, point, t))
            out = evaluate(real, pcfg, spec.schemes)
            for i, tag in enumerate(spec.schemes):
                flags[i] = out[tag].outage
        else:
            for i, tag in enumerate(spec.schemes):
                stream = 1 + SCHEME_TAGS.index(tag)
                real = sample_realization(pcfg, trial_rng(spec.master_seed, point, t, stream))
                flags[i] = evaluate(real, pcfg, [tag])[tag].outage
        counts += flags
        for j, (a, b) in enumerate(pairs):
            joint[j] += flags[a] and not flags[b]
    return point, counts, joint


def _work_items(cfg, spec, pairs, chunk):
    for p in range(len(spec.snr_db_points)):
        for start in range(0, spec.trials, chunk):
            yield (cfg, spec, p, start, min(spec.trials, start + chunk), pairs)


def _resolve_workers(workers) -> int:
    if workers in (None, "auto"):
        return os.cpu_count() or 1
    workers = int(workers)
    if workers < 1:
        raise ValueError("workers must be >= 1")
    return workers


def _run(cfg, spec, pairs, workers, chunk, progress):
    n_pts = len(spec.snr_db_points)
    counts = np.zeros((n_pts, len(spec.schemes)), dtype=np.int64)
    joint = np.zeros((n_pts, len(pairs)), dtype=np.int64)
    items = list(_work_items(cfg, spec, pairs, chunk))
    workers = _resolve_workers(workers)
    if workers == 1:
        results = map(_chunk, items)
        for done, (p, c, j) in enumerate(results, 1):
            counts[p] += c
            joint[p] += j
            if progress:
                progress(done, len(items))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for done, (p, c, j) in enumerate(pool.map(_chunk, items), 1):
                counts[p] += c
                joint[p] += j
                if progress:
                    progress(done, len(items))
    return counts, joint


def estimate_outage(cfg: NetworkConfig, spec: SweepSpec, *, workers=1,
                    chunk: int = DEFAULT_CHUNK,
                    progress: Callable[[int, int], None] | None = None) -> list[OutagePoint]:
    """Outage estimates for every (scheme, SNR point), scheme-major order."""
    counts, _ = _run(cfg, spec, [], workers, chunk, progress)
    out = []
    for i, tag in enumerate(spec.schemes):
        for p, db in enumerate(spec.snr_db_points):
            k = int(counts[p, i])
            lo, hi = wilson_interval(k, spec.trials)
            out.append(OutagePoint(tag, db, spec.trials, k, k / spec.trials, lo, hi))
    return out


def dominance_check(cfg: NetworkConfig, spec: SweepSpec, scheme_a: str, scheme_b: str, *,
                    workers=1, chunk: int = DEFAULT_CHUNK) -> list[int]:
    """Per SNR point, trials where ``scheme_a`` is in outage and ``scheme_b`` is not."""
    if not spec.paired:
        raise ValueError("dominance checks need paired trials")
    tags = list(dict.fromkeys([scheme_a, scheme_b]))
    sub = replace(spec, schemes=tuple(tags))
    pair = (tags.index(scheme_a), tags.index(scheme_b))
    _, joint = _run(cfg, sub, [pair], workers, chunk, None)
    return [int(v) for v in joint[:, 0]]


def crossing_db(points: Sequence[OutagePoint], level: float) -> float | None:
    """SNR where a curve first falls to ``level``, interpolated linearly in dB.

    Interpolation uses ``log10`` of the outage probability between the two
    bracketing points; ``None`` if the curve never brackets ``level``.
    """
    pts = sorted(points, key=lambda p: p.snr_db)
    for a, b in zip(pts, pts[1:]):
        if a.outage_prob >= level > b.outage_prob:
            if b.outage_prob <= 0:
                return b.snr_db if a.outage_prob == level else None
            la, lb, lt = math.log10(a.outage_prob), math.log10(b.outage_prob), math.log10(level)
            return a.snr_db + (la - lt) / (la - lb) * (b.snr_db - a.snr_db)
    return None
