"""Outcome records and rate helpers shared by every relaying strategy."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ..lattice import Ecv, _core
from ..numerics import exact_rank, hermitian_form

RATE_EPS = 1e-12


class InvariantViolation(RuntimeError):
    """An internal consistency check failed."""


def log_rate(value: float) -> float:
    """``log2+(1 / max(value, eps))``: rate of an equation with form value ``value``."""
    return max(0.0, -math.log2(max(value, RATE_EPS)))


def comp_rate(a, V) -> float:
    """Computation rate of ECV ``a`` under quadratic form ``V``."""
    vec = a.vector if isinstance(a, Ecv) else a
    return log_rate(hermitian_form(vec, V))


def p2p_rate(coef: complex, snr: float) -> float:
    """Capacity ``log2(1 + snr |coef|^2)`` of a scalar Gaussian link."""
    return math.log2(1.0 + snr * abs(coef) ** 2)


def layout_rank(rows: np.ndarray) -> int:
    """Exact complex rank of ECVs given in real layout."""
    r = _core.complex_rank(rows)
    if r >= 0:
        return r
    L = rows.shape[1] // 2
    return exact_rank(rows[:, :L] + 1j * rows[:, L:])


def outage(rate: float, target: float) -> bool:
    return rate <= target


@dataclass(frozen=True)
class EquationRecord:
    """An equation delivered towards the destination."""

    ecv: Ecv
    comp_rate: float
    origin_relay: int
    stage: int
    delivered_rate: float

    def __post_init__(self):
        if self.comp_rate < 0:
            raise ValueError("computation rate must be nonnegative")
        if self.delivered_rate > self.comp_rate:
            raise ValueError("delivered rate exceeds computation rate")


@dataclass(frozen=True)
class SchemeOutcome:
    """End-to-end result of one strategy on one realization.

    ``end_to_end_rate`` already includes the time-sharing prefactor;
    ``outage`` compares it with the target rate inclusively.
    """

    scheme: str
    end_to_end_rate: float
    per_stage_rates: tuple[float, ...]
    outage: bool
    detail: Any = None
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.end_to_end_rate >= 0:
            raise ValueError(f"negative end-to-end rate {self.end_to_end_rate}")


def make_outcome(scheme: str, rate: float, stages, target: float,
                 detail=None, **info) -> SchemeOutcome:
    rate = max(0.0, float(rate))
    return SchemeOutcome(scheme, rate, tuple(float(r) for r in stages),
                         outage(rate, target), detail, dict(info))


@dataclass(frozen=True)
class CombinerCoeffs:
    """Relay-side combiner: weight on the projected signal and on past equations."""

    beta: complex
    c: np.ndarray


@dataclass(frozen=True)
class HcafCombiner:
    """Destination-side receiver for the hybrid scheme."""

    B: np.ndarray
    C: np.ndarray
    U: np.ndarray
    G: np.ndarray
    F_af: np.ndarray
    K: np.ndarray
    absorbed: np.ndarray
