"""Network scenarios and Rayleigh block-fading channel draws."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

__all__ = ["NetworkConfig", "ChannelRealization", "sample_realization", "db_to_linear"]


def db_to_linear(db: float) -> float:
    return float(10.0 ** (db / 10.0))


@dataclass(frozen=True)
class NetworkConfig:
    """Static parameters of an L-user, M-relay network.

    SNRs are linear power ratios; variances are those of the complex
    Gaussian link coefficients; ``target_rate`` is in bits per complex
    channel use.
    """

    num_users: int = 2
    num_relays: int = 3
    snr_t: float = 100.0
    snr_r: float = 100.0
    var_h: float = 1.0
    var_f: float = 10.0
    var_g: float = 1.0
    target_rate: float = 1.0

    def __post_init__(self):
        if int(self.num_users) != self.num_users or self.num_users < 1:
            raise ValueError(f"num_users must be a positive integer, got {self.num_users}")
        if int(self.num_relays) != self.num_relays or self.num_relays < self.num_users:
            raise ValueError(
                f"num_relays must be an integer >= num_users "
                f"({self.num_relays} < {self.num_users})")
        for name in ("snr_t", "snr_r", "var_h", "var_f", "var_g", "target_rate"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v}")

    @property
    def L(self) -> int:
        return self.num_users

    @property
    def M(self) -> int:
        return self.num_relays

    def at_snr_db(self, snr_db: float) -> "NetworkConfig":
        """Copy with both SNRs set to ``snr_db``."""
        s = db_to_linear(snr_db)
        return replace(self, snr_t=s, snr_r=s)


@dataclass(frozen=True, eq=False)
class ChannelRealization:
    """One fading draw, held fixed for a whole trial.

    ``h[i, m]`` is user ``i`` to relay ``m``, ``f[m]`` relay ``m`` to the
    destination and ``g[a, b]`` relay ``a`` to relay ``b`` (zero diagonal).
    """

    h: np.ndarray
    f: np.ndarray
    g: np.ndarray
    _hm: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        h = np.asarray(self.h, dtype=complex)
        f = np.asarray(self.f, dtype=complex).ravel()
        g = np.asarray(self.g, dtype=complex)
        L, M = h.shape
        if f.shape != (M,) or g.shape != (M, M):
            raise ValueError("channel dimensions do not match")
        if not (np.all(np.isfinite(h)) and np.all(np.isfinite(f)) and np.all(np.isfinite(g))):
            raise ValueError("channel coefficients must be finite")
        for arr in (h, f, g):
            arr.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "f", f)
        object.__setattr__(self, "g", g)
        hm = np.ascontiguousarray(h.conj().T)
        hm.setflags(write=False)
        object.__setattr__(self, "_hm", hm)

    @property
    def num_users(self) -> int:
        return self.h.shape[0]

    @property
    def num_relays(self) -> int:
        return self.h.shape[1]

    def h_vec(self, m: int) -> np.ndarray:
        """Relay ``m``'s channel vector ``[h_1m, ..., h_Lm]^*``."""
        return self._hm[m]

    def matches(self, cfg: NetworkConfig) -> bool:
        return self.h.shape == (cfg.num_users, cfg.num_relays)


def _cn(rng: np.random.Generator, var: float, shape) -> np.ndarray:
    scale = np.sqrt(var / 2.0)
    z = rng.standard_normal(shape + (2,))
    return scale * (z[..., 0] + 1j * z[..., 1])


def sample_realization(cfg: NetworkConfig, rng: np.random.Generator) -> ChannelRealization:
    """Draw independent circularly-symmetric Gaussian coefficients.

    The draw order is fixed (h, then f, then g) so a given generator state
    always yields the same realization.
    """
    L, M = cfg.num_users, cfg.num_relays
    h = _cn(rng, cfg.var_h, (L, M))
    f = _cn(rng, cfg.var_f, (M,))
    g = _cn(rng, cfg.var_g, (M, M))
    np.fill_diagonal(g, 0.0)
    return ChannelRealization(h, f, g)
