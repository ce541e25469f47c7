"""Model-free reference signal generators: APRBS and multisine."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ConfigurationError, Region


@dataclass(frozen=True)
class AprbsConfig:
    N: int
    t_hold_min: float
    region: Region
    rng_seed: int = 0

    def __post_init__(self):
        if self.N < 1:
            raise ConfigurationError("N must be >= 1")


def aprbs(config: AprbsConfig, T_s: float) -> np.ndarray:
    """Amplitude-modulated pseudo-random binary sequence, (N, dim).

    Piecewise constant; each segment lasts between h_min and 3 h_min samples
    (h_min = ceil(T_H / T_s)) with i.i.d. uniform amplitudes over the input
    region. Deterministic per seed.
    """
    if config.t_hold_min < T_s:
        raise ConfigurationError(
            f"minimum holding time {config.t_hold_min} must be >= T_s = {T_s}"
        )
    rng = np.random.default_rng(config.rng_seed)
    h_min = int(np.ceil(config.t_hold_min / T_s))
    region = config.region
    out = np.empty((config.N, region.dim))
    k = 0
    while k < config.N:
        length = int(rng.integers(h_min, 3 * h_min + 1))
        level = region.lower + rng.random(region.dim) * region.extent
        out[k : k + length] = level
        k += length
    return out


def multisine(N: int, n_harmonics: int, region: Region, rng_seed: int = 0) -> np.ndarray:
    """Flat-amplitude random-phase multisine rescaled to span the region.

    Harmonics 1..n_harmonics of the N-sample period carry equal amplitude
    and i.i.d. uniform phases; each channel is affinely rescaled so its min
    and max coincide with the region bounds. Deterministic per seed.
    """
    if N < 1:
        raise ConfigurationError("N must be >= 1")
    if not 1 <= n_harmonics <= N // 2:
        raise ConfigurationError(
            f"n_harmonics must satisfy 1 <= n_harmonics <= N/2 = {N // 2}"
        )
    rng = np.random.default_rng(rng_seed)
    k = np.arange(N)
    out = np.empty((N, region.dim))
    for c in range(region.dim):
        phases = rng.random(n_harmonics) * 2.0 * np.pi
        signal = np.zeros(N)
        for h in range(1, n_harmonics + 1):
            signal += np.cos(2.0 * np.pi * h * k / N + phases[h - 1])
        span = signal.max() - signal.min()
        if span == 0.0:
            out[:, c] = 0.5 * (region.lower[c] + region.upper[c])
        else:
            unit = (signal - signal.min()) / span
            out[:, c] = region.lower[c] + unit * (region.upper[c] - region.lower[c])
    return out
