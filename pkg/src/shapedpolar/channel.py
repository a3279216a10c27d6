"""Real-valued fading channel: y = h * x + w with receiver-known h.

Fading coefficients are Rayleigh with E[H^2] = 1 (or identically 1 in AWGN
mode), so the configured SNR gamma = E[X^2]/E[W^2] is the true average
receive SNR.  Sampling is reproducible from (rng_seed, stream) via the
counter-based generator in :mod:`shapedpolar.rng`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rng
from .modem import SymbolPmf

RAYLEIGH = "rayleigh"
AWGN = "awgn"


@dataclass(frozen=True)
class ChannelConfig:
    snr: float                       # linear power ratio E[X^2]/E[W^2]
    fading: str = RAYLEIGH
    rng_seed: int = 0
    stream: tuple = ()               # extra stream ids for parallel batches

    def __post_init__(self):
        if self.snr <= 0:
            raise ValueError("snr must be positive")
        if self.fading not in (RAYLEIGH, AWGN):
            raise ValueError(f"unknown fading kind {self.fading!r}")

    @classmethod
    def from_db(cls, snr_db: float, **kwargs) -> "ChannelConfig":
        return cls(snr=10.0 ** (snr_db / 10.0), **kwargs)


@dataclass(frozen=True, eq=False)
class ChannelBatch:
    """One transmitted batch as seen by the receiver (y, known h, sigma^2)."""

    y: np.ndarray
    h: np.ndarray
    noise_var: float

    def __post_init__(self):
        if np.shape(self.y) != np.shape(self.h):
            raise ValueError("y and h must have identical shapes")
        if self.noise_var <= 0:
            raise ValueError("noise variance must be positive")


def noise_variance(pmf: SymbolPmf, snr: float) -> float:
    """sigma^2 = E[X^2] / gamma for the given symbol distribution."""
    if snr <= 0:
        raise ValueError("snr must be positive")
    return pmf.second_moment() / snr


def transmit(x: np.ndarray, cfg: ChannelConfig, pmf: SymbolPmf,
             zero_noise: bool = False) -> ChannelBatch:
    """Push symbols through the fading channel.

    `zero_noise` keeps the fading draw but suppresses the additive noise
    (testing override); the reported noise variance stays nominal so
    downstream demappers remain well defined.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        raise ValueError("empty symbol vector")
    var = noise_variance(pmf, cfg.snr)
    gen = rng.stream(cfg.rng_seed, "channel", *cfg.stream)
    if cfg.fading == RAYLEIGH:
        h = rng.rayleigh_unit(gen, x.size).reshape(x.shape)
    else:
        h = np.ones_like(x)
    y = h * x
    if not zero_noise:
        y = y + np.sqrt(var) * rng.normal(gen, x.size).reshape(x.shape)
    return ChannelBatch(y=y, h=h, noise_var=var)
