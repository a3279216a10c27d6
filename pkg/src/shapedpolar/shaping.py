"""Shaping-bit generation with a polar list decoder used as a precoder.

A codeword with ones-fraction p can be read as a likely noise vector of a
binary symmetric channel with crossover p whose output is the all-zero word.
Running a list decoder on that synthetic observation - the constant LLR
ln((1-p)/p) at every shaped position, information and frozen bits pinned to
their actual values - yields decisions on the shaping set that force the
codeword toward the target ones-fraction.  The receiver treats shaping bits
as ordinary information bits and discards them after decoding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rng
from .polar import PolarCodeSpec, frozen_bit_stream, polar_transform
from .reliability import ReliabilityOrder
from .scl import SclDecoder


@dataclass(frozen=True)
class ShapingConfig:
    """Target ones-probability p, shaping-bit count s, precoder list size."""

    p: float
    s: int
    precoder_list_size: int = 8

    def __post_init__(self):
        if not 0.5 <= self.p < 1:
            raise ValueError("need 0.5 <= p < 1")
        if self.s < 0:
            raise ValueError("s must be >= 0")
        if self.precoder_list_size < 1:
            raise ValueError("list size must be >= 1")

    @property
    def prior_llr(self) -> float:
        """ln((1-p)/p); zero exactly at p = 0.5, negative otherwise."""
        return math.log((1.0 - self.p) / self.p)


def select_shaping_set(order: ReliabilityOrder, s: int) -> np.ndarray:
    """The s most reliable virtual channels."""
    return order.most_reliable(s)


def asymptotic_shaping_count(n: int, p: float) -> int:
    """floor(n (1 - h2(p))), the infinite-length shaping-bit count."""
    if not 0.5 <= p < 1:
        raise ValueError("need 0.5 <= p < 1")
    if p == 0.5:
        return 0
    h2 = -(p * math.log2(p) + (1 - p) * math.log2(1 - p))
    return int(math.floor(n * (1.0 - h2)))


_DITHER = 1e-6


def _precoder_llrs(spec: PolarCodeSpec, cfg: ShapingConfig, mask) -> np.ndarray:
    """Synthetic observation: prior LLR on masked positions, zero elsewhere.

    Exactly-zero targets (p = 0.5, or positions outside the mask) would make
    every path metric tie and the deterministic tie-break would pick the
    all-zero decisions, biasing the codeword.  A seeded infinitesimal dither
    on those positions keeps the degenerate decisions balanced while leaving
    any real shaping prior (|L_s| >> dither) untouched.
    """
    if mask is None:
        llrs = np.full(spec.n, cfg.prior_llr)
    else:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (spec.n,):
            raise ValueError(f"mask must have length {spec.n}")
        llrs = np.where(mask, cfg.prior_llr, 0.0)
    zero = llrs == 0.0
    if np.any(zero):
        signs = 1.0 - 2.0 * frozen_bit_stream(spec.frozen_seed ^ 0xD17E4, spec.n)
        llrs = llrs + zero * _DITHER * signs
    return llrs


def generate_shaping_bits_batch(info: np.ndarray, spec: PolarCodeSpec,
                                cfg: ShapingConfig, mask=None,
                                decoder: SclDecoder | None = None) -> np.ndarray:
    """Shaping bits for a batch of blocks, shape (B, s).

    ``info`` (B, |I|) holds the values bound for the information set; the
    frozen set takes the spec's frozen stream.  Both are treated as frozen
    by the precoder, which decides only the shaping positions.  Deterministic
    given inputs: best-metric path, ties toward the lower path index.
    """
    info = np.atleast_2d(np.asarray(info, dtype=np.uint8))
    if info.shape[1] != spec.k:
        raise ValueError(f"expected {spec.k} info bits per block")
    if spec.s != cfg.s:
        raise ValueError(f"spec carries {spec.s} shaping positions, config says {cfg.s}")
    batch = info.shape[0]
    if decoder is None:
        decoder = SclDecoder(spec.n, cfg.precoder_list_size)
    elif decoder.n != spec.n or decoder.L != cfg.precoder_list_size:
        raise ValueError("decoder does not match the spec/config")

    free = np.zeros(spec.n, dtype=bool)
    free[spec.shaping_set] = True
    pinned_idx = np.flatnonzero(~free)  # sorted union of info and frozen sets
    pinned = np.empty((batch, len(pinned_idx)), dtype=np.uint8)
    ranks = np.searchsorted(pinned_idx, spec.info_set)
    pinned[:, ranks] = info
    ranks = np.searchsorted(pinned_idx, spec.frozen_set)
    pinned[:, ranks] = spec.frozen_values()

    llrs = np.broadcast_to(_precoder_llrs(spec, cfg, mask), (batch, spec.n))
    u, pm = decoder.decode(llrs, free, pinned)
    best = np.argsort(pm, axis=1, kind="stable")[:, 0]
    chosen = np.take_along_axis(u, best[:, None, None], axis=1)[:, 0, :]
    return chosen[:, spec.shaping_set]


def generate_shaping_bits(info: np.ndarray, spec: PolarCodeSpec,
                          cfg: ShapingConfig, mask=None) -> np.ndarray:
    """Single-block convenience wrapper around the batched precoder."""
    return generate_shaping_bits_batch(info, spec, cfg, mask)[0]


def ones_fraction(codewords: np.ndarray, mask=None) -> np.ndarray:
    """Per-codeword fraction of ones over the masked-true positions."""
    codewords = np.atleast_2d(codewords)
    if mask is not None:
        codewords = codewords[:, np.asarray(mask, dtype=bool)]
    return codewords.mean(axis=1)


def measure_ones_fraction(n: int, p: float, s: int, order: ReliabilityOrder,
                          list_size: int, trials: int, seed: int = 0,
                          batch: int = 512):
    """Monte-Carlo codeword ones-fraction for a given shaping-bit count.

    Random bits fill the non-shaping positions each trial.  Returns
    (mean fraction, standard error of the mean).
    """
    cfg = ShapingConfig(p=p, s=s, precoder_list_size=list_size)
    spec = PolarCodeSpec.from_order(order.order, k=n - s, s=s)
    decoder = SclDecoder(n, list_size)
    fracs = []
    done = 0
    while done < trials:
        m = min(batch, trials - done)
        gen = rng.stream(seed, "shaping-mc", s, done)
        info = (gen.random((m, n - s)) < 0.5).astype(np.uint8)
        sh = generate_shaping_bits_batch(info, spec, cfg, decoder=decoder)
        u = np.zeros((m, n), dtype=np.uint8)
        u[:, spec.info_set] = info
        u[:, spec.shaping_set] = sh
        u[:, spec.frozen_set] = spec.frozen_values()
        fracs.append(ones_fraction(polar_transform(u)))
        done += m
    fracs = np.concatenate(fracs)
    return float(fracs.mean()), float(fracs.std(ddof=1) / math.sqrt(len(fracs)))


def candidate_grid(n: int, p: float) -> list[int]:
    """Coarse search grid around the asymptotic count: -8..+32 in steps of 4."""
    base = asymptotic_shaping_count(n, p)
    return [s for s in range(base - 8, base + 33, 4) if 0 <= s <= n]


def calibrate_s(n: int, p: float, order: ReliabilityOrder, list_size: int,
                trials: int, seed: int = 0):
    """Find the shaping-bit count whose measured ones-fraction is closest to p.

    Scans the coarse grid, then refines in unit steps around the best
    candidate.  Returns (s_star, curve) with curve = list of
    (s, mean fraction, stderr) for every count evaluated, ascending in s.
    """
    if trials < 10**3:
        raise ValueError("need at least 1000 trials")
    if p == 0.5:
        mean, se = measure_ones_fraction(n, p, 0, order, list_size, trials, seed)
        return 0, [(0, mean, se)]
    grid = candidate_grid(n, p)
    if not grid:
        raise ValueError("empty candidate grid")
    results = {}
    for s in grid:
        results[s] = measure_ones_fraction(n, p, s, order, list_size, trials, seed)
    best = min(results, key=lambda s: abs(results[s][0] - p))
    for s in range(max(best - 3, 0), min(best + 4, n + 1)):
        if s not in results:
            results[s] = measure_ones_fraction(n, p, s, order, list_size, trials, seed)
    s_star = min(sorted(results), key=lambda s: abs(results[s][0] - p))
    curve = [(s,) + results[s] for s in sorted(results)]
    return s_star, curve
