"""ASK constellations, bit labelings, symbol distributions, soft demappers.

Conventions used throughout:

* The 2^m-ASK alphabet is the set of odd integers {+-1, +-3, ..., +-(2^m-1)},
  stored in ascending order.  No power normalization is applied anywhere; the
  SNR definition gamma = E[X^2]/E[W^2] absorbs the constellation power into
  the noise variance.
* A label is an m-bit integer.  Bit-level i (i = 1..m) is bit (i-1) of the
  label integer, i.e. level 1 is the least significant bit and is the first
  level decoded by a multistage receiver.
* LLR = ln(P(bit = 0) / P(bit = 1)), clipped to +-LLR_CLIP.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LLR_CLIP = 40.0

NBC = "nbc"
SHIFTED_NBC = "shifted_nbc"
GRAY = "gray"

LABELING_KINDS = (NBC, SHIFTED_NBC, GRAY)


def ask_symbols(m: int) -> np.ndarray:
    """The 2^m-ASK alphabet in ascending order."""
    if m < 1:
        raise ValueError(f"need m >= 1, got {m}")
    return np.arange(-(2**m - 1), 2**m, 2, dtype=np.int64)


@dataclass(frozen=True, eq=False)
class Labeling:
    """Bijection between m-bit labels and the 2^m ASK symbols.

    ``labels[a]`` is the label integer of the a-th symbol in ascending
    amplitude order; ``bits[a, i]`` is the level-(i+1) bit of that label.
    """

    m: int
    kind: str
    labels: np.ndarray

    symbols: np.ndarray = field(init=False)
    bits: np.ndarray = field(init=False)
    symbol_index_of_label: np.ndarray = field(init=False)

    def __post_init__(self):
        q = 2**self.m
        labels = np.asarray(self.labels, dtype=np.int64)
        if sorted(labels.tolist()) != list(range(q)):
            raise ValueError("labeling must be a bijection onto {0..2^m-1}")
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "symbols", ask_symbols(self.m))
        shifts = np.arange(self.m)
        object.__setattr__(
            self, "bits", ((labels[:, None] >> shifts[None, :]) & 1).astype(np.uint8)
        )
        inv = np.empty(q, dtype=np.int64)
        inv[labels] = np.arange(q)
        object.__setattr__(self, "symbol_index_of_label", inv)

    def level_bits(self, level: int) -> np.ndarray:
        """Per-symbol bit of one bit-level (1-based), ascending symbol order."""
        if not 1 <= level <= self.m:
            raise ValueError(f"level must be in 1..{self.m}")
        return self.bits[:, level - 1]


def nbc_labeling(m: int) -> Labeling:
    """Natural binary (set-partitioning) labeling: label = (2^m - 1 - x) / 2."""
    q = 2**m
    return Labeling(m, NBC, (q - 1) - np.arange(q))


def shifted_nbc_labeling(m: int) -> Labeling:
    """NBC circularly shifted by 2^(m-2); level m flags |x| < 2^(m-1)."""
    if m < 2:
        raise ValueError("shifted NBC needs m >= 2")
    q = 2**m
    return Labeling(m, SHIFTED_NBC, ((q - 1) - np.arange(q) + q // 4) % q)


def gray_labeling(m: int) -> Labeling:
    """Binary reflected Gray code on the natural amplitude order."""
    a = np.arange(2**m)
    return Labeling(m, GRAY, a ^ (a >> 1))


_BUILDERS = {NBC: nbc_labeling, SHIFTED_NBC: shifted_nbc_labeling, GRAY: gray_labeling}


def make_labeling(kind: str, m: int) -> Labeling:
    try:
        return _BUILDERS[kind](m)
    except KeyError:
        raise ValueError(f"unknown labeling kind {kind!r}") from None


def shifted_nbc_label(x: int, m: int) -> np.ndarray:
    """Shifted-NBC label of symbol x as an m-bit word, level m (MSB) first."""
    symbols = ask_symbols(m)
    if x not in symbols:
        raise ValueError(f"{x} is not a {2**m}-ASK symbol")
    v = ((2**m - 1 - x) // 2 + 2 ** (m - 2)) % 2**m
    return np.array([(v >> (m - 1 - j)) & 1 for j in range(m)], dtype=np.uint8)


def inner_indicator_level(labeling: Labeling):
    """The bit-level whose bit equals 1 exactly on symbols with |x| < 2^(m-1).

    This is the level a single-bit-level shaper must target so that the
    induced symbol distribution is the piecewise-constant two-ring pmf.
    Returns None when the labeling has no such level (e.g. NBC).
    """
    inner = (np.abs(labeling.symbols) < 2 ** (labeling.m - 1)).astype(np.uint8)
    for level in range(1, labeling.m + 1):
        if np.array_equal(labeling.level_bits(level), inner):
            return level
    return None


# ---------------------------------------------------------------------------
# Symbol distributions
# ---------------------------------------------------------------------------

UNIFORM = "uniform"
MAXWELL_BOLTZMANN = "maxwell_boltzmann"
SBS_PIECEWISE = "sbs_piecewise"
PRODUCT = "product"


@dataclass(frozen=True, eq=False)
class SymbolPmf:
    """Probability mass function over a 2^m-ASK alphabet."""

    m: int
    probs: np.ndarray
    kind: str
    symbols: np.ndarray = field(init=False)

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.shape != (2**self.m,):
            raise ValueError("pmf size must be 2^m")
        if np.any(probs < 0):
            raise ValueError("pmf has negative mass")
        if abs(probs.sum() - 1.0) > 1e-12:
            raise ValueError(f"pmf sums to {probs.sum()!r}, not 1")
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "symbols", ask_symbols(self.m))

    def second_moment(self) -> float:
        """E[X^2] under this pmf."""
        return float(np.sum(self.probs * self.symbols.astype(np.float64) ** 2))

    def entropy_bits(self) -> float:
        """H(X) in bits."""
        p = self.probs[self.probs > 0]
        return float(-np.sum(p * np.log2(p)))

    def log_probs(self) -> np.ndarray:
        """ln P(x) with -inf for zero-mass symbols."""
        with np.errstate(divide="ignore"):
            return np.log(self.probs)

    def sample_indices(self, gen: np.random.Generator, size: int) -> np.ndarray:
        """Inverse-CDF sampling; common uniforms give coupled draws across pmfs."""
        edges = np.cumsum(self.probs)
        edges[-1] = 1.0
        return np.searchsorted(edges, gen.random(size), side="right")


def uniform_pmf(m: int) -> SymbolPmf:
    q = 2**m
    return SymbolPmf(m, np.full(q, 1.0 / q), UNIFORM)


def mb_pmf(m: int, nu: float) -> SymbolPmf:
    """Maxwell-Boltzmann family P(x) proportional to exp(-nu x^2)."""
    if nu < 0:
        raise ValueError("nu must be >= 0")
    w = np.exp(-nu * ask_symbols(m).astype(np.float64) ** 2)
    return SymbolPmf(m, w / w.sum(), MAXWELL_BOLTZMANN)


def sbs_pmf(m: int, p: float) -> SymbolPmf:
    """Two-ring pmf: P(x) = p/2^(m-1) for |x| < 2^(m-1), else (1-p)/2^(m-1)."""
    if not 0.5 <= p < 1:
        raise ValueError("need 0.5 <= p < 1")
    inner = np.abs(ask_symbols(m)) < 2 ** (m - 1)
    probs = np.where(inner, p, 1.0 - p) / 2 ** (m - 1)
    return SymbolPmf(m, probs, SBS_PIECEWISE)


def pmf_from_levels(level_priors, labeling: Labeling) -> SymbolPmf:
    """Product distribution with P(C_i = 1) = level_priors[i-1], pushed
    through the labeling onto symbols."""
    priors = np.asarray(level_priors, dtype=np.float64)
    if priors.shape != (labeling.m,):
        raise ValueError(f"need {labeling.m} level priors")
    if np.any((priors < 0) | (priors > 1)):
        raise ValueError("priors must lie in [0, 1]")
    bits = labeling.bits.astype(np.float64)
    probs = np.prod(np.where(bits == 1, priors, 1.0 - priors), axis=1)
    return SymbolPmf(labeling.m, probs, PRODUCT)


# ---------------------------------------------------------------------------
# Symbol mapping
# ---------------------------------------------------------------------------


def map_symbols(frames: np.ndarray, labeling: Labeling) -> np.ndarray:
    """Map m bit-level frames (shape (m, ...) stacked level 1 first) to symbols."""
    frames = np.asarray(frames)
    if frames.shape[0] != labeling.m:
        raise ValueError(f"expected {labeling.m} bit-level frames")
    weights = (1 << np.arange(labeling.m)).reshape((-1,) + (1,) * (frames.ndim - 1))
    label_ints = np.sum(frames.astype(np.int64) * weights, axis=0)
    return labeling.symbols[labeling.symbol_index_of_label[label_ints]]


def demap_hard(x: np.ndarray, labeling: Labeling) -> np.ndarray:
    """Exact inverse of map_symbols for noiseless symbols."""
    idx = np.searchsorted(labeling.symbols, np.asarray(x))
    labels = labeling.labels[idx]
    return np.stack([(labels >> i) & 1 for i in range(labeling.m)]).astype(np.uint8)


# ---------------------------------------------------------------------------
# Soft demapping
# ---------------------------------------------------------------------------


def _log_weights(y, h, noise_var, pmf: SymbolPmf) -> np.ndarray:
    """ln[P(x) f(y | h, x)] up to a constant, shape y.shape + (2^m,)."""
    if noise_var <= 0:
        raise ValueError("noise variance must be positive")
    y = np.asarray(y, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    x = pmf.symbols.astype(np.float64)
    d = y[..., None] - h[..., None] * x
    return pmf.log_probs() - d * d / (2.0 * noise_var)


def _masked_lse(logw: np.ndarray, mask: np.ndarray, max_log: bool) -> np.ndarray:
    """log-sum-exp of logw over the trailing axis restricted to mask."""
    neg = np.float64(-np.inf)
    wm = np.where(mask, logw, neg)
    mx = np.max(wm, axis=-1)
    if max_log:
        return mx
    safe = np.where(np.isfinite(mx), mx, 0.0)
    with np.errstate(invalid="ignore"):
        out = safe + np.log(np.sum(np.exp(wm - safe[..., None]), axis=-1))
    return np.where(np.isfinite(mx), out, neg)


def bit_llrs_independent(y, h, noise_var, labeling: Labeling, pmf: SymbolPmf,
                         max_log: bool = False) -> np.ndarray:
    """Per-level LLRs with independent (BICM) demapping.

    The symbol prior pmf is folded into the metric, so shaping is accounted
    for at the receiver.  Output shape is (m,) + y.shape.
    """
    logw = _log_weights(y, h, noise_var, pmf)
    out = np.empty((labeling.m,) + np.shape(y), dtype=np.float64)
    for level in range(1, labeling.m + 1):
        one = labeling.level_bits(level).astype(bool)
        out[level - 1] = _masked_lse(logw, ~one, max_log) - _masked_lse(logw, one, max_log)
    return np.clip(out, -LLR_CLIP, LLR_CLIP)


def bit_llr_multistage(y, h, noise_var, labeling: Labeling, pmf: SymbolPmf,
                       decided, level: int, max_log: bool = False) -> np.ndarray:
    """Level-`level` LLR given hard decisions for levels 1..level-1.

    `decided` has shape (level-1,) + y.shape; an empty array reduces to
    independent demapping of the requested level.
    """
    if not 1 <= level <= labeling.m:
        raise ValueError(f"level must be in 1..{labeling.m}")
    decided = np.asarray(decided).reshape((level - 1,) + np.shape(y))
    logw = _log_weights(y, h, noise_var, pmf)
    consistent = np.ones(np.shape(y) + (2**labeling.m,), dtype=bool)
    for j in range(1, level):
        consistent &= labeling.level_bits(j) == decided[j - 1][..., None]
    one = labeling.level_bits(level).astype(bool)
    llr = (_masked_lse(logw, consistent & ~one, max_log)
           - _masked_lse(logw, consistent & one, max_log))
    return np.clip(llr, -LLR_CLIP, LLR_CLIP)


def export_labeling_csv(labeling: Labeling, path) -> None:
    """Write (symbol, label bits level m..1) rows for documentation."""
    with open(path, "w", encoding="utf-8") as f:
        f.write("symbol,label\n")
        for a, x in enumerate(labeling.symbols):
            word = "".join(str((labeling.labels[a] >> (labeling.m - 1 - j)) & 1)
                           for j in range(labeling.m))
            f.write(f"{x},{word}\n")
