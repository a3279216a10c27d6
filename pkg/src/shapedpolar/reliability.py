"""Reliability ordering of the polarized virtual channels.

Three ways to obtain a most-to-least-reliable permutation:

* ``gaussian_approximation_order`` - mean-LLR density evolution under the
  Gaussian approximation for a binary-input AWGN surrogate at a design SNR.
* ``load_order`` - a plain-text sequence file (one index per line, most
  reliable first, header ``n=<length>``); requesting a shorter length
  extracts the sub-order of indices below it, preserving relative rank.
* ``polarization_weight_order`` - the universal beta-expansion weight
  sequence (the construction behind the 5G NR ordered set).  The packaged
  default sequence file was generated with it.

The environment variable ``SHAPEDPOLAR_SEQUENCE_FILE`` overrides the packaged
default sequence file.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from importlib import resources

import numpy as np

SEQUENCE_FILE_ENV = "SHAPEDPOLAR_SEQUENCE_FILE"
_DEFAULT_SEQUENCE = "reliability_seq_1024.txt"


class SequenceFormatError(ValueError):
    """Raised for malformed reliability-sequence files."""


@dataclass(frozen=True, eq=False)
class ReliabilityOrder:
    """Permutation of {0..n-1} from most to least reliable."""

    n: int
    order: np.ndarray
    source: str

    def __post_init__(self):
        order = np.asarray(self.order, dtype=np.int64)
        if sorted(order.tolist()) != list(range(self.n)):
            raise ValueError("order must be a permutation of 0..n-1")
        object.__setattr__(self, "order", order)

    def sub_order(self, n: int) -> "ReliabilityOrder":
        """Restrict to indices < n, preserving relative rank."""
        if n > self.n:
            raise ValueError(f"cannot extend an order of length {self.n} to {n}")
        if n == self.n:
            return self
        return ReliabilityOrder(n, self.order[self.order < n], self.source)

    def most_reliable(self, count: int) -> np.ndarray:
        if not 0 <= count <= self.n:
            raise ValueError(f"count must be in 0..{self.n}")
        return self.order[:count]


def _check_pow2(n: int) -> None:
    if n < 2 or n & (n - 1):
        raise ValueError(f"length must be a power of two >= 2, got {n}")


def _ga_check_update(t: np.ndarray) -> np.ndarray:
    """Mean-LLR check-node update, piecewise polynomial approximation."""
    t = np.asarray(t, dtype=np.float64)
    out = np.empty_like(t)
    lo = t <= 1.0
    mid1 = (t > 1.0) & (t <= 3.5)
    mid2 = (t > 3.5) & (t <= 12.0)
    hi = t > 12.0
    out[lo] = t[lo] * (0.2202 * t[lo] + 0.06448)
    out[mid1] = t[mid1] * (0.062883 * t[mid1] + 0.3678) - 0.1627
    out[mid2] = t[mid2] * (0.009005 * t[mid2] + 0.7694) - 0.9507
    out[hi] = 0.9861 * t[hi] - 2.3152
    return out


def gaussian_approximation_order(n: int, design_snr_db: float) -> ReliabilityOrder:
    """Density evolution (Gaussian approximation) on a BPSK-AWGN surrogate.

    The surrogate channel has unit symbols and sigma^2 = 1/gamma, so the
    root mean LLR is 2*gamma.  Stage expansion follows the natural index
    order: prefix bit 0 takes the check branch, bit 1 the variable branch.
    """
    _check_pow2(n)
    gamma = 10.0 ** (design_snr_db / 10.0)
    means = np.array([2.0 * gamma])
    while len(means) < n:
        nxt = np.empty(2 * len(means))
        nxt[0::2] = _ga_check_update(means)
        nxt[1::2] = 2.0 * means
        means = nxt
    order = np.argsort(-means, kind="stable")
    return ReliabilityOrder(n, order, f"gaussian_approximation({design_snr_db}dB)")


def polarization_weight_order(n: int) -> ReliabilityOrder:
    """Universal beta-expansion weights w_i = sum_j b_j(i) 2^(j/4)."""
    _check_pow2(n)
    idx = np.arange(n)
    bits = (idx[:, None] >> np.arange(n.bit_length() - 1)[None, :]) & 1
    w = bits @ (2.0 ** (np.arange(n.bit_length() - 1) / 4.0))
    order = np.argsort(-w, kind="stable")
    return ReliabilityOrder(n, order, "polarization_weight")


def load_sequence_file(path) -> ReliabilityOrder:
    """Parse a sequence file: header ``n=<length>``, one index per line."""
    with open(path, "r", encoding="utf-8") as f:
        lines = [ln.strip() for ln in f if ln.strip() and not ln.startswith("#")]
    if not lines or not lines[0].startswith("n="):
        raise SequenceFormatError(f"{path}: missing 'n=<length>' header")
    try:
        n = int(lines[0][2:])
        entries = np.array([int(ln) for ln in lines[1:]], dtype=np.int64)
    except ValueError as exc:
        raise SequenceFormatError(f"{path}: non-integer entry") from exc
    if len(entries) != n:
        raise SequenceFormatError(f"{path}: header says n={n}, found {len(entries)} entries")
    if sorted(entries.tolist()) != list(range(n)):
        raise SequenceFormatError(f"{path}: entries are not a permutation of 0..n-1")
    return ReliabilityOrder(n, entries, f"file:{path}")


def load_order(path, n: int) -> ReliabilityOrder:
    """Load a sequence file and restrict it to length n."""
    _check_pow2(n)
    full = load_sequence_file(path)
    if full.n < n:
        raise SequenceFormatError(f"{path}: file covers n={full.n}, need {n}")
    return full.sub_order(n)


def default_sequence_path() -> str:
    override = os.environ.get(SEQUENCE_FILE_ENV)
    if override:
        return override
    return str(resources.files("shapedpolar").joinpath("data", _DEFAULT_SEQUENCE))


def default_order(n: int) -> ReliabilityOrder:
    """The packaged (or overridden) sequence restricted to length n."""
    return load_order(default_sequence_path(), n)


def build_reliability_order(n: int, source: str) -> ReliabilityOrder:
    """Dispatch on a config-style source string.

    Accepted forms: ``default``, ``pw``, ``ga:<design_snr_db>``,
    ``file:<path>``.
    """
    if source == "default":
        return default_order(n)
    if source == "pw":
        return polarization_weight_order(n)
    if source.startswith("ga:"):
        return gaussian_approximation_order(n, float(source[3:]))
    if source.startswith("file:"):
        return load_order(source[5:], n)
    raise ValueError(f"unknown reliability order source {source!r}")
