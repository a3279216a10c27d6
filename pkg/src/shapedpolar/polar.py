"""Binary polar transform, code specifications, frozen streams and CRCs.

The transform uses the natural (non-bit-reversed) index order matching 5G NR
conventions, so loaded reliability sequences align with codeword indices
without any permutation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

LLR_CLIP = 40.0


def _check_power_of_two(n: int) -> None:
    if n < 2 or n & (n - 1):
        raise ValueError(f"length must be a power of two >= 2, got {n}")


def polar_transform(u: np.ndarray) -> np.ndarray:
    """c = u G over GF(2), G the Kronecker power of [[1,0],[1,1]].

    Operates on the trailing axis, so a (B, n) array encodes B blocks at
    once.  The transform is an involution: applying it twice is the identity.
    """
    u = np.asarray(u)
    n = u.shape[-1]
    _check_power_of_two(n)
    c = u.astype(np.uint8).copy()
    half = 1
    while half < n:
        view = c.reshape(c.shape[:-1] + (n // (2 * half), 2 * half))
        view[..., :half] ^= view[..., half:]
        half *= 2
    return c


def frozen_bit_stream(seed: int, count: int) -> np.ndarray:
    """Deterministic pseudo-random frozen bits from a 64-bit xorshift* state.

    One output bit per state update (the top bit of the scrambled state), so
    transmitter and receiver derive identical frozen values from the seed.
    """
    mask = (1 << 64) - 1
    state = (int(seed) & mask) or 0x9E3779B97F4A7C15
    bits = np.empty(count, dtype=np.uint8)
    for i in range(count):
        state ^= (state >> 12)
        state ^= (state << 25) & mask
        state ^= (state >> 27)
        bits[i] = ((state * 0x2545F4914F6CDD1D) & mask) >> 63
    return bits


@dataclass(frozen=True, eq=False)
class PolarCodeSpec:
    """Length-n polar code with information, frozen and shaping index sets."""

    n: int
    info_set: np.ndarray
    frozen_set: np.ndarray
    shaping_set: np.ndarray = field(default_factory=lambda: np.array([], dtype=np.int64))
    frozen_seed: int = 0

    def __post_init__(self):
        _check_power_of_two(self.n)
        i = np.sort(np.asarray(self.info_set, dtype=np.int64))
        f = np.sort(np.asarray(self.frozen_set, dtype=np.int64))
        s = np.sort(np.asarray(self.shaping_set, dtype=np.int64))
        merged = np.concatenate([i, f, s])
        if len(np.unique(merged)) != len(merged):
            raise ValueError("info/frozen/shaping sets must be pairwise disjoint")
        if len(merged) != self.n or merged.min(initial=0) < 0 or merged.max(initial=0) >= self.n:
            raise ValueError("info/frozen/shaping sets must partition 0..n-1")
        object.__setattr__(self, "info_set", i)
        object.__setattr__(self, "frozen_set", f)
        object.__setattr__(self, "shaping_set", s)

    @property
    def k(self) -> int:
        return len(self.info_set)

    @property
    def s(self) -> int:
        return len(self.shaping_set)

    def free_mask(self) -> np.ndarray:
        """True at positions decoded freely (information and shaping)."""
        mask = np.ones(self.n, dtype=bool)
        mask[self.frozen_set] = False
        return mask

    def frozen_values(self) -> np.ndarray:
        """Frozen-bit values aligned with the sorted frozen set."""
        return frozen_bit_stream(self.frozen_seed, len(self.frozen_set))

    @classmethod
    def from_order(cls, order: np.ndarray, k: int, s: int = 0,
                   frozen_seed: int = 0) -> "PolarCodeSpec":
        """Built from a most-to-least-reliable permutation: the s most
        reliable indices carry shaping bits, the next k carry information,
        the rest are frozen."""
        order = np.asarray(order, dtype=np.int64)
        n = len(order)
        if s + k > n:
            raise ValueError(f"k + s = {k + s} exceeds n = {n}")
        return cls(n=n, shaping_set=order[:s], info_set=order[s:s + k],
                   frozen_set=order[s + k:], frozen_seed=frozen_seed)


def encode(info: np.ndarray, spec: PolarCodeSpec,
           shaping_bits: np.ndarray | None = None) -> np.ndarray:
    """Assemble u (info at I, shaping at S, frozen stream at F) and transform.

    `info` maps onto the sorted information set in increasing index order;
    batched inputs of shape (B, k) produce (B, n) codewords.
    """
    info = np.asarray(info, dtype=np.uint8)
    if shaping_bits is None:
        shaping_bits = np.zeros(info.shape[:-1] + (0,), dtype=np.uint8)
    shaping_bits = np.asarray(shaping_bits, dtype=np.uint8)
    if info.shape[-1] != spec.k:
        raise ValueError(f"expected {spec.k} info bits, got {info.shape[-1]}")
    if shaping_bits.shape[-1] != spec.s:
        raise ValueError(f"expected {spec.s} shaping bits, got {shaping_bits.shape[-1]}")
    u = np.zeros(info.shape[:-1] + (spec.n,), dtype=np.uint8)
    u[..., spec.info_set] = info
    u[..., spec.shaping_set] = shaping_bits
    u[..., spec.frozen_set] = spec.frozen_values()
    return polar_transform(u)


# ---------------------------------------------------------------------------
# Cyclic redundancy checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CrcSpec:
    """CRC with the generator x^width + (polynomial bits), MSB-first."""

    width: int
    polynomial: int
    initial: int = 0

    def __post_init__(self):
        if self.width < 1:
            raise ValueError("crc width must be >= 1")
        if self.polynomial >> self.width:
            raise ValueError("polynomial mask must fit in `width` bits")


CRC4 = CrcSpec(width=4, polynomial=0x3)          # x^4 + x + 1
CRC16 = CrcSpec(width=16, polynomial=0x1021)     # CCITT x^16 + x^12 + x^5 + 1


def crc_remainder(bits: np.ndarray, crc: CrcSpec) -> int:
    """MSB-first remainder of bits * x^width modulo the generator."""
    reg = crc.initial
    mask = (1 << crc.width) - 1
    for b in np.asarray(bits, dtype=np.uint8):
        fb = (reg >> (crc.width - 1)) ^ int(b)
        reg = (reg << 1) & mask
        if fb & 1:
            reg ^= crc.polynomial
    return reg


def crc_attach(payload: np.ndarray, crc: CrcSpec) -> np.ndarray:
    """Append the width-bit remainder, MSB first."""
    payload = np.asarray(payload, dtype=np.uint8)
    if payload.size == 0:
        raise ValueError("payload must be non-empty")
    rem = crc_remainder(payload, crc)
    tail = np.array([(rem >> (crc.width - 1 - j)) & 1 for j in range(crc.width)],
                    dtype=np.uint8)
    return np.concatenate([payload, tail])


def crc_check(word: np.ndarray, crc: CrcSpec) -> bool:
    """True when the word (payload + appended CRC) has zero remainder."""
    word = np.asarray(word, dtype=np.uint8)
    if word.size < crc.width:
        raise ValueError("word shorter than the CRC width")
    return crc_remainder(word, crc) == 0


def crc_matrix(payload_len: int, crc: CrcSpec) -> np.ndarray:
    """GF(2) map payload -> CRC bits (valid for initial value 0).

    Row j is the CRC of the j-th unit payload; batched attachment and
    checking reduce to a binary matrix product.
    """
    if crc.initial != 0:
        raise ValueError("linear CRC map requires initial value 0")
    mat = np.empty((payload_len, crc.width), dtype=np.uint8)
    for j in range(payload_len):
        unit = np.zeros(payload_len, dtype=np.uint8)
        unit[j] = 1
        rem = crc_remainder(unit, crc)
        mat[j] = [(rem >> (crc.width - 1 - i)) & 1 for i in range(crc.width)]
    return mat


def crc_check_batch(words: np.ndarray, crc: CrcSpec, mat: np.ndarray) -> np.ndarray:
    """Vectorized crc_check over the trailing axis using a crc_matrix."""
    words = np.asarray(words, dtype=np.uint8)
    payload, tail = words[..., :-crc.width], words[..., -crc.width:]
    rem = (payload.astype(np.uint32) @ mat.astype(np.uint32)) & 1
    return np.all(rem == tail, axis=-1)
