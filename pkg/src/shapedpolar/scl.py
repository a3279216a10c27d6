"""Successive-cancellation list decoding, vectorized over (block, path).

The decoder processes a whole batch of independent blocks in lockstep: every
buffer carries a leading (B, L) axis pair, so the per-node tree updates are
single numpy operations across all blocks and list paths.  Monte-Carlo BLER
simulation at useful speeds depends on this batching; a single block is just
B = 1.

Internals follow the usual depth-first SC schedule with one LLR buffer and
one left-child partial-sum buffer per tree depth.  Path forking never copies
those buffers: each depth keeps a per-path row index that is permuted at
forks (one stacked gather) and applied lazily on the next read.  Copy-on-
write is unnecessary because buffers are only ever rewritten whole.

Check-node updates use the exact pairwise LLR combination (min-sum plus
correction terms) and path metrics accumulate the exact ln(1 + e^-z)
penalty, so a full-size list reproduces maximum-likelihood decisions.  Ties
break toward the lower path index for deterministic runs.

Decoder instances hold mutable scratch state and are single-threaded; use
one instance per worker.
"""

from __future__ import annotations

import numpy as np

from .polar import LLR_CLIP, CrcSpec, PolarCodeSpec, crc_check, polar_transform

_F = np.float32


def _softplus_into(z: np.ndarray, t1: np.ndarray, t2: np.ndarray) -> np.ndarray:
    """ln(1 + e^z) = max(z, 0) + ln(1 + e^-|z|), written into t1."""
    np.abs(z, out=t1)
    np.negative(t1, out=t1)
    np.exp(t1, out=t1)
    np.log1p(t1, out=t1)
    np.maximum(z, 0.0, out=t2)
    t1 += t2
    return t1


def _softplus_neg_into(z: np.ndarray, t1: np.ndarray, t2: np.ndarray) -> np.ndarray:
    """ln(1 + e^-z) without materializing -z, written into t1."""
    np.abs(z, out=t1)
    np.negative(t1, out=t1)
    np.exp(t1, out=t1)
    np.log1p(t1, out=t1)
    np.minimum(z, 0.0, out=t2)
    t1 -= t2
    return t1


class SclDecoder:
    """List decoder over an arbitrary memoryless bit-channel given by LLRs."""

    def __init__(self, n: int, list_size: int, rate0_shortcut: bool = True):
        if n < 2 or n & (n - 1):
            raise ValueError(f"block length must be a power of two >= 2, got {n}")
        if not 1 <= list_size <= 255:
            raise ValueError("list size must be in 1..255")
        self.n = n
        self.L = list_size
        self.stages = n.bit_length() - 1
        self._rate0_enabled = rate0_shortcut
        self._batch = 0

    def _ensure_scratch(self, batch: int) -> None:
        if batch == self._batch:
            return
        n, L, st = self.n, self.L, self.stages
        self._llr = [np.empty((batch, L, n >> d), dtype=_F) for d in range(st + 1)]
        self._sc1 = [np.empty((batch, L, n >> d), dtype=_F) for d in range(st + 1)]
        self._sc2 = [np.empty((batch, L, n >> d), dtype=_F) for d in range(st + 1)]
        self._lbits = [np.empty((batch, L, n >> (d + 1)), dtype=np.uint8) for d in range(st)]
        self._ret = [np.empty((batch, L, n >> d), dtype=np.uint8) for d in range(st + 1)]
        # row indirection: rows 0..st map llr depths, st+1.. map lbits depths
        self._rix = np.empty((2 * st + 1, batch, L), dtype=np.uint8)
        self._decisions = np.empty((n, batch, L), dtype=np.uint8)
        self._parents = np.empty((n, batch, L), dtype=np.uint8)
        self._identity = np.broadcast_to(np.arange(L, dtype=np.uint8), (batch, L))
        self._brow = np.arange(batch)[:, None]
        self._pm2 = np.empty((batch, 2 * L), dtype=np.float64)
        self._t1 = np.empty((batch, L), dtype=_F)
        self._t2 = np.empty((batch, L), dtype=_F)
        self._batch = batch

    # -- fork bookkeeping ---------------------------------------------------

    def _fork(self, parents: np.ndarray) -> None:
        """Permute every depth's row indices after list pruning."""
        self._rix = self._rix[:, self._brow, parents]
        self._llr_dirty = [True] * (self.stages + 1)
        self._lbits_dirty = [True] * self.stages

    def _mark_written(self, row: int) -> None:
        self._rix[row][:] = self._identity

    def _read_llr(self, d: int) -> np.ndarray:
        if not self._llr_dirty[d]:
            return self._llr[d]
        return self._llr[d][self._brow, self._rix[d]]

    def _read_lbits(self, d: int) -> np.ndarray:
        if not self._lbits_dirty[d]:
            return self._lbits[d]
        return self._lbits[d][self._brow, self._rix[self.stages + 1 + d]]

    # -- tree traversal -----------------------------------------------------

    def _node(self, d: int) -> np.ndarray:
        """Decode the active node at depth d, returning its codeword bits."""
        if d == self.stages:
            return self._leaf()
        width = self.n >> d
        if self._rate0_enabled and self._free_cum[self._pos + width] == self._free_cum[self._pos]:
            return self._rate0(d)
        half = self.n >> (d + 1)
        dst, aa, ab = self._llr[d + 1], self._sc1[d + 1], self._sc2[d + 1]

        # check-node update: exact boxplus of the two halves,
        # sign(a) sign(b) min(|a|,|b|) + ln(1+e^-|a+b|) - ln(1+e^-|a-b|)
        src = self._read_llr(d)
        a, b = src[..., :half], src[..., half:]
        np.abs(a, out=aa)
        np.abs(b, out=ab)
        np.minimum(aa, ab, out=dst)
        np.negative(dst, out=dst, where=(a < 0) ^ (b < 0))
        np.add(a, b, out=aa)
        np.abs(aa, out=aa)
        np.negative(aa, out=aa)
        np.exp(aa, out=aa)
        np.log1p(aa, out=aa)
        dst += aa
        np.subtract(a, b, out=ab)
        np.abs(ab, out=ab)
        np.negative(ab, out=ab)
        np.exp(ab, out=ab)
        np.log1p(ab, out=ab)
        dst -= ab
        self._mark_written(d + 1)
        self._llr_dirty[d + 1] = False
        left = self._node(d + 1)

        self._lbits[d][:] = left
        self._mark_written(self.stages + 1 + d)
        self._lbits_dirty[d] = False

        # variable-node update: b + (1 - 2 c) a with the left decisions c
        src = self._read_llr(d)
        a, b = src[..., :half], src[..., half:]
        sgn = self._sc1[d + 1]
        np.copyto(sgn, self._lbits[d], casting="unsafe")
        sgn *= -2.0
        sgn += 1.0
        np.multiply(a, sgn, out=dst)
        dst += b
        self._mark_written(d + 1)
        self._llr_dirty[d + 1] = False
        right = self._node(d + 1)

        left = self._read_lbits(d)
        out = self._ret[d]
        np.bitwise_xor(left, right, out=out[..., :half])
        out[..., half:] = right
        return out

    def _rate0(self, d: int) -> np.ndarray:
        """All-frozen subtree: the exact metric telescopes to penalties of the
        known encoded content against the subtree root LLRs, so the descent
        can be skipped entirely."""
        width = self.n >> d
        pos = self._pos
        self._pos += width
        r0 = self._frozen_rank[pos]
        beta = polar_transform(self._fvals[:, r0:r0 + width])
        lam = self._read_llr(d)
        z = np.where(beta[:, None, :].astype(bool), lam, -lam)
        pen = _softplus_into(z, self._sc1[d], self._sc2[d])
        self._pm += pen.sum(axis=2, dtype=np.float64)
        ret = self._ret[d]
        ret[:] = beta[:, None, :]
        return ret

    def _leaf(self) -> np.ndarray:
        pos = self._pos
        self._pos += 1
        L = self.L
        lam = self._llr[self.stages][:, :, 0]
        if self._free[pos]:
            sp = _softplus_neg_into(lam, self._t1, self._t2)  # penalty for deciding 0
            pm2 = self._pm2
            np.add(self._pm, sp, out=pm2[:, :L])
            np.add(pm2[:, :L], lam, out=pm2[:, L:])        # softplus(x) = softplus(-x) + x
            order = np.argsort(pm2, axis=1, kind="stable")[:, :L]
            bits = (order >= L).astype(np.uint8)
            parents = np.where(order < L, order, order - L).astype(np.uint8)
            self._pm = pm2[self._brow, order]
            self._fork(parents)
            self._decisions[pos] = bits
            self._parents[pos] = parents
        else:
            u = self._fvals[:, self._frozen_rank[pos]]
            bits = np.broadcast_to(u[:, None], (self._batch, L))
            z = np.where(bits.astype(bool), lam, -lam)
            self._pm += _softplus_into(z, self._t1, self._t2)
        ret = self._ret[self.stages]
        ret[:, :, 0] = bits
        return ret

    # -- public entry points --------------------------------------------------

    def decode(self, llrs: np.ndarray, free_mask: np.ndarray,
               frozen_values: np.ndarray):
        """Run list decoding for a batch of blocks.

        Parameters
        ----------
        llrs : (B, n) or (n,) channel LLRs, ln(P(bit=0)/P(bit=1)).
        free_mask : (n,) bool, True where the decoder decides freely
            (information and shaping positions).
        frozen_values : (B, n_frozen) or (n_frozen,) bits pinned at the
            frozen positions, aligned with the sorted frozen indices.

        Returns
        -------
        u : (B, L, n) uint8, the decided input words of every surviving path.
        pm : (B, L) float64 path metrics (lower is better), unsorted;
            ``np.argsort(pm, axis=1, kind="stable")`` ranks candidates with
            the documented tie-break.
        """
        llrs = np.atleast_2d(np.asarray(llrs, dtype=np.float64))
        if llrs.shape[1] != self.n:
            raise ValueError(f"expected {self.n} LLRs per block, got {llrs.shape[1]}")
        free_mask = np.asarray(free_mask, dtype=bool)
        frozen_idx = np.flatnonzero(~free_mask)
        fvals = np.atleast_2d(np.asarray(frozen_values, dtype=np.uint8))
        if fvals.shape[0] == 1 and llrs.shape[0] > 1:
            fvals = np.broadcast_to(fvals, (llrs.shape[0], fvals.shape[1]))
        if fvals.shape[1] != len(frozen_idx):
            raise ValueError(f"expected {len(frozen_idx)} frozen values per block")

        batch = llrs.shape[0]
        self._ensure_scratch(batch)
        self._free = free_mask
        self._fvals = fvals
        rank = np.zeros(self.n, dtype=np.int64)
        rank[frozen_idx] = np.arange(len(frozen_idx))
        self._frozen_rank = rank
        self._free_cum = np.concatenate([[0], np.cumsum(free_mask)])
        self._llr_dirty = [False] * (self.stages + 1)
        self._lbits_dirty = [False] * self.stages
        self._llr[0][:] = np.clip(llrs, -LLR_CLIP, LLR_CLIP)[:, None, :]
        self._mark_written(0)
        self._pm = np.zeros((batch, self.L), dtype=np.float64)
        self._pm[:, 1:] = np.inf
        self._pos = 0
        self._node(0)

        u = np.empty((batch, self.L, self.n), dtype=np.uint8)
        cur = np.array(self._identity)
        for pos in range(self.n - 1, -1, -1):
            if self._free[pos]:
                u[:, :, pos] = self._decisions[pos][self._brow, cur]
                cur = self._parents[pos][self._brow, cur]
            else:
                u[:, :, pos] = fvals[:, self._frozen_rank[pos], None]
        return u, self._pm


def scl_decode(channel_llrs: np.ndarray, spec: PolarCodeSpec, list_size: int,
               crc: CrcSpec | None = None):
    """Decode one block against a code spec.

    Returns (info_bits, shaping_bits, success).  With a CRC the best-metric
    CRC-passing path is selected and success reflects the check; without one
    the best-metric path is returned with success True.
    """
    channel_llrs = np.asarray(channel_llrs, dtype=np.float64)
    if channel_llrs.shape != (spec.n,):
        raise ValueError(f"expected {spec.n} LLRs, got {channel_llrs.shape}")
    dec = SclDecoder(spec.n, list_size)
    u, pm = dec.decode(channel_llrs, spec.free_mask(), spec.frozen_values())
    ranking = np.argsort(pm[0], kind="stable")
    chosen, success = ranking[0], crc is None
    if crc is not None:
        for cand in ranking:
            if crc_check(u[0, cand, spec.info_set], crc):
                chosen, success = cand, True
                break
    return u[0, chosen, spec.info_set], u[0, chosen, spec.shaping_set], success
