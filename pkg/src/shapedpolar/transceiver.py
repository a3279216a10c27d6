"""Complete transmit/receive chains for the four evaluated schemes.

* ``umlc`` / ``smlc``: one polar code per ASK bit-level (multi-level coding),
  multistage demapping with successive per-level decoding, CRC-aided list
  decoding at every level.  The shaped variant additionally runs the shaping
  precoder on the last bit-level so its codewords attain ones-fraction p.
* ``ubicm`` / ``sbicm``: a single length m*n_c polar code spread over all
  bit-levels through a per-codeword pseudo-random interleaver, demapped
  independently.  The shaped variant shapes one designated codeword block
  that is mapped (uninterleaved) onto the bit-level whose bit flags the
  low-energy half of the constellation.

Scheme parameters serialize to a human-readable key=value config format;
the four presets from the evaluation are shipped as package data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from importlib import resources

import numpy as np

from . import rng
from .channel import ChannelBatch
from .modem import (
    GRAY,
    LLR_CLIP,
    NBC,
    SHIFTED_NBC,
    Labeling,
    SymbolPmf,
    inner_indicator_level,
    make_labeling,
    map_symbols,
    sbs_pmf,
    uniform_pmf,
)
from .polar import CrcSpec, PolarCodeSpec, crc_check_batch, crc_matrix, polar_transform
from .rates import rate_mlc
from .reliability import build_reliability_order
from .scl import SclDecoder
from .shaping import ShapingConfig, generate_shaping_bits_batch

UMLC = "umlc"
SMLC = "smlc"
UBICM = "ubicm"
SBICM = "sbicm"
SCHEMES = (UMLC, SMLC, UBICM, SBICM)

_SCHEME_LABELING = {UMLC: NBC, SMLC: SHIFTED_NBC, UBICM: GRAY, SBICM: GRAY}


@dataclass(frozen=True)
class SchemeDesign:
    """Full transceiver parameterization of one scheme."""

    scheme: str
    m: int
    n_c: int
    p: float
    s: int
    k: tuple
    z: tuple
    crc_polys: tuple
    labeling: str = ""
    order_source: str = "default"
    list_size: int = 8
    frozen_seed: int = 0x5EED

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        lab = self.labeling or _SCHEME_LABELING[self.scheme]
        if lab != _SCHEME_LABELING[self.scheme]:
            raise ValueError(f"{self.scheme} requires {_SCHEME_LABELING[self.scheme]} labeling")
        object.__setattr__(self, "labeling", lab)
        object.__setattr__(self, "k", tuple(int(v) for v in self.k))
        object.__setattr__(self, "z", tuple(int(v) for v in self.z))
        object.__setattr__(self, "crc_polys", tuple(int(v) for v in self.crc_polys))
        if self.scheme in (UMLC, UBICM) and (self.p != 0.5 or self.s != 0):
            raise ValueError("uniform schemes require p = 0.5 and s = 0")
        if not 0.5 <= self.p < 1:
            raise ValueError("need 0.5 <= p < 1")
        if len(self.z) != len(self.k) or len(self.crc_polys) != len(self.k):
            raise ValueError("k, z and crc_polys must have matching lengths")
        if self.is_mlc:
            if len(self.k) != self.m:
                raise ValueError(f"MLC needs {self.m} per-level k values")
            for i, (ki, zi) in enumerate(zip(self.k, self.z), start=1):
                extra = self.s if i == self.m else 0
                if ki + zi + extra > self.n_c:
                    raise ValueError(f"level {i} occupies {ki + zi + extra} > n_c")
        else:
            if len(self.k) != 1:
                raise ValueError("BICM needs a single k value")
            if self.k[0] + self.z[0] + self.s > self.m * self.n_c:
                raise ValueError("k + z + s exceeds the codeword length")

    @property
    def is_mlc(self) -> bool:
        return self.scheme in (UMLC, SMLC)

    @property
    def k_total(self) -> int:
        return sum(self.k)

    @property
    def rate(self) -> float:
        return self.k_total / self.n_c

    def pmf(self) -> SymbolPmf:
        return uniform_pmf(self.m) if self.p == 0.5 else sbs_pmf(self.m, self.p)

    def crc_specs(self) -> tuple:
        return tuple(CrcSpec(width=z, polynomial=poly) if z else None
                     for z, poly in zip(self.z, self.crc_polys))

    # -- config serialization ------------------------------------------------

    def to_config_text(self) -> str:
        lines = [
            f"scheme = {self.scheme}",
            f"m = {self.m}",
            f"n_c = {self.n_c}",
            f"labeling = {self.labeling}",
            f"p = {self.p!r}",
            f"s = {self.s}",
            "k = " + ",".join(str(v) for v in self.k),
            "z = " + ",".join(str(v) for v in self.z),
            "crc_poly = " + ",".join(hex(v) for v in self.crc_polys),
            f"order = {self.order_source}",
            f"list_size = {self.list_size}",
            f"frozen_seed = {self.frozen_seed}",
        ]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_config_text(cls, text: str) -> "SchemeDesign":
        fields = {}
        for ln, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line {ln}: expected key = value, got {raw!r}")
            key, val = (part.strip() for part in line.split("=", 1))
            fields[key] = val
        try:
            return cls(
                scheme=fields["scheme"],
                m=int(fields["m"]),
                n_c=int(fields["n_c"]),
                labeling=fields.get("labeling", ""),
                p=float(fields["p"]),
                s=int(fields["s"]),
                k=tuple(int(v) for v in fields["k"].split(",")),
                z=tuple(int(v) for v in fields["z"].split(",")),
                crc_polys=tuple(int(v, 0) for v in fields["crc_poly"].split(",")),
                order_source=fields.get("order", "default"),
                list_size=int(fields.get("list_size", "8")),
                frozen_seed=int(fields.get("frozen_seed", str(0x5EED))),
            )
        except KeyError as exc:
            raise ValueError(f"config missing required key {exc.args[0]!r}") from None

    @classmethod
    def from_config_file(cls, path) -> "SchemeDesign":
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_config_text(f.read())


def preset(name: str) -> SchemeDesign:
    """One of the shipped scheme presets: umlc, smlc, ubicm, sbicm."""
    if name not in SCHEMES:
        raise ValueError(f"unknown preset {name!r}")
    text = resources.files("shapedpolar").joinpath("presets", f"{name}.cfg").read_text()
    return SchemeDesign.from_config_text(text)


class _FastDemapper:
    """Batched exact demapping tuned for the receiver hot loop.

    Keeps one float32 weight tensor ln[P(x) f(y|h,x)] of shape (B, n, 2^m)
    per batch and serves every bit-level from it.  Multistage conditioning
    tracks the integer prefix of decided level bits per position; a
    precomputed table maps each prefix to its consistent symbols, ordered so
    the first half carries bit 0, which turns the posterior ratio into two
    log-sum-exp reductions over a shrinking symbol axis.  Matches the
    reference demappers in :mod:`shapedpolar.modem` to float32 accuracy.
    """

    def __init__(self, labeling: Labeling, pmf: SymbolPmf):
        self.labeling = labeling
        self.pmf = pmf
        self.logp = pmf.log_probs().astype(np.float32)
        m = labeling.m
        self.tables = []
        self.marginal_tables = []
        for level in range(1, m + 1):
            n_prefix = 1 << (level - 1)
            width = 1 << (m - level + 1)
            table = np.empty((n_prefix, width), dtype=np.int64)
            low = labeling.labels & (n_prefix - 1)
            bit = labeling.level_bits(level)
            for v in range(n_prefix):
                zeros = np.flatnonzero((low == v) & (bit == 0))
                ones = np.flatnonzero((low == v) & (bit == 1))
                table[v] = np.concatenate([zeros, ones])
            self.tables.append(table)
            self.marginal_tables.append(np.concatenate(
                [np.flatnonzero(bit == 0), np.flatnonzero(bit == 1)]))

    def start(self, y: np.ndarray, h: np.ndarray, noise_var: float):
        """Begin demapping a batch; returns opaque state."""
        y = np.atleast_2d(np.asarray(y, dtype=np.float32))
        h = np.atleast_2d(np.asarray(h, dtype=np.float32))
        x = self.pmf.symbols.astype(np.float32)
        d = y[..., None] - h[..., None] * x
        d *= d
        d *= np.float32(-0.5 / noise_var)
        d += self.logp
        prefix = np.zeros(y.shape, dtype=np.int64)
        return [d, prefix]

    @staticmethod
    def _lse(w: np.ndarray) -> np.ndarray:
        mx = w.max(axis=-1)
        out = np.log(np.sum(np.exp(w - mx[..., None]), axis=-1))
        out += mx
        return out

    def llr(self, state, level: int) -> np.ndarray:
        """LLR of `level` given the conditioning recorded so far."""
        logw, prefix = state
        sub = np.take_along_axis(logw, self.tables[level - 1][prefix], axis=-1)
        half = sub.shape[-1] // 2
        llr = self._lse(sub[..., :half]) - self._lse(sub[..., half:])
        return np.clip(llr, -LLR_CLIP, LLR_CLIP, out=llr)

    def condition(self, state, level: int, decided: np.ndarray) -> None:
        """Record hard decisions of `level` for subsequent levels."""
        state[1] += decided.astype(np.int64) << (level - 1)

    def independent_llrs(self, y, h, noise_var) -> np.ndarray:
        """All-level independent (BICM) LLRs, shape (m, B, n)."""
        logw, _ = self.start(y, h, noise_var)
        out = []
        for lv in range(1, self.labeling.m + 1):
            sub = logw[..., self.marginal_tables[lv - 1]]
            half = sub.shape[-1] // 2
            llr = self._lse(sub[..., :half]) - self._lse(sub[..., half:])
            out.append(np.clip(llr, -LLR_CLIP, LLR_CLIP, out=llr))
        return np.stack(out)


def _crc_attach_batch(payload: np.ndarray, mat: np.ndarray) -> np.ndarray:
    """Vectorized CRC attachment (initial value 0) via the GF(2) matrix."""
    tail = (payload.astype(np.uint32) @ mat.astype(np.uint32)) & 1
    return np.concatenate([payload, tail.astype(np.uint8)], axis=-1)


def _select_paths(u: np.ndarray, pm: np.ndarray, info_set: np.ndarray,
                  crc: CrcSpec | None, mat: np.ndarray | None):
    """CRC-aided best-path selection for a decoded batch.

    Returns (chosen u (B, n), success (B,)): the best-metric CRC-passing path
    per block, or the best-metric path with success False when none passes.
    """
    batch = u.shape[0]
    ranking = np.argsort(pm, axis=1, kind="stable")
    if crc is None:
        chosen = ranking[:, 0]
        success = np.ones(batch, dtype=bool)
    else:
        words = u[:, :, info_set]
        ok = crc_check_batch(words, crc, mat)
        ok_ranked = np.take_along_axis(ok, ranking, axis=1)
        success = ok_ranked.any(axis=1)
        first = np.argmax(ok_ranked, axis=1)
        pick = np.where(success, first, 0)
        chosen = np.take_along_axis(ranking, pick[:, None], axis=1)[:, 0]
    return np.take_along_axis(u, chosen[:, None, None], axis=1)[:, 0, :], success


class MlcCodec:
    """Multi-level chain: per-level polar codes, multistage reception."""

    def __init__(self, design: SchemeDesign):
        if not design.is_mlc:
            raise ValueError("MlcCodec needs an MLC scheme design")
        self.design = design
        order = build_reliability_order(design.n_c, design.order_source)
        self.labeling = make_labeling(design.labeling, design.m)
        self.pmf = design.pmf()
        self.specs = []
        self.crcs = design.crc_specs()
        self.crc_mats = []
        for i, (ki, zi) in enumerate(zip(design.k, design.z), start=1):
            s = design.s if i == design.m else 0
            payload = ki + (zi if ki else 0)
            self.specs.append(PolarCodeSpec.from_order(
                order.order, k=payload, s=s, frozen_seed=design.frozen_seed + i))
            self.crc_mats.append(crc_matrix(ki, self.crcs[i - 1]) if ki and zi else None)
        self.shaping_cfg = (ShapingConfig(design.p, design.s, design.list_size)
                            if design.s else None)
        self._decoder = SclDecoder(design.n_c, design.list_size)
        self._demapper = _FastDemapper(self.labeling, self.pmf)

    def _chunks(self, info: np.ndarray):
        info = np.atleast_2d(np.asarray(info, dtype=np.uint8))
        if info.shape[1] != self.design.k_total:
            raise ValueError(f"expected {self.design.k_total} info bits")
        offsets = np.cumsum((0,) + self.design.k)
        return [info[:, offsets[i]:offsets[i + 1]] for i in range(self.design.m)]

    def encode_frames(self, info: np.ndarray) -> np.ndarray:
        """Per-level codewords for a batch, shape (m, B, n_c)."""
        chunks = self._chunks(info)
        frames = []
        for i, chunk in enumerate(chunks, start=1):
            spec = self.specs[i - 1]
            payload = chunk
            if chunk.shape[1] and self.design.z[i - 1]:
                payload = _crc_attach_batch(chunk, self.crc_mats[i - 1])
            if i == self.design.m and self.design.s:
                sh = generate_shaping_bits_batch(payload, spec, self.shaping_cfg,
                                                 decoder=self._decoder)
                u = np.zeros((chunk.shape[0], spec.n), dtype=np.uint8)
                u[:, spec.info_set] = payload
                u[:, spec.shaping_set] = sh
                u[:, spec.frozen_set] = spec.frozen_values()
                frames.append(polar_transform(u))
            else:
                u = np.zeros((chunk.shape[0], spec.n), dtype=np.uint8)
                u[:, spec.info_set] = payload
                u[:, spec.frozen_set] = spec.frozen_values()
                frames.append(polar_transform(u))
        return np.stack(frames)

    def encode_batch(self, info: np.ndarray) -> np.ndarray:
        """Map a batch of payloads to ASK symbols, shape (B, n_c)."""
        return map_symbols(self.encode_frames(info), self.labeling)

    def decode_batch(self, y: np.ndarray, h: np.ndarray, noise_var: float):
        """Multistage decode: returns (info (B, k_total), success (B,)).

        Levels decode in order 1..m; each level's demapping conditions on the
        hard re-encoded codewords of the levels before it.  Level m treats
        shaping positions as information and discards them.
        """
        y = np.atleast_2d(y)
        h = np.atleast_2d(h)
        batch = y.shape[0]
        state = self._demapper.start(y, h, noise_var)
        info_parts = []
        success = np.ones(batch, dtype=bool)
        for i in range(1, self.design.m + 1):
            spec = self.specs[i - 1]
            llr = self._demapper.llr(state, i)
            if spec.k == 0:
                frame = polar_transform(self._frame_without_payload(spec))
                self._demapper.condition(state, i, np.broadcast_to(frame, llr.shape))
                info_parts.append(np.zeros((batch, 0), dtype=np.uint8))
                continue
            u_all, pm = self._decoder.decode(llr, spec.free_mask(), spec.frozen_values())
            crc = self.crcs[i - 1] if self.design.z[i - 1] else None
            u_hat, ok = _select_paths(u_all, pm, spec.info_set, crc, self.crc_mats[i - 1])
            success &= ok
            self._demapper.condition(state, i, polar_transform(u_hat))
            ki = self.design.k[i - 1]
            info_parts.append(u_hat[:, spec.info_set][:, :ki])
        return np.concatenate(info_parts, axis=1), success

    def _frame_without_payload(self, spec: PolarCodeSpec) -> np.ndarray:
        u = np.zeros(spec.n, dtype=np.uint8)
        u[spec.frozen_set] = spec.frozen_values()
        return u


class BicmCodec:
    """Single-codeword chain: interleaved bit-levels, independent demapping."""

    def __init__(self, design: SchemeDesign):
        if design.is_mlc:
            raise ValueError("BicmCodec needs a BICM scheme design")
        self.design = design
        self.n = design.m * design.n_c
        order = build_reliability_order(self.n, design.order_source)
        self.labeling = make_labeling(design.labeling, design.m)
        self.pmf = design.pmf()
        self.spec = PolarCodeSpec.from_order(
            order.order, k=design.k[0] + design.z[0], s=design.s,
            frozen_seed=design.frozen_seed)
        self.crc = design.crc_specs()[0]
        self.crc_mat = crc_matrix(design.k[0], self.crc)
        self._decoder = SclDecoder(self.n, design.list_size)
        if design.s:
            self.shaped_level = inner_indicator_level(self.labeling)
            if self.shaped_level is None:
                raise ValueError("labeling exposes no low-energy indicator level")
            lo = (self.shaped_level - 1) * design.n_c
            self.shaped_block = np.arange(lo, lo + design.n_c)
            mask = np.zeros(self.n, dtype=bool)
            mask[self.shaped_block] = True
            self.shaping_mask = mask
            self.shaping_cfg = ShapingConfig(design.p, design.s, design.list_size)
        else:
            self.shaped_level = None
            self.shaping_mask = None
            self.shaping_cfg = None
        self._demapper = _FastDemapper(self.labeling, self.pmf)

    def interleavers(self, block_seeds) -> np.ndarray:
        """Per-codeword permutations, shape (B, n).

        ``perm[b, j]`` is the codeword position transmitted in slot j, where
        slots split into m consecutive bit-level frames.  Uniform schemes
        permute everything; the shaped scheme maps its designated block to
        the shaped level unpermuted and scrambles only the remaining slots.
        """
        block_seeds = np.atleast_1d(np.asarray(block_seeds, dtype=np.int64))
        perms = np.empty((len(block_seeds), self.n), dtype=np.int64)
        for b, seed in enumerate(block_seeds):
            gen = rng.stream(self.design.frozen_seed, "interleaver", int(seed))
            if self.shaping_mask is None:
                perms[b] = gen.permutation(self.n)
            else:
                free = np.flatnonzero(~self.shaping_mask)
                slots = np.empty(self.n, dtype=np.int64)
                slots[self.shaped_block] = self.shaped_block
                rest = np.setdiff1d(np.arange(self.n), self.shaped_block)
                slots[rest] = free[gen.permutation(len(free))]
                perms[b] = slots
        return perms

    def encode_batch(self, info: np.ndarray, block_seeds) -> np.ndarray:
        """Encode payloads to ASK symbols, shape (B, n_c)."""
        info = np.atleast_2d(np.asarray(info, dtype=np.uint8))
        if info.shape[1] != self.design.k[0]:
            raise ValueError(f"expected {self.design.k[0]} info bits")
        payload = _crc_attach_batch(info, self.crc_mat)
        batch = info.shape[0]
        u = np.zeros((batch, self.n), dtype=np.uint8)
        u[:, self.spec.info_set] = payload
        u[:, self.spec.frozen_set] = self.spec.frozen_values()
        if self.design.s:
            sh = generate_shaping_bits_batch(payload, self.spec, self.shaping_cfg,
                                             mask=self.shaping_mask,
                                             decoder=self._decoder)
            u[:, self.spec.shaping_set] = sh
        c = polar_transform(u)
        perms = self.interleavers(block_seeds)
        sent = np.take_along_axis(c, perms, axis=1)
        frames = sent.reshape(batch, self.design.m, self.design.n_c)
        return map_symbols(np.moveaxis(frames, 1, 0), self.labeling)

    def decode_batch(self, y: np.ndarray, h: np.ndarray, noise_var: float,
                     block_seeds):
        """Independent demapping, deinterleave, one CRC-aided list decode."""
        y = np.atleast_2d(y)
        h = np.atleast_2d(h)
        batch = y.shape[0]
        llr_levels = self._demapper.independent_llrs(y, h, noise_var)
        slot_llrs = np.moveaxis(llr_levels, 0, 1).reshape(batch, self.n)
        perms = self.interleavers(block_seeds)
        llrs = np.empty_like(slot_llrs)
        np.put_along_axis(llrs, perms, slot_llrs, axis=1)
        u_all, pm = self._decoder.decode(llrs, self.spec.free_mask(),
                                         self.spec.frozen_values())
        u_hat, success = _select_paths(u_all, pm, self.spec.info_set, self.crc,
                                       self.crc_mat)
        info = u_hat[:, self.spec.info_set][:, :self.design.k[0]]
        return info, success


def make_codec(design: SchemeDesign):
    return MlcCodec(design) if design.is_mlc else BicmCodec(design)


# ---------------------------------------------------------------------------
# Single-block convenience API
# ---------------------------------------------------------------------------


def mlc_encode(info: np.ndarray, design: SchemeDesign) -> np.ndarray:
    return MlcCodec(design).encode_batch(info)[0]


def mlc_decode(batch: ChannelBatch, design: SchemeDesign):
    info, ok = MlcCodec(design).decode_batch(batch.y, batch.h, batch.noise_var)
    return info[0], bool(ok[0])


def bicm_encode(info: np.ndarray, design: SchemeDesign, block_seed: int = 0) -> np.ndarray:
    return BicmCodec(design).encode_batch(info, [block_seed])[0]


def bicm_decode(batch: ChannelBatch, design: SchemeDesign, block_seed: int = 0):
    info, ok = BicmCodec(design).decode_batch(batch.y, batch.h, batch.noise_var,
                                              [block_seed])
    return info[0], bool(ok[0])


# ---------------------------------------------------------------------------
# Finite-length rate allocation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DesignTargets:
    """Operating SNR, block error target and the per-level error budget."""

    snr_db: float
    p_e: float
    m: int

    def __post_init__(self):
        if not 0 < self.p_e < 1:
            raise ValueError("p_e must lie in (0, 1)")

    @property
    def p_i(self) -> float:
        """Per-level budget 1 - (1 - P_e)^(1/m)."""
        return 1.0 - (1.0 - self.p_e) ** (1.0 / self.m)


@dataclass(frozen=True)
class LevelDiagnostic:
    level: int
    k: int
    bler: float
    blocks: int
    feasible: bool


class _LevelBlerEvaluator:
    """Genie-aided level BLER at the design SNR for candidate payload sizes.

    Prior levels are error-free (true bits feed the demapper); later levels
    carry random bits, with the shaped level drawn at its target marginal.
    The same seed drives every candidate so the search sees common random
    numbers.
    """

    def __init__(self, design: SchemeDesign, level: int, snr_db: float,
                 order, seed: int, batch: int = 2048):
        self.design = design
        self.level = level
        self.snr = 10.0 ** (snr_db / 10.0)
        self.order = order
        self.seed = seed
        self.batch = batch
        self.labeling = make_labeling(design.labeling, design.m)
        self.pmf = design.pmf()
        self.noise_var = self.pmf.second_moment() / self.snr
        self.decoder = SclDecoder(design.n_c, design.list_size)
        self.crc = design.crc_specs()[level - 1]
        self.z = design.z[level - 1]
        self.demapper = _FastDemapper(self.labeling, self.pmf)

    def _other_frames(self, gen, batch):
        """Bit-level frames for all levels except the one under test."""
        m, n_c = self.design.m, self.design.n_c
        frames = np.empty((m, batch, n_c), dtype=np.uint8)
        for j in range(1, m + 1):
            if j == self.level:
                continue
            prob = self.design.p if (j == m and self.design.s) else 0.5
            frames[j - 1] = (gen.random((batch, n_c)) < prob).astype(np.uint8)
        return frames

    def trial(self, k: int, blocks: int, max_errors: int | None = None):
        """Error count for payload size k; stops once infeasibility is certain.

        `max_errors` is the largest error count still meeting the budget:
        the tally can only grow with more blocks, so crossing it decides the
        candidate immediately with the same outcome as the full run.
        Returns (errors, blocks simulated).
        """
        if k == 0:
            return 0, blocks
        design = self.design
        s = design.s if self.level == design.m else 0
        payload = k + self.z
        spec = PolarCodeSpec.from_order(self.order.order, k=payload, s=s,
                                        frozen_seed=design.frozen_seed + self.level)
        mat = crc_matrix(k, self.crc) if self.z else None
        shaping_cfg = (ShapingConfig(design.p, s, design.list_size) if s else None)
        errors = 0
        done = 0
        while done < blocks:
            b = min(self.batch, blocks - done)
            gen = rng.stream(self.seed, "level-design", self.level, done)
            info = (gen.random((b, k)) < 0.5).astype(np.uint8)
            word = _crc_attach_batch(info, mat) if self.z else info
            frames = self._other_frames(gen, b)
            u = np.zeros((b, spec.n), dtype=np.uint8)
            u[:, spec.info_set] = word
            u[:, spec.frozen_set] = spec.frozen_values()
            if s:
                u[:, spec.shaping_set] = generate_shaping_bits_batch(
                    word, spec, shaping_cfg, decoder=self.decoder)
            frames[self.level - 1] = polar_transform(u)
            x = map_symbols(frames, self.labeling).astype(np.float64)
            h = rng.rayleigh_unit(gen, x.size).reshape(x.shape)
            w = rng.normal(gen, x.size).reshape(x.shape)
            y = h * x + math.sqrt(self.noise_var) * w
            state = self.demapper.start(y, h, self.noise_var)
            for j in range(1, self.level):
                self.demapper.condition(state, j, frames[j - 1])
            llr = self.demapper.llr(state, self.level)
            u_all, pm = self.decoder.decode(llr, spec.free_mask(), spec.frozen_values())
            u_hat, ok = _select_paths(u_all, pm, spec.info_set,
                                      self.crc if self.z else None, mat)
            wrong = (u_hat[:, spec.info_set][:, :k] != info).any(axis=1)
            errors += int(np.sum(wrong | ~ok))
            done += b
            if max_errors is not None and errors > max_errors:
                break
        return errors, done


def design_rate_allocation(targets: DesignTargets, design: SchemeDesign,
                           blocks: int = 20_000, seed: int = 0,
                           search_halfwidth: int = 64):
    """Find the largest per-level payload sizes meeting the error budget.

    Per level, Monte-Carlo evaluates the genie-aided BLER and bisects for the
    maximum k with BLER <= P_i, seeded at floor(I_i n_c) from the multistage
    rate estimate.  A candidate is feasible when its error count over the
    block budget stays within floor(P_i * blocks).  Returns (k tuple,
    diagnostics list); an infeasible level reports k = 0.
    """
    if not design.is_mlc:
        raise ValueError("rate allocation applies to the MLC schemes")
    order = build_reliability_order(design.n_c, design.order_source)
    snr = 10.0 ** (targets.snr_db / 10.0)
    rep = rate_mlc(design.pmf(), make_labeling(design.labeling, design.m), snr,
                   samples=100_000, seed=seed)
    max_errors = int(targets.p_i * blocks)
    ks = []
    diagnostics = []
    for level in range(1, design.m + 1):
        ev = _LevelBlerEvaluator(design, level, targets.snr_db, order, seed)
        seed_k = int(rep.levels[level - 1] * design.n_c)
        cap = design.n_c - design.z[level - 1] - (design.s if level == design.m else 0)
        lo = min(max(seed_k - search_halfwidth, 0), cap)
        hi = min(seed_k + search_halfwidth, cap)

        def feasible(k):
            errors, done = ev.trial(k, blocks, max_errors)
            ok = errors <= max_errors
            diagnostics.append(LevelDiagnostic(level, k, errors / done, done, ok))
            return ok

        # establish a feasible lower bracket (k = 0 always qualifies)
        while not feasible(lo) and lo > 0:
            lo = max(lo - search_halfwidth, 0)
        # grow the upper bracket until an infeasible candidate or the cap
        hi = max(hi, min(lo + search_halfwidth, cap))
        at_cap = False
        while lo < hi and feasible(hi):
            lo = hi
            if hi >= cap:
                at_cap = True
                break
            hi = min(hi + search_halfwidth, cap)
        if at_cap or lo >= hi:
            ks.append(lo)
            continue
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if feasible(mid):
                lo = mid
            else:
                hi = mid
        ks.append(lo)
    return tuple(ks), diagnostics


def with_allocation(design: SchemeDesign, k: tuple) -> SchemeDesign:
    """The same design with a replaced per-level allocation."""
    return replace(design, k=tuple(int(v) for v in k))
