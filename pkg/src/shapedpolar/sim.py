"""Experiment orchestration: BLER sweeps, rate sweeps, calibration, design.

Every experiment is reproducible from (config, root seed): per-batch random
streams are keyed by the scheme, the SNR value and the batch index, so
results do not depend on worker count or scheduling.  Block-error stopping
consumes batches in submission order and cuts the tally at the first batch
prefix reaching the error target, which keeps parallel runs identical to
serial ones.

Outputs are CSV files (one row per point) plus a JSON metadata sidecar
carrying the config hash, seed and wall-clock time.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import rng
from .modem import GRAY, NBC, SHIFTED_NBC, make_labeling, mb_pmf, sbs_pmf, uniform_pmf
from .rates import optimize_mb, optimize_p_sbs, rate_bicm, rate_mlc
from .reliability import build_reliability_order
from .shaping import calibrate_s
from .transceiver import (
    DesignTargets,
    SchemeDesign,
    design_rate_allocation,
    make_codec,
    preset,
    with_allocation,
)

WILSON_Z = 1.959963984540054  # two-sided 95%


class DesignInfeasibleError(RuntimeError):
    """Raised when no payload allocation meets the error target."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of one experiment run."""

    command: str                          # bler | rates | calibrate | design
    scheme: SchemeDesign | None = None
    snr_db_grid: tuple = ()
    blocks: int = 200_000
    target_errors: int = 200
    bler_floor: float = 1e-5
    samples: int = 200_000
    trials: int = 2_000
    p_grid: tuple = ()
    curves: tuple = ("mlc:uniform", "mlc:mb", "mlc:sbs", "bicm:uniform")
    m: int = 4
    n_c: int = 256
    list_size: int = 8
    p_e: float = 1e-3
    target_k: int | None = None
    seed: int = 0
    workers: int = 1
    zero_noise: bool = False
    out: str | None = None

    def __post_init__(self):
        if self.command not in ("bler", "rates", "calibrate", "design"):
            raise ValueError(f"unknown command {self.command!r}")
        grid = tuple(float(v) for v in self.snr_db_grid)
        if grid and any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("SNR grid must be strictly increasing")
        object.__setattr__(self, "snr_db_grid", grid)
        object.__setattr__(self, "p_grid", tuple(float(v) for v in self.p_grid))
        for name in ("blocks", "target_errors", "samples", "trials", "workers"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    def config_hash(self) -> str:
        payload = {k: repr(v) for k, v in sorted(self.__dict__.items()) if k != "out"}
        digest = hashlib.sha256(json.dumps(payload, sort_keys=True).encode())
        return digest.hexdigest()[:12]


@dataclass
class ResultRecord:
    """One experiment outcome with its provenance."""

    experiment: str
    config_hash: str
    seed: int
    wall_clock: float
    rows: list
    header: tuple
    meta: dict = field(default_factory=dict)

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            f.write(",".join(self.header) + "\n")
            for row in self.rows:
                f.write(",".join(_fmt(row[col]) for col in self.header) + "\n")

    def write_meta(self, path) -> None:
        payload = {
            "experiment": self.experiment,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "wall_clock_s": round(self.wall_clock, 3),
            **self.meta,
        }
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2, sort_keys=True)
            f.write("\n")


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    return str(v)


def wilson_interval(errors: int, trials: int, z: float = WILSON_Z):
    """95% Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    phat = errors / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return max(center - half, 0.0), min(center + half, 1.0)


# ---------------------------------------------------------------------------
# BLER engine
# ---------------------------------------------------------------------------

_WORKER_CODEC = None
_WORKER_DESIGN = None


def _init_worker(design: SchemeDesign):
    global _WORKER_CODEC, _WORKER_DESIGN
    _WORKER_DESIGN = design
    _WORKER_CODEC = make_codec(design)


def _default_batch(design: SchemeDesign) -> int:
    return 1024 if design.is_mlc else 512


def _bler_batch(args):
    """Simulate one batch of blocks; returns (batch_index, errors, blocks)."""
    (design, snr_db, seed, batch_index, batch_size, zero_noise) = args
    global _WORKER_CODEC
    codec = _WORKER_CODEC if _WORKER_DESIGN == design else make_codec(design)
    snr_key = int(round(snr_db * 1000))
    gen = rng.stream(seed, "bler", design.scheme, snr_key, batch_index)
    info = (gen.random((batch_size, design.k_total)) < 0.5).astype(np.uint8)
    block_ids = batch_index * batch_size + np.arange(batch_size)
    if design.is_mlc:
        x = codec.encode_batch(info).astype(np.float64)
    else:
        x = codec.encode_batch(info, block_ids).astype(np.float64)
    var = codec.pmf.second_moment() / 10.0 ** (snr_db / 10.0)
    h = rng.rayleigh_unit(gen, x.size).reshape(x.shape)
    y = h * x
    if not zero_noise:
        y = y + math.sqrt(var) * rng.normal(gen, x.size).reshape(x.shape)
    if design.is_mlc:
        dec, ok = codec.decode_batch(y, h, var)
    else:
        dec, ok = codec.decode_batch(y, h, var, block_ids)
    errors = int(np.sum((dec != info).any(axis=1) | ~ok))
    return batch_index, errors, batch_size


def simulate_bler_point(design: SchemeDesign, snr_db: float, blocks: int,
                        target_errors: int, seed: int, workers: int = 1,
                        zero_noise: bool = False, batch_size: int | None = None) -> dict:
    """BLER at one SNR: runs until the block budget or the error target.

    The error tally is cut at the first batch prefix reaching the target, so
    the result is identical for any worker count.
    """
    batch_size = batch_size or _default_batch(design)
    n_batches = max(1, math.ceil(blocks / batch_size))
    sizes = [min(batch_size, blocks - i * batch_size) for i in range(n_batches)]
    jobs = [(design, snr_db, seed, i, sizes[i], zero_noise) for i in range(n_batches)]

    done_errors = 0
    done_blocks = 0
    if workers <= 1:
        _init_worker(design)
        for job in jobs:
            _, err, blk = _bler_batch(job)
            done_errors += err
            done_blocks += blk
            if done_errors >= target_errors:
                break
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker,
                                 initargs=(design,)) as pool:
            for _, err, blk in pool.map(_bler_batch, jobs):
                done_errors += err
                done_blocks += blk
                if done_errors >= target_errors:
                    pool.shutdown(wait=False, cancel_futures=True)
                    break
    lo, hi = wilson_interval(done_errors, done_blocks)
    return {
        "scheme": design.scheme,
        "snr_db": snr_db,
        "blocks": done_blocks,
        "errors": done_errors,
        "bler": done_errors / done_blocks,
        "wilson_lo": lo,
        "wilson_hi": hi,
    }


BLER_HEADER = ("scheme", "snr_db", "blocks", "errors", "bler", "wilson_lo", "wilson_hi")


def run_bler(cfg: ExperimentConfig) -> ResultRecord:
    """BLER sweep over the SNR grid with early stop below the floor."""
    if cfg.scheme is None:
        raise ValueError("bler needs a scheme design")
    if not cfg.snr_db_grid:
        raise ValueError("bler needs an SNR grid")
    t0 = time.perf_counter()
    rows = []
    stopped_early = False
    for snr_db in cfg.snr_db_grid:
        row = simulate_bler_point(cfg.scheme, snr_db, cfg.blocks, cfg.target_errors,
                                  cfg.seed, cfg.workers, cfg.zero_noise)
        rows.append(row)
        if row["bler"] < cfg.bler_floor:
            stopped_early = True
            break
    rec = ResultRecord("bler", cfg.config_hash(), cfg.seed,
                       time.perf_counter() - t0, rows, BLER_HEADER,
                       meta={"scheme": cfg.scheme.scheme,
                             "stopped_below_floor": stopped_early,
                             "grid": list(cfg.snr_db_grid)})
    _emit(rec, cfg.out)
    return rec


def operating_snr_db(rows, target: float = 1e-3):
    """Smallest simulated grid SNR whose BLER is at or below the target."""
    for row in rows:
        if row["bler"] <= target:
            return row["snr_db"]
    return None


def interpolate_crossing_db(rows, target: float):
    """SNR at which log10(BLER) crosses log10(target), linear interpolation."""
    pts = [(r["snr_db"], r["bler"]) for r in rows if r["errors"] > 0]
    for (s0, b0), (s1, b1) in zip(pts, pts[1:]):
        if b0 > target >= b1:
            f = (math.log10(target) - math.log10(b0)) / (math.log10(b1) - math.log10(b0))
            return s0 + f * (s1 - s0)
    for row in rows:
        if row["bler"] <= target:
            return row["snr_db"]
    return None


# ---------------------------------------------------------------------------
# Rate sweeps
# ---------------------------------------------------------------------------

RATES_HEADER_BASE = ("curve", "snr_db", "rate", "rate_stderr", "param")


def _rates_header(m: int) -> tuple:
    return RATES_HEADER_BASE + tuple(f"I_{i}" for i in range(1, m + 1))


def _eval_curve(curve: str, m: int, snr: float, samples: int, seed: int):
    """One Fig.-1-style curve point: returns (report, shaping parameter)."""
    est, dist = curve.split(":")
    if est == "mlc":
        labeling = make_labeling(NBC if dist != "sbs" else SHIFTED_NBC, m)
        fn = rate_mlc
    elif est == "bicm":
        labeling = make_labeling(GRAY, m)
        fn = rate_bicm
    else:
        raise ValueError(f"unknown estimator {est!r} in curve {curve!r}")
    if dist == "uniform":
        return fn(uniform_pmf(m), labeling, snr, samples, seed), 0.0
    if dist == "mb":
        nu, rep = optimize_mb(m, snr, est, labeling, samples, seed)
        return rep, nu
    if dist == "sbs":
        p, rep = optimize_p_sbs(m, snr, est, samples, seed, labeling=labeling)
        return rep, p
    raise ValueError(f"unknown distribution {dist!r} in curve {curve!r}")


def run_rates(cfg: ExperimentConfig) -> ResultRecord:
    """Achievable-rate curves over the SNR grid for the configured variants."""
    if not cfg.snr_db_grid:
        raise ValueError("rates needs an SNR grid")
    t0 = time.perf_counter()
    rows = []
    for curve in cfg.curves:
        for snr_db in cfg.snr_db_grid:
            rep, param = _eval_curve(curve, cfg.m, 10.0 ** (snr_db / 10.0),
                                     cfg.samples, cfg.seed)
            row = {"curve": curve, "snr_db": snr_db, "rate": rep.rate,
                   "rate_stderr": rep.rate_stderr, "param": param}
            for i, v in enumerate(rep.levels, start=1):
                row[f"I_{i}"] = float(v)
            rows.append(row)
    rec = ResultRecord("rates", cfg.config_hash(), cfg.seed,
                       time.perf_counter() - t0, rows, _rates_header(cfg.m),
                       meta={"curves": list(cfg.curves), "samples": cfg.samples})
    _emit(rec, cfg.out)
    return rec


# ---------------------------------------------------------------------------
# Shaping calibration
# ---------------------------------------------------------------------------

CALIBRATE_HEADER = ("p", "s", "ones_fraction", "stderr", "s_star")


def run_calibrate(cfg: ExperimentConfig) -> ResultRecord:
    """Shaping-bit calibration across a grid of target probabilities."""
    if not cfg.p_grid:
        raise ValueError("calibrate needs a p grid")
    t0 = time.perf_counter()
    order = build_reliability_order(cfg.n_c, "default")
    rows = []
    for p in cfg.p_grid:
        s_star, curve = calibrate_s(cfg.n_c, p, order, cfg.list_size, cfg.trials,
                                    cfg.seed)
        for s, frac, se in curve:
            rows.append({"p": p, "s": s, "ones_fraction": frac, "stderr": se,
                         "s_star": s_star})
    rec = ResultRecord("calibrate", cfg.config_hash(), cfg.seed,
                       time.perf_counter() - t0, rows, CALIBRATE_HEADER,
                       meta={"n_c": cfg.n_c, "list_size": cfg.list_size,
                             "trials": cfg.trials})
    _emit(rec, cfg.out)
    return rec


# ---------------------------------------------------------------------------
# Scheme design
# ---------------------------------------------------------------------------


def run_design(cfg: ExperimentConfig) -> ResultRecord:
    """Design an MLC scheme at an operating SNR: p*, then s, then k_i.

    Pipeline: numerically maximize the multistage rate over p, calibrate the
    shaping-bit count for that p, then search the largest per-level payloads
    meeting the per-level error budget.  When `target_k` is set the
    allocation is rescaled to that total (the evaluated schemes fix the
    overall rate); a level ending at k = 0 marks the design infeasible.
    """
    if len(cfg.snr_db_grid) != 1:
        raise ValueError("design needs exactly one operating SNR")
    snr_db = cfg.snr_db_grid[0]
    base = cfg.scheme if cfg.scheme is not None else preset("smlc")
    t0 = time.perf_counter()

    if base.scheme == "smlc":
        p_star, _ = optimize_p_sbs(base.m, 10.0 ** (snr_db / 10.0), "mlc",
                                   samples=cfg.samples, seed=cfg.seed)
        p_star = round(p_star, 2)
        order = build_reliability_order(base.n_c, base.order_source)
        s_star, _ = calibrate_s(base.n_c, p_star, order, base.list_size,
                                max(cfg.trials, 1000), cfg.seed)
        sized = replace(base, p=p_star, s=s_star)
    else:
        sized = base

    targets = DesignTargets(snr_db=snr_db, p_e=cfg.p_e, m=sized.m)
    ks, diagnostics = design_rate_allocation(targets, sized,
                                             blocks=min(cfg.blocks, 20_000),
                                             seed=cfg.seed)
    raw_ks = ks
    if any(k == 0 for k in ks):
        detail = [f"level {d.level}: bler {d.bler:.2e} at k={d.k}" for d in diagnostics]
        raise DesignInfeasibleError(
            f"no feasible allocation at {snr_db} dB, P_e={cfg.p_e}: " + "; ".join(detail))
    if cfg.target_k is not None:
        ks = _rescale_allocation(ks, cfg.target_k)
    final = with_allocation(sized, ks)

    rows = [{"level": i + 1, "k": ks[i], "k_raw": raw_ks[i], "z": final.z[i]}
            for i in range(final.m)]
    rec = ResultRecord("design", cfg.config_hash(), cfg.seed,
                       time.perf_counter() - t0, rows,
                       ("level", "k", "k_raw", "z"),
                       meta={"snr_db": snr_db, "p_e": cfg.p_e, "p": final.p,
                             "s": final.s, "k_total": final.k_total,
                             "p_i": targets.p_i,
                             "diagnostics": [d.__dict__ for d in diagnostics],
                             "config_text": final.to_config_text()})
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8") as f:
            f.write(final.to_config_text())
        rec.write_meta(_sidecar_path(cfg.out))
    return rec


def _rescale_allocation(ks, target: int):
    """Deterministically adjust the allocation so it sums to `target`.

    Scales proportionally, then walks the residual one bit at a time across
    levels in decreasing-size order.
    """
    total = sum(ks)
    if total == 0:
        raise DesignInfeasibleError("cannot rescale an all-zero allocation")
    scaled = [int(round(k * target / total)) for k in ks]
    order = sorted(range(len(ks)), key=lambda i: -ks[i])
    i = 0
    while sum(scaled) != target:
        j = order[i % len(order)]
        scaled[j] += 1 if sum(scaled) < target else -1
        scaled[j] = max(scaled[j], 0)
        i += 1
    return tuple(scaled)


# ---------------------------------------------------------------------------
# Output plumbing
# ---------------------------------------------------------------------------


def _sidecar_path(out_path: str) -> str:
    root, _ = os.path.splitext(out_path)
    return root + ".meta.json"


def _emit(rec: ResultRecord, out: str | None) -> None:
    if out:
        rec.write_csv(out)
        rec.write_meta(_sidecar_path(out))


def dispatch(cfg: ExperimentConfig) -> ResultRecord:
    return {"bler": run_bler, "rates": run_rates,
            "calibrate": run_calibrate, "design": run_design}[cfg.command](cfg)
