"""Monte-Carlo achievable-rate estimators and shaping-parameter optimizers.

Estimates the multistage (genie-aided per-level) and independent-demapping
rates of coded modulation over the real Rayleigh fading channel, plus scalar
optimizers for the Maxwell-Boltzmann exponent and the two-ring shaping
probability.  All estimators draw (symbol, fading, noise) triples through
counter-based streams; running two estimators with the same seed couples
their samples (common random numbers), which stabilizes optimizer searches
and paired comparisons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .channel import AWGN, RAYLEIGH
from .modem import (
    GRAY,
    SHIFTED_NBC,
    Labeling,
    SymbolPmf,
    make_labeling,
    mb_pmf,
    sbs_pmf,
    uniform_pmf,
)

_LN2 = math.log(2.0)
DEFAULT_SAMPLES = 200_000


@dataclass(frozen=True, eq=False)
class RateReport:
    """Per-level capacities and their sum, with Monte-Carlo standard errors."""

    levels: np.ndarray
    level_stderr: np.ndarray
    rate: float
    rate_stderr: float
    samples: int
    clamped: bool = False
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.levels) != len(self.level_stderr):
            raise ValueError("levels and stderr lengths differ")


def _draw(pmf: SymbolPmf, snr: float, samples: int, seed: int, fading: str):
    """Common sampling of (symbol index, y, h, sigma^2)."""
    gen = rng.stream(seed, "rates")
    idx = pmf.sample_indices(gen, samples)
    x = pmf.symbols[idx].astype(np.float64)
    if fading == RAYLEIGH:
        h = rng.rayleigh_unit(gen, samples)
    elif fading == AWGN:
        h = np.ones(samples)
    else:
        raise ValueError(f"unknown fading kind {fading!r}")
    var = pmf.second_moment() / snr
    y = h * x + math.sqrt(var) * rng.normal(gen, samples)
    return idx, y, h, var


def _log_weights(y, h, var, pmf):
    d = y[:, None] - h[:, None] * pmf.symbols.astype(np.float64)
    return pmf.log_probs() - d * d / (2.0 * var)


def _lse(logw: np.ndarray, mask: np.ndarray) -> np.ndarray:
    wm = np.where(mask, logw, -np.inf)
    mx = np.max(wm, axis=-1)
    safe = np.where(np.isfinite(mx), mx, 0.0)
    return safe + np.log(np.sum(np.exp(wm - safe[..., None]), axis=-1))


def _h2(q: np.ndarray) -> np.ndarray:
    q = np.clip(q, 0.0, 1.0)
    out = np.zeros_like(q)
    inner = (q > 0) & (q < 1)
    qi = q[inner]
    out[inner] = -(qi * np.log2(qi) + (1 - qi) * np.log2(1 - qi))
    return out


def _conditional_level_entropy(pmf: SymbolPmf, labeling: Labeling, level: int) -> float:
    """H(C_level | C_1..C_{level-1}) in bits, exact from the pmf."""
    prefix = labeling.labels & ((1 << (level - 1)) - 1)
    bit = labeling.level_bits(level)
    tot = np.bincount(prefix, weights=pmf.probs, minlength=1 << (level - 1))
    one = np.bincount(prefix, weights=pmf.probs * bit, minlength=1 << (level - 1))
    nz = tot > 0
    return float(np.sum(tot[nz] * _h2(one[nz] / tot[nz])))


def rate_mlc(pmf: SymbolPmf, labeling: Labeling, snr: float,
             samples: int = DEFAULT_SAMPLES, seed: int = 0,
             fading: str = RAYLEIGH) -> RateReport:
    """Multistage sum rate: per-level capacities with genie-correct prefixes.

    Level i's capacity is H(C_i | prefix) minus the Monte-Carlo estimate of
    H(C_i | Y, H, prefix), the latter averaged from the exact multistage
    posterior of the transmitted bit.
    """
    idx, y, h, var = _draw(pmf, snr, samples, seed, fading)
    logw = _log_weights(y, h, var, pmf)
    true_bits = labeling.bits[idx]
    consistent = np.ones((samples, 2 ** labeling.m), dtype=bool)
    levels = np.empty(labeling.m)
    stderrs = np.empty(labeling.m)
    total = np.zeros(samples)
    for level in range(1, labeling.m + 1):
        bit = labeling.level_bits(level)
        match = bit[None, :] == true_bits[:, level - 1][:, None]
        post = _lse(logw, consistent & match) - _lse(logw, consistent)
        info = -post / _LN2                      # -log2 P(true bit | y, h, prefix)
        h_prior = _conditional_level_entropy(pmf, labeling, level)
        levels[level - 1] = h_prior - info.mean()
        stderrs[level - 1] = info.std(ddof=1) / math.sqrt(samples)
        total += info
        consistent &= match
    rate = float(levels.sum())
    rate_stderr = float(total.std(ddof=1) / math.sqrt(samples))
    return RateReport(levels, stderrs, rate, rate_stderr, samples,
                      meta={"kind": "mlc", "snr": snr})


def rate_bicm(pmf: SymbolPmf, labeling: Labeling, snr: float,
              samples: int = DEFAULT_SAMPLES, seed: int = 0,
              fading: str = RAYLEIGH) -> RateReport:
    """Independent-demapping rate H(X) - sum_i H(C_i | Y, H), clamped at 0."""
    idx, y, h, var = _draw(pmf, snr, samples, seed, fading)
    logw = _log_weights(y, h, var, pmf)
    true_bits = labeling.bits[idx]
    hx = pmf.entropy_bits()
    levels = np.empty(labeling.m)
    stderrs = np.empty(labeling.m)
    total = np.zeros(samples)
    for level in range(1, labeling.m + 1):
        bit = labeling.level_bits(level)
        match = bit[None, :] == true_bits[:, level - 1][:, None]
        post = _lse(logw, match) - _lse(logw, np.ones_like(match))
        info = -post / _LN2                      # -log2 P(true bit | y, h)
        levels[level - 1] = info.mean()          # H(C_i | Y, H) estimate
        stderrs[level - 1] = info.std(ddof=1) / math.sqrt(samples)
        total += info
    rate = hx - float(total.mean())
    rate_stderr = float(total.std(ddof=1) / math.sqrt(samples))
    clamped = rate < 0
    return RateReport(levels, stderrs, max(rate, 0.0), rate_stderr, samples,
                      clamped=clamped, meta={"kind": "bicm", "snr": snr, "hx": hx})


def mutual_information_direct(pmf: SymbolPmf, snr: float,
                              samples: int = DEFAULT_SAMPLES, seed: int = 0,
                              fading: str = RAYLEIGH):
    """I(X; Y | H) estimated from the symbol-level posterior.

    Chain-rule oracle for the multistage sum rate: with a common seed the two
    estimators share their samples.  Returns (rate, stderr).
    """
    idx, y, h, var = _draw(pmf, snr, samples, seed, fading)
    logw = _log_weights(y, h, var, pmf)
    post = logw[np.arange(samples), idx] - _lse(logw, np.ones_like(logw, dtype=bool))
    info = -post / _LN2
    return pmf.entropy_bits() - float(info.mean()), float(info.std(ddof=1) / math.sqrt(samples))


def fading_capacity_reference(snr: float, samples: int = DEFAULT_SAMPLES,
                              seed: int = 0) -> float:
    """Continuous-input reference E_H[0.5 log2(1 + H^2 gamma)]."""
    h = rng.rayleigh_unit(rng.stream(seed, "capref"), samples)
    return float(np.mean(0.5 * np.log2(1.0 + h * h * snr)))


# ---------------------------------------------------------------------------
# Scalar optimizers
# ---------------------------------------------------------------------------

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_max(f, lo: float, hi: float, tol: float, max_iter: int = 60):
    """Golden-section maximization of a unimodal scalar function."""
    evals = {}

    def fv(x):
        if x not in evals:
            evals[x] = f(x)
        return evals[x]

    a, b = lo, hi
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fv(c) >= fv(d):
            b, d = d, c
            c = b - _GOLDEN * (b - a)
        else:
            a, c = c, d
            d = a + _GOLDEN * (b - a)
    best = max(evals, key=lambda x: evals[x])
    return best, evals[best]


def _objective(kind: str):
    if kind == "mlc":
        return rate_mlc
    if kind == "bicm":
        return rate_bicm
    raise ValueError(f"objective must be 'mlc' or 'bicm', got {kind!r}")


def optimize_mb(m: int, snr: float, objective: str, labeling: Labeling,
                samples: int = DEFAULT_SAMPLES, seed: int = 0,
                bounds: tuple = (0.0, 0.2), tol: float = 2e-4,
                fading: str = RAYLEIGH):
    """Maximize the rate over the Maxwell-Boltzmann exponent.

    Common random numbers across candidates: each evaluation re-derives its
    samples from the same seed, so the search objective is a smooth function
    of the exponent.  Returns (nu_star, RateReport at nu_star).
    """
    if snr <= 0:
        raise ValueError("snr must be positive")
    fn = _objective(objective)

    def f(nu):
        return fn(mb_pmf(m, nu), labeling, snr, samples, seed, fading).rate

    best, _ = _golden_max(f, bounds[0], bounds[1], tol)
    candidates = {best, bounds[0]}
    nu_star = max(candidates, key=f)
    return nu_star, fn(mb_pmf(m, nu_star), labeling, snr, samples, seed, fading)


def optimize_p_sbs(m: int, snr: float, objective: str,
                   samples: int = DEFAULT_SAMPLES, seed: int = 0,
                   bounds: tuple = (0.5, 0.95), tol: float = 1e-3,
                   fading: str = RAYLEIGH, labeling: Labeling | None = None):
    """Maximize the rate over the two-ring shaping probability p.

    The multistage objective uses the shifted-NBC labeling, the independent-
    demapping objective uses Gray, matching how each scheme realizes the
    shaped level.  Returns (p_star, RateReport at p_star).
    """
    if snr <= 0:
        raise ValueError("snr must be positive")
    fn = _objective(objective)
    if labeling is None:
        labeling = make_labeling(SHIFTED_NBC if objective == "mlc" else GRAY, m)

    def f(p):
        return fn(sbs_pmf(m, p), labeling, snr, samples, seed, fading).rate

    best, _ = _golden_max(f, bounds[0], bounds[1], tol)
    candidates = {best, bounds[0]}
    p_star = max(candidates, key=f)
    return p_star, fn(sbs_pmf(m, p_star), labeling, snr, samples, seed, fading)


def bitlevel_capacity_table(pmf: SymbolPmf, labeling: Labeling, snr_db_grid,
                            samples: int = DEFAULT_SAMPLES, seed: int = 0,
                            fading: str = RAYLEIGH) -> list[RateReport]:
    """Per-level capacities across an SNR grid (dB), one report per point."""
    grid = list(snr_db_grid)
    if not grid:
        raise ValueError("empty SNR grid")
    out = []
    for snr_db in grid:
        rep = rate_mlc(pmf, labeling, 10.0 ** (snr_db / 10.0), samples, seed, fading)
        rep.meta["snr_db"] = snr_db
        out.append(rep)
    return out


def crossing_snr_db(rate_fn, target: float, lo_db: float, hi_db: float,
                    tol_db: float = 0.02) -> float:
    """Bisect for the SNR (dB) at which a monotone rate curve hits `target`.

    rate_fn maps snr_db -> rate; common random numbers inside rate_fn keep
    the curve monotone despite Monte-Carlo noise.
    """
    r_lo, r_hi = rate_fn(lo_db), rate_fn(hi_db)
    if not (r_lo < target < r_hi):
        raise ValueError(f"target {target} not bracketed: R({lo_db})={r_lo:.3f}, "
                         f"R({hi_db})={r_hi:.3f}")
    while hi_db - lo_db > tol_db:
        mid = 0.5 * (lo_db + hi_db)
        if rate_fn(mid) < target:
            lo_db = mid
        else:
            hi_db = mid
    return 0.5 * (lo_db + hi_db)


def uniform_reference_pmf(m: int) -> SymbolPmf:
    """Convenience alias used by sweep drivers."""
    return uniform_pmf(m)
