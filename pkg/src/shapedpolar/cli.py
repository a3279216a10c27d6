"""Command-line front end.

Subcommands mirror the experiment runners: ``rates``, ``calibrate``,
``design`` and ``bler``.  Scheme parameters come from a preset name or a
key=value config file.  Exit codes: 0 success, 2 configuration error,
3 infeasible design.
"""

from __future__ import annotations

import argparse
import sys

from .sim import DesignInfeasibleError, ExperimentConfig, dispatch
from .transceiver import SCHEMES, SchemeDesign, preset

EXIT_CONFIG_ERROR = 2
EXIT_INFEASIBLE = 3


def _snr_grid(text: str) -> tuple:
    """Parse 'start:step:stop' (inclusive stop) or a comma list of dB values."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"expected start:step:stop, got {text!r}")
        start, step, stop = (float(v) for v in parts)
        if step <= 0 or stop < start:
            raise ValueError(f"bad SNR range {text!r}")
        grid = []
        v = start
        while v <= stop + 1e-9:
            grid.append(round(v, 6))
            v += step
        return tuple(grid)
    return tuple(float(v) for v in text.split(","))


def _load_scheme(args) -> SchemeDesign | None:
    if getattr(args, "preset", None):
        return preset(args.preset)
    if getattr(args, "config", None):
        return SchemeDesign.from_config_file(args.config)
    return None


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--seed", type=int, default=0, help="root random seed")
    sub.add_argument("--workers", type=int, default=1, help="worker processes")
    sub.add_argument("--out", type=str, default=None, help="output CSV/config path")


def _add_scheme(sub: argparse.ArgumentParser) -> None:
    group = sub.add_mutually_exclusive_group()
    group.add_argument("--preset", choices=SCHEMES, help="shipped scheme preset")
    group.add_argument("--config", type=str, help="scheme config file")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="shapedpolar",
        description="Shaped multi-level polar coding experiments on Rayleigh fading.")
    subs = ap.add_subparsers(dest="command", required=True)

    b = subs.add_parser("bler", help="block error rate sweep")
    _add_scheme(b)
    b.add_argument("--snr-db", type=str, required=True, help="start:step:stop in dB")
    b.add_argument("--blocks", type=int, default=200_000, help="block budget per point")
    b.add_argument("--target-errors", type=int, default=200)
    b.add_argument("--bler-floor", type=float, default=1e-5)
    b.add_argument("--zero-noise", action="store_true",
                   help="suppress additive noise (sanity override)")
    _add_common(b)

    r = subs.add_parser("rates", help="achievable-rate sweep")
    r.add_argument("--snr-db", type=str, required=True)
    r.add_argument("--samples", type=int, default=200_000)
    r.add_argument("--curves", type=str,
                   default="mlc:uniform,mlc:mb,mlc:sbs,bicm:uniform",
                   help="comma list of estimator:distribution curves")
    r.add_argument("--m", type=int, default=4)
    _add_common(r)

    c = subs.add_parser("calibrate", help="shaping-bit calibration")
    c.add_argument("--p-grid", type=str, default="0.55,0.6,0.65,0.7,0.75,0.8",
                   help="comma list of target ones-probabilities")
    c.add_argument("--n-c", type=int, default=256)
    c.add_argument("--list-size", type=int, default=8)
    c.add_argument("--trials", type=int, default=2000)
    _add_common(c)

    d = subs.add_parser("design", help="rate allocation at an operating SNR")
    _add_scheme(d)
    d.add_argument("--snr-db", type=str, required=True, help="operating SNR (one value)")
    d.add_argument("--pe", type=float, default=1e-3, help="target block error rate")
    d.add_argument("--target-k", type=int, default=None,
                   help="rescale the allocation to this total payload")
    d.add_argument("--samples", type=int, default=100_000)
    d.add_argument("--trials", type=int, default=2000)
    d.add_argument("--blocks", type=int, default=20_000,
                   help="Monte-Carlo blocks per allocation candidate")
    _add_common(d)
    return ap


def _to_config(args) -> ExperimentConfig:
    common = dict(seed=args.seed, workers=args.workers, out=args.out)
    if args.command == "bler":
        scheme = _load_scheme(args)
        if scheme is None:
            raise ValueError("bler needs --preset or --config")
        return ExperimentConfig(command="bler", scheme=scheme,
                                snr_db_grid=_snr_grid(args.snr_db),
                                blocks=args.blocks, target_errors=args.target_errors,
                                bler_floor=args.bler_floor,
                                zero_noise=args.zero_noise, **common)
    if args.command == "rates":
        return ExperimentConfig(command="rates", snr_db_grid=_snr_grid(args.snr_db),
                                samples=args.samples, m=args.m,
                                curves=tuple(args.curves.split(",")), **common)
    if args.command == "calibrate":
        return ExperimentConfig(command="calibrate",
                                p_grid=tuple(float(v) for v in args.p_grid.split(",")),
                                n_c=args.n_c, list_size=args.list_size,
                                trials=args.trials, **common)
    if args.command == "design":
        return ExperimentConfig(command="design", scheme=_load_scheme(args),
                                snr_db_grid=_snr_grid(args.snr_db), p_e=args.pe,
                                target_k=args.target_k, samples=args.samples,
                                trials=args.trials, blocks=args.blocks, **common)
    raise ValueError(f"unknown command {args.command!r}")


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = _to_config(args)
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    try:
        rec = dispatch(cfg)
    except DesignInfeasibleError as exc:
        print(f"infeasible design: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    for row in rec.rows:
        print("  ".join(f"{k}={_short(v)}" for k, v in row.items()))
    if cfg.out:
        print(f"wrote {cfg.out}")
    return 0


def _short(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


if __name__ == "__main__":
    sys.exit(main())
