"""Block error rates of the four rate-2 transmission schemes.

Simulates the shipped presets (shaped/uniform multi-level coding and
shaped/uniform bit-interleaved coded modulation, all 512 info bits over 256
uses of a Rayleigh-faded 16-ASK channel) across an SNR grid.  The shaped
multi-level scheme reaches any target error rate first.

Budgets here are demo-sized (about two minutes); the acceptance suite and
the `shapedpolar bler` command run the full-depth comparison.
"""

import numpy as np

from shapedpolar.sim import ExperimentConfig, run_bler
from shapedpolar.transceiver import preset

GRID = tuple(np.round(np.arange(15.5, 19.01, 0.5), 2))
results = {}
for name in ("smlc", "umlc", "ubicm", "sbicm"):
    cfg = ExperimentConfig(command="bler", scheme=preset(name), snr_db_grid=GRID,
                           blocks=4000, target_errors=150, bler_floor=2e-3,
                           seed=11)
    results[name] = {row["snr_db"]: row for row in run_bler(cfg).rows}
    print(f"{name}: simulated {len(results[name])} points")

print(f"\n{'SNR dB':>7}  " + "".join(f"{n:>10}" for n in results))
for snr in GRID:
    cells = []
    for name in results:
        row = results[name].get(snr)
        cells.append(f"{row['bler']:>10.4f}" if row else f"{'-':>10}")
    print(f"{snr:7.2f}  " + "".join(cells))

with open("bler_16ask.csv", "w") as f:
    f.write("scheme,snr_db,bler,wilson_lo,wilson_hi,blocks\n")
    for name, rows in results.items():
        for snr, row in rows.items():
            f.write(f"{name},{snr},{row['bler']:.6g},{row['wilson_lo']:.6g},"
                    f"{row['wilson_hi']:.6g},{row['blocks']}\n")
print("\nwrote bler_16ask.csv")
