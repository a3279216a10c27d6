"""Designing a shaped multi-level scheme for a target block error rate.

Given an operating SNR and a target error probability, the procedure
1. maximizes the multistage rate over the shaping probability p,
2. calibrates the shaping-bit count s for that p,
3. splits the error budget evenly across levels (P_i = 1 - (1-P_e)^(1/m))
   and searches the largest per-level payload k_i meeting it.

Monte-Carlo budgets are demo-sized; the acceptance suite runs the
full-budget version against the published parameter table.
"""

from shapedpolar.rates import optimize_p_sbs
from shapedpolar.reliability import default_order
from shapedpolar.shaping import calibrate_s
from shapedpolar.transceiver import DesignTargets, design_rate_allocation, preset, with_allocation

OPERATING_SNR_DB = 18.25
P_E = 1e-3

print(f"designing at {OPERATING_SNR_DB} dB for block error rate {P_E}\n")

p_star, rep = optimize_p_sbs(4, 10 ** (OPERATING_SNR_DB / 10), "mlc",
                             samples=60_000, seed=5)
print(f"step 1: optimal shaping probability p* = {p_star:.3f} "
      f"(multistage rate {rep.rate:.3f} bits/use)")

p_star = round(p_star, 2)
order = default_order(256)
s_star, _ = calibrate_s(256, p_star, order, list_size=8, trials=1500, seed=5)
print(f"step 2: calibrated shaping-bit count s = {s_star}")

targets = DesignTargets(snr_db=OPERATING_SNR_DB, p_e=P_E, m=4)
print(f"step 3: per-level error budget P_i = {targets.p_i:.4g}")
base = preset("smlc")
ks, diagnostics = design_rate_allocation(targets, base, blocks=4000, seed=5)
print(f"         allocated payloads k = {ks}  (total {sum(ks)})")
print(f"         published reference    (24, 112, 197, 179)  (total 512)")

design = with_allocation(base, ks)
print("\nresulting scheme config:\n")
print(design.to_config_text())
