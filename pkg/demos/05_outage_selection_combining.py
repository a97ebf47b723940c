"""Selection-combining outage with perfect vs estimated CSI, desk scale.

The reader keeps only the antenna with the best instantaneous SNR.  With
perfect channel knowledge it always picks the true best branch; with
estimated CSI it picks the branch the reconstructed channel says is best,
and pays when the reconstruction points at the wrong antenna.  The gap
between the two curves is the practical price of channel estimation.

Full-scale data (10^5 trials) comes from configs/fig5.json.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from ambc_chanest import ExperimentConfig, run_outage_sweep

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

cfg = ExperimentConfig(trials=5000, seed=23)
print(f"running {cfg.trials} trials x {len(cfg.snr_points_db)} SNR points ...")
table = run_outage_sweep(cfg)
rows = {(r.metric, r.snr_db): r.value for r in table.rows}
snr = np.array(cfg.snr_points_db)

fig, ax = plt.subplots(figsize=(7.5, 5))
markers = {-5: "o", 0: "s", 5: "^"}
for rho in (-5, 0, 5):
    perfect = [rows[(f"outage_perfect_rho{rho}dB", s)] for s in snr]
    estimated = [rows[(f"outage_estimated_rho{rho}dB", s)] for s in snr]
    ax.semilogy(snr, perfect, markers[rho] + "-", label=f"perfect CSI, rho_t={rho} dB")
    ax.semilogy(snr, estimated, markers[rho] + "--", label=f"estimated CSI, rho_t={rho} dB")
ax.set_xlabel("transmit SNR (dB)")
ax.set_ylabel("outage probability")
ax.set_ylim(1e-4, 1)
ax.set_title("Selection combining: estimated CSI tracks the perfect-CSI curve")
ax.legend(fontsize=8)
ax.grid(alpha=0.3, which="both")
fig.tight_layout()
fig.savefig(OUT / "05_outage.png", dpi=130)
plt.close(fig)

print("gap (estimated - perfect) per threshold:")
for rho in (-5, 0, 5):
    gaps = [rows[(f"outage_estimated_rho{rho}dB", s)] - rows[(f"outage_perfect_rho{rho}dB", s)]
            for s in snr]
    line = "  ".join(f"{g:+.4f}" for g in gaps)
    print(f"  rho_t {rho:+d} dB: {line}")
print(f"figure written to {OUT}/05_outage.png")
