"""One noisy trial through the full estimator, step by step.

A source at -45 degrees, a tag at 36 degrees, 10 dB transmit SNR.  The
script prints what each stage sees: the LS channel estimates for both tag
states, the coarse DFT bins with their angle reads, the rotation angles the
refinement settles on, and the final parameter errors.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from ambc_chanest import (
    ArrayConfig,
    estimate_all,
    generate_frame,
    make_pilots,
    sample_channel,
)

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

cfg = ArrayConfig(num_antennas=128, spacing_ratio=0.5)
eta, sigma2, snr_db = 0.5, 1.0, 10.0
power = sigma2 * 10 ** (snr_db / 10)

rng = np.random.default_rng(7)
params = sample_channel(rng, eta=eta)
pilots = make_pilots(1, power)

frame0 = generate_frame(params, cfg, pilots, sigma2, rng)
frame1 = generate_frame(params, cfg, pilots.with_tag_state(1), sigma2, rng)

print(f"truth: theta0 = {params.theta0:+.5f} rad, theta1 = {params.theta1:+.5f} rad")
print(f"       |h0| = {abs(params.h0):.4f}, |h1|/eta = {abs(params.h1)/eta:.4f}")
print(f"pilot block: N = 1 per tag state at P_s = {power:.2f} (transmit SNR {snr_db:.0f} dB)\n")

res = estimate_all(frame0, frame1, pilots, cfg, eta)

print("step 1 (least squares): per-antenna channel estimates recovered; the")
print(f"  B=0 estimate carries noise variance sigma2/P_s = {sigma2/power:.3f} per antenna\n")

print("step 2 (coarse DFT):")
print(f"  direct path     -> bin {res.direct_coarse.bin:3d}, "
      f"theta {res.direct_coarse.theta_hat:+.5f} rad "
      f"(error {abs(res.direct_coarse.theta_hat - params.theta0):.2e})")
print(f"  backscatter     -> bin {res.backscatter_coarse.bin:3d}, "
      f"theta {res.backscatter_coarse.theta_hat:+.5f} rad "
      f"(error {abs(res.backscatter_coarse.theta_hat - params.theta1):.2e})")
print("  (a large coarse backscatter error means the half-bin-quantized direct")
print("   subtraction left leakage that outshines the weak tag path; the refined")
print("   subtraction in step 3 removes that leakage)\n")

print("step 3 (angular rotation):")
print(f"  direct path     -> delta* {res.direct.delta:+.6f} rad, "
      f"theta {res.direct.theta_hat:+.5f} (error {abs(res.direct.theta_hat - params.theta0):.2e})")
print(f"  backscatter     -> delta* {res.backscatter.delta:+.6f} rad, "
      f"theta {res.backscatter.theta_hat:+.5f} (error {abs(res.backscatter.theta_hat - params.theta1):.2e})")
print(f"  gain reads: |h0| error {abs(abs(res.direct.gain_hat) - abs(params.h0)):.2e}, "
      f"|h1|/eta error {abs(abs(res.backscatter_gain_over_eta) - abs(params.h1)/eta):.2e}\n")

# how much better is the parametric reconstruction than raw LS?
from ambc_chanest import composite_channel

h_true = composite_channel(params, cfg, 1)
mse_ls = np.mean(np.abs(res.ls_channels[1] - h_true) ** 2)
mse_rot = np.mean(np.abs(res.reconstructed_channels[1] - h_true) ** 2)
print(f"per-element channel MSE:  LS {mse_ls:.4e}   refined reconstruction {mse_rot:.4e}")

fig, ax = plt.subplots(figsize=(8, 4))
spec = np.abs(np.fft.fft(res.ls_channels[1]) / cfg.num_antennas)
resid = res.ls_channels[1] - res.direct.gain_hat * np.exp(
    2j * np.pi * 0.5 * np.sin(res.direct.theta_hat) * np.arange(cfg.num_antennas)
)
spec_resid = np.abs(np.fft.fft(resid) / cfg.num_antennas)
ax.semilogy(spec, label="B=1 LS estimate")
ax.semilogy(spec_resid, label="after direct-path subtraction")
ax.set_xlabel("DFT bin (0-based)")
ax.set_ylabel("|beamspace magnitude|")
ax.set_title("Separating the two paths in beamspace")
ax.legend()
ax.grid(alpha=0.3)
fig.tight_layout()
fig.savefig(OUT / "02_path_separation.png", dpi=130)
plt.close(fig)
print(f"figure written to {OUT}/02_path_separation.png")
