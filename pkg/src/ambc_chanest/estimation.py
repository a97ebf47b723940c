"""Three-step channel estimator: least squares, DFT coarse stage, rotation refinement.

Step 1 recovers the composite channel per tag state from the pilot frame by
least squares.  Step 2 takes the (1/M)-normalized DFT of that estimate, picks
the strongest bin, and maps bin index to a coarse azimuth while reading the
complex gain straight off the peak.  Step 3 slides the spatial spectrum by a
rotation angle delta in [-pi/M, pi/M] so the true peak lands exactly on a DFT
bin, which removes the grid-quantization floor of the coarse stage.

Path separation for the reflecting state: the direct path is estimated from
the absorbing (B = 0) frame, its reconstruction is subtracted from the B = 1
least-squares estimate, and the single-peak machinery runs on the residual.
A two-largest-peaks variant is available behind ``path_split="two-peaks"``
for comparison.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._search import golden_peak_search
from .array_model import ArrayConfig, steering_vector
from .signal_model import PilotFrame, ReceivedFrame

__all__ = [
    "IllConditionedPilotError",
    "CoarseEstimate",
    "RefinedEstimate",
    "EstimationResult",
    "ls_estimate",
    "dft_coarse",
    "rotation_refine",
    "estimate_all",
]

# Rotation-angle search tolerance (golden-section bracket width, radians).
DEFAULT_SEARCH_TOL = 1e-8

_GRID_POINTS = 64  # coarse grid over [-pi/M, pi/M] that seeds the line search

# Candidate bins whose best grid sample falls below this fraction of the
# leader's are pruned from the line search; see rotation_refine for the
# Bernstein-inequality argument that this never changes the winner.
_PRUNE_RATIO = 0.90


class IllConditionedPilotError(ValueError):
    """Raised when s^T s is too small for the plain-transpose LS estimator."""


@dataclass(frozen=True)
class CoarseEstimate:
    """DFT-stage output: 1-based peak bin, mapped azimuth, peak-value gain."""

    bin: int
    theta_hat: float
    gain_hat: complex


@dataclass(frozen=True)
class RefinedEstimate:
    """Rotation-stage output: chosen bin, rotation angle, azimuth, gain."""

    bin: int
    delta: float
    theta_hat: float
    gain_hat: complex


@dataclass(frozen=True)
class EstimationResult:
    """Everything the two-state pipeline produces for one pilot block.

    ``direct``/``backscatter`` hold the refined angle and complex-gain
    estimates for the two paths; the ``*_coarse`` fields keep the DFT-only
    stage for comparison.  ``ls_channels`` and the two reconstruction pairs
    are indexed by tag state (B = 0, B = 1); the refined B = 1 reconstruction
    is exactly ``direct.gain_hat * a(direct.theta_hat) +
    backscatter.gain_hat * a(backscatter.theta_hat)``.
    """

    direct: RefinedEstimate
    backscatter: RefinedEstimate
    direct_coarse: CoarseEstimate
    backscatter_coarse: CoarseEstimate
    ls_channels: tuple
    reconstructed_channels: tuple
    reconstructed_coarse: tuple
    eta: float

    @property
    def backscatter_gain_over_eta(self) -> complex:
        """Reported cascade gain h1/eta (the tag attenuation divided out)."""
        return self.backscatter.gain_hat / self.eta


@lru_cache(maxsize=8)
def _beamspace_tables(num_antennas: int):
    """Per-M cached tables: element indices, DFT twiddle rows, rotation grid."""
    m = num_antennas
    idx = np.arange(m, dtype=np.float64)
    twiddle = np.exp(-2j * np.pi * np.outer(idx, idx) / m)  # row k demodulates bin k
    grid = np.linspace(-np.pi / m, np.pi / m, _GRID_POINTS)
    grid_phases = np.exp(1j * np.outer(grid, idx))  # (_GRID_POINTS, M)
    for arr in (idx, twiddle, grid, grid_phases):
        arr.setflags(write=False)
    return idx, twiddle, grid, grid_phases


def _grid_sin(k: int, num_antennas: int, spacing_ratio: float) -> float:
    """Map 0-based DFT bin k to sin(theta) on the spatial-frequency grid.

    Bins up to M/2 take the non-negative branch k/(M*d/lambda); bins above
    wrap to (k-M)/(M*d/lambda).  At half-wavelength spacing the bin k = M/2
    aliases sin(theta) = +-1 and resolves to +1 (theta = +pi/2).
    """
    m = num_antennas
    if k <= m / 2:
        return k / (m * spacing_ratio)
    return (k - m) / (m * spacing_ratio)


def ls_estimate(samples: np.ndarray, pilots: PilotFrame, mode: str = "transpose") -> np.ndarray:
    """Per-antenna least-squares channel estimate from one pilot frame.

    mode "transpose" implements h_hat = Y s (s^T s)^{-1}, exact for the real
    antipodal pilot design; mode "conjugate" implements the correlator
    h_hat = Y s* / (N P_s), which also supports complex constant-modulus
    pilots.  The two coincide for real pilots.
    """
    y = np.asarray(samples)
    s = np.asarray(pilots.symbols)
    n_ps = pilots.num_symbols * pilots.power
    if mode == "transpose":
        sts = s @ s
        if abs(sts) < 1e-12 * n_ps:
            raise IllConditionedPilotError(
                f"s^T s = {sts:.3e} is degenerate for N*P_s = {n_ps:.3e}; "
                "use real antipodal pilots or mode='conjugate'"
            )
        return (y @ s) / sts
    if mode == "conjugate":
        return (y @ np.conj(s)) / n_ps
    raise ValueError(f"unknown ls mode {mode!r}")


def dft_coarse(h_hat: np.ndarray, cfg: ArrayConfig) -> CoarseEstimate:
    """Coarse single-path estimate from the strongest (1/M)-DFT bin.

    The input is assumed to carry one dominant path (the pipeline guarantees
    this by subtracting the direct path before the backscatter stage).  An
    all-zero input degenerates to bin 1 with zero gain.
    """
    m = cfg.num_antennas
    h = np.asarray(h_hat)
    if h.shape != (m,):
        raise ValueError(f"expected a length-{m} channel vector, got shape {h.shape}")
    spec = np.fft.fft(h) / m
    k = int(np.argmax(spec.real**2 + spec.imag**2))
    sin_theta = np.clip(_grid_sin(k, m, cfg.spacing_ratio), -1.0, 1.0)
    return CoarseEstimate(bin=k + 1, theta_hat=float(np.arcsin(sin_theta)), gain_hat=complex(spec[k]))


def rotation_refine(
    h_hat: np.ndarray,
    cfg: ArrayConfig,
    coarse: CoarseEstimate,
    tol: float = DEFAULT_SEARCH_TOL,
) -> RefinedEstimate:
    """Refine a coarse estimate by sliding the beamspace peak onto a bin.

    For each candidate bin in {m-1, m, m+1} (mod M, around the coarse bin)
    the rotated peak magnitude |(F Phi(delta) h_hat)_bin| is maximized over
    delta in [-pi/M, pi/M]: a 64-point grid localizes the peak, and a
    bracketed golden-section search (tolerance ``tol``) with parabolic polish
    pins it down.  The best bin wins; evaluating the neighbors covers the
    case where coarse rounding put the true peak one bin over.
    """
    m = cfg.num_antennas
    idx, twiddle, grid, grid_phases = _beamspace_tables(m)
    dom = np.pi / m
    k0 = coarse.bin - 1
    candidates = ((k0 - 1) % m, k0, (k0 + 1) % m)

    demod = np.asarray(h_hat)[None, :] * twiddle[list(candidates)]  # (3, M)
    grid_vals = grid_phases @ demod.T  # (_GRID_POINTS, 3)
    grid_power = grid_vals.real**2 + grid_vals.imag**2
    grid_best = grid_power.max(axis=0)

    # A bin whose best grid sample is far enough below the leader cannot hold
    # the true maximum: the objective amplitude is a trig polynomial of degree
    # M-1, so by Bernstein's inequality a half grid cell (pi/(63*M)) changes
    # it by at most a (M-1)*pi/(63*M) < 5% relative factor.  Skipping those
    # bins leaves the search result identical and saves their line searches.
    cutoff = _PRUNE_RATIO * float(grid_best.max())

    best = None
    for j, k in enumerate(candidates):
        if grid_best[j] < cutoff:
            continue
        i = int(np.argmax(grid_power[:, j]))
        lo = grid[max(i - 1, 0)]
        hi = grid[min(i + 1, _GRID_POINTS - 1)]
        delta, power = golden_peak_search(demod[j], lo, hi, tol, -dom, dom)
        if best is None or power > best[0]:
            best = (power, k, j, delta)

    _, k, j, delta = best
    gain = complex(demod[j] @ np.exp(1j * delta * idx)) / m
    sin_theta = np.clip(
        _grid_sin(k, m, cfg.spacing_ratio) - delta / (2 * np.pi * cfg.spacing_ratio),
        -1.0,
        1.0,
    )
    return RefinedEstimate(
        bin=k + 1,
        delta=float(delta),
        theta_hat=float(np.arcsin(sin_theta)),
        gain_hat=gain,
    )


def _second_peak_bin(spec_power: np.ndarray, first_bin: int, guard: int = 2) -> int:
    """Strongest bin at least ``guard`` bins away (circularly) from ``first_bin``."""
    m = spec_power.shape[0]
    dist = np.abs((np.arange(m) - first_bin + m // 2) % m - m // 2)
    masked = np.where(dist > guard, spec_power, -1.0)
    return int(np.argmax(masked))


def estimate_all(
    frame0: ReceivedFrame,
    frame1: ReceivedFrame,
    pilots: PilotFrame,
    cfg: ArrayConfig,
    eta: float,
    path_split: str = "subtract",
    ls_mode: str = "transpose",
    tol: float = DEFAULT_SEARCH_TOL,
) -> EstimationResult:
    """Run the full two-state pipeline on an absorbing/reflecting frame pair.

    With ``path_split="subtract"`` (default) the direct path comes from the
    B = 0 frame and the backscatter path from the residual of the B = 1
    estimate after subtracting the reconstructed direct path.  With
    ``path_split="two-peaks"`` the B = 1 estimate is decomposed into its two
    strongest separated beamspace peaks instead, and the peak closer in angle
    to the B = 0 direct estimate is treated as the direct path.
    """
    if frame0.tag_state != 0 or frame1.tag_state != 1:
        raise ValueError("frame0 must have tag_state 0 and frame1 tag_state 1")
    if not (0.0 < eta <= 1.0):
        raise ValueError(f"eta must lie in (0, 1], got {eta}")

    h_ls0 = ls_estimate(frame0.samples, pilots, mode=ls_mode)
    h_ls1 = ls_estimate(frame1.samples, pilots, mode=ls_mode)

    direct_coarse = dft_coarse(h_ls0, cfg)
    direct = rotation_refine(h_ls0, cfg, direct_coarse, tol=tol)
    a_direct = steering_vector(cfg, direct.theta_hat)
    a_direct_coarse = steering_vector(cfg, direct_coarse.theta_hat)

    if path_split == "subtract":
        residual_coarse = h_ls1 - direct_coarse.gain_hat * a_direct_coarse
        backscatter_coarse = dft_coarse(residual_coarse, cfg)
        residual = h_ls1 - direct.gain_hat * a_direct
        backscatter = rotation_refine(residual, cfg, dft_coarse(residual, cfg), tol=tol)
    elif path_split == "two-peaks":
        m = cfg.num_antennas
        spec = np.fft.fft(h_ls1) / m
        power = spec.real**2 + spec.imag**2
        k_a = int(np.argmax(power))
        k_b = _second_peak_bin(power, k_a)
        ests = []
        for k in (k_a, k_b):
            sin_theta = np.clip(_grid_sin(k, m, cfg.spacing_ratio), -1.0, 1.0)
            c = CoarseEstimate(bin=k + 1, theta_hat=float(np.arcsin(sin_theta)), gain_hat=complex(spec[k]))
            ests.append((c, rotation_refine(h_ls1, cfg, c, tol=tol)))
        # associate by angular proximity to the B=0 direct estimate
        ests.sort(key=lambda e: abs(e[1].theta_hat - direct.theta_hat))
        backscatter_coarse, backscatter = ests[1]
    else:
        raise ValueError(f"unknown path_split {path_split!r}")

    recon0 = direct.gain_hat * a_direct
    recon1 = recon0 + backscatter.gain_hat * steering_vector(cfg, backscatter.theta_hat)
    recon0_coarse = direct_coarse.gain_hat * a_direct_coarse
    recon1_coarse = recon0_coarse + backscatter_coarse.gain_hat * steering_vector(
        cfg, backscatter_coarse.theta_hat
    )

    return EstimationResult(
        direct=direct,
        backscatter=backscatter,
        direct_coarse=direct_coarse,
        backscatter_coarse=backscatter_coarse,
        ls_channels=(h_ls0, h_ls1),
        reconstructed_channels=(recon0, recon1),
        reconstructed_coarse=(recon0_coarse, recon1_coarse),
        eta=float(eta),
    )
