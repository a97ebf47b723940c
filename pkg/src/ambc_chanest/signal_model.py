"""Ground-truth channel sampling, pilot design, and received-frame synthesis.

The physical model: a source illuminates an M-antenna reader directly (gain
h0, azimuth theta0) while a passive tag either absorbs (B = 0) or reflects
(B = 1) the same signal towards the reader (cascade gain eta*h_st*h_tr,
azimuth theta1).  During training the tag holds B = 0 for the first N pilot
symbols and B = 1 for the next N, so the reader sees one rank-1 frame
Y = h s^T + W per tag state.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .array_model import ArrayConfig, steering_vector

__all__ = [
    "ChannelParams",
    "PilotFrame",
    "ReceivedFrame",
    "sample_channel",
    "composite_channel",
    "make_pilots",
    "generate_frame",
]


@dataclass(frozen=True)
class ChannelParams:
    """Physical ground truth for one realization.

    h0 is the direct source-reader gain; h_st and h_tr are the source-tag and
    tag-reader gains; eta in (0, 1] is the attenuation inside the tag.  The
    cascade gain of the backscatter path is the derived product
    ``h1 = eta * h_st * h_tr``.
    """

    h0: complex
    h_st: complex
    h_tr: complex
    eta: float
    theta0: float
    theta1: float

    def __post_init__(self):
        if not (0.0 < self.eta <= 1.0):
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")
        for name in ("theta0", "theta1"):
            th = getattr(self, name)
            if not (-np.pi / 2 <= th <= np.pi / 2):
                raise ValueError(f"{name} must lie in [-pi/2, pi/2], got {th}")

    @property
    def h1(self) -> complex:
        """Cascade backscatter gain eta * h_st * h_tr."""
        return self.eta * self.h_st * self.h_tr


@dataclass(frozen=True)
class PilotFrame:
    """N source pilots of constant modulus sqrt(P_s), sent while the tag holds one bit.

    The default design is real antipodal (+-sqrt(P_s)), which makes
    s^T s = N * P_s exactly and keeps the plain-transpose least-squares
    estimator well conditioned.
    """

    symbols: np.ndarray
    power: float
    tag_state: int = 0

    def __post_init__(self):
        s = np.asarray(self.symbols)
        if s.ndim != 1 or s.size < 1:
            raise ValueError("symbols must be a non-empty 1-D vector")
        if self.power <= 0:
            raise ValueError(f"power must be positive, got {self.power}")
        if self.tag_state not in (0, 1):
            raise ValueError(f"tag_state must be 0 or 1, got {self.tag_state}")
        if not np.allclose(np.abs(s) ** 2, self.power, rtol=1e-9, atol=0.0):
            raise ValueError("every pilot symbol must have |s_n|^2 == power")

    @property
    def num_symbols(self) -> int:
        return int(np.asarray(self.symbols).size)

    def with_tag_state(self, tag_state: int) -> "PilotFrame":
        """Same pilot symbols, labelled for the other tag half-frame."""
        return replace(self, tag_state=tag_state)


@dataclass(frozen=True)
class ReceivedFrame:
    """M x N received samples Y = h s^T + W for one tag state."""

    samples: np.ndarray
    noise_variance: float
    tag_state: int

    def __post_init__(self):
        y = np.asarray(self.samples)
        if y.ndim != 2:
            raise ValueError("samples must be an M x N matrix")
        if self.noise_variance < 0:
            raise ValueError(f"noise_variance must be >= 0, got {self.noise_variance}")
        if self.tag_state not in (0, 1):
            raise ValueError(f"tag_state must be 0 or 1, got {self.tag_state}")


def _complex_normal(rng: np.random.Generator, size) -> np.ndarray:
    # circularly symmetric, unit variance per complex sample
    z = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    return z * np.sqrt(0.5)


def sample_channel(
    rng: np.random.Generator,
    eta: float = 0.5,
    theta0: float = -np.pi / 4,
    theta1: float = np.pi / 5,
    random_angles: bool = False,
) -> ChannelParams:
    """Draw h0, h_st, h_tr i.i.d. CN(0, 1) from ``rng``.

    Angles default to the fixed pair (-pi/4, pi/5); with
    ``random_angles=True`` they are drawn uniformly on [-pi/2, pi/2] instead.
    The three gains are always drawn (in a fixed order) so the consumed
    random stream does not depend on the angle mode.
    """
    g = _complex_normal(rng, 3)
    if random_angles:
        theta0, theta1 = rng.uniform(-np.pi / 2, np.pi / 2, size=2)
    return ChannelParams(
        h0=complex(g[0]),
        h_st=complex(g[1]),
        h_tr=complex(g[2]),
        eta=eta,
        theta0=float(theta0),
        theta1=float(theta1),
    )


def composite_channel(params: ChannelParams, cfg: ArrayConfig, tag_bit: int) -> np.ndarray:
    """Effective channel h0*a(theta0) + B*h1*a(theta1) for tag bit B."""
    if tag_bit not in (0, 1):
        raise ValueError(f"tag_bit must be 0 or 1, got {tag_bit}")
    h = params.h0 * steering_vector(cfg, params.theta0)
    if tag_bit == 1:
        h = h + params.h1 * steering_vector(cfg, params.theta1)
    return h


def make_pilots(
    num_symbols: int,
    power: float,
    pattern: str = "alternating",
    tag_state: int = 0,
) -> PilotFrame:
    """Build N real antipodal pilots s_n in {+sqrt(P_s), -sqrt(P_s)}.

    ``pattern`` selects the deterministic sign sequence: "alternating"
    (+, -, +, ...) or "constant" (all +).  Either choice satisfies
    s^T s = N * P_s exactly.
    """
    if int(num_symbols) != num_symbols or num_symbols < 1:
        raise ValueError(f"num_symbols must be a positive integer, got {num_symbols}")
    if power <= 0:
        raise ValueError(f"power must be positive, got {power}")
    amp = np.sqrt(power)
    if pattern == "alternating":
        signs = np.where(np.arange(num_symbols) % 2 == 0, 1.0, -1.0)
    elif pattern == "constant":
        signs = np.ones(num_symbols)
    else:
        raise ValueError(f"unknown pilot pattern {pattern!r}")
    return PilotFrame(symbols=amp * signs, power=float(power), tag_state=tag_state)


def generate_frame(
    params: ChannelParams,
    cfg: ArrayConfig,
    pilots: PilotFrame,
    sigma2: float,
    rng: np.random.Generator,
) -> ReceivedFrame:
    """Synthesize Y = h s^T + W with W entries i.i.d. CN(0, sigma2).

    The tag state of the frame is taken from ``pilots.tag_state``.  With
    sigma2 = 0 the frame is exactly rank one.
    """
    if sigma2 < 0:
        raise ValueError(f"sigma2 must be >= 0, got {sigma2}")
    h = composite_channel(params, cfg, pilots.tag_state)
    s = np.asarray(pilots.symbols)
    y = np.outer(h, s)
    if sigma2 > 0:
        y = y + np.sqrt(sigma2) * _complex_normal(rng, y.shape)
    return ReceivedFrame(samples=y, noise_variance=float(sigma2), tag_state=pilots.tag_state)
