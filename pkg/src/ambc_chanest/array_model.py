"""Uniform linear array geometry and its beamspace building blocks.

Everything here is a pure, deterministic function of its arguments: steering
vectors, the (1/M)-normalized DFT matrix, diagonal angular-rotation matrices,
and the Dirichlet kernel that describes how a single plane-wave path projects
onto the DFT grid.

Normalization convention: the DFT matrix carries a 1/M factor so that a
perfectly grid-aligned path of complex gain h produces a single beamspace
entry equal to h itself.  The same 1/M is used consistently by the peak
formula and by the rotation-refined peak read in :mod:`ambc_chanest.estimation`.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "ArrayConfig",
    "steering_vector",
    "dft_matrix",
    "rotation_matrix",
    "dirichlet_peak",
]

# Below this, sin(r/2) is treated as a removable singularity of the Dirichlet
# kernel and the analytic limit is returned instead.
_DIRICHLET_SING_TOL = 1e-9


@dataclass(frozen=True)
class ArrayConfig:
    """ULA geometry: antenna count and element spacing in wavelengths.

    Parameters
    ----------
    num_antennas : int
        Number of array elements M (at least 2).
    spacing_ratio : float
        Element spacing over wavelength, d/lambda.  Restricted to (0, 0.5]
        so that sin(theta) in [-1, 1] maps one-to-one onto spatial frequency.
    """

    num_antennas: int
    spacing_ratio: float = 0.5

    def __post_init__(self):
        if int(self.num_antennas) != self.num_antennas or self.num_antennas < 2:
            raise ValueError(f"num_antennas must be an integer >= 2, got {self.num_antennas}")
        if not (0.0 < self.spacing_ratio <= 0.5):
            raise ValueError(f"spacing_ratio must lie in (0, 0.5], got {self.spacing_ratio}")


@lru_cache(maxsize=8)
def _element_indices(num_antennas: int) -> np.ndarray:
    idx = np.arange(num_antennas, dtype=np.float64)
    idx.setflags(write=False)
    return idx


def steering_vector(cfg: ArrayConfig, theta: float) -> np.ndarray:
    """Array response a(theta) for azimuth ``theta`` in radians.

    Entry k is exp(j * 2*pi * (d/lambda) * k * sin(theta)), k = 0..M-1, so the
    first entry is always 1 and every entry has unit modulus.

    Raises
    ------
    ValueError
        If theta lies outside [-pi/2, pi/2].
    """
    if not (-np.pi / 2 <= theta <= np.pi / 2):
        raise ValueError(f"theta must lie in [-pi/2, pi/2], got {theta}")
    k = _element_indices(cfg.num_antennas)
    return np.exp(2j * np.pi * cfg.spacing_ratio * np.sin(theta) * k)


def dft_matrix(num_antennas: int) -> np.ndarray:
    """M x M DFT matrix with entries exp(-j*2*pi*(p-1)(q-1)/M) / M.

    With this scaling F @ F.conj().T == I/M, and applying F to a steering
    vector whose spatial frequency sits exactly on the grid yields a single
    unit-modulus entry.
    """
    if int(num_antennas) != num_antennas or num_antennas < 1:
        raise ValueError(f"num_antennas must be a positive integer, got {num_antennas}")
    m = int(num_antennas)
    p = np.arange(m)
    return np.exp(-2j * np.pi * np.outer(p, p) / m) / m


def rotation_matrix(num_antennas: int, delta: float) -> np.ndarray:
    """Diagonal angular-rotation matrix diag{1, e^{j*delta}, ..., e^{j(M-1)delta}}.

    Pre-multiplying a channel by this matrix shifts its spatial frequency by
    ``delta``, which is how an off-grid beamspace peak is slid onto an exact
    DFT bin.  ``delta`` must satisfy |delta| <= pi/M (one half bin width);
    the boundary itself is accepted.
    """
    if int(num_antennas) != num_antennas or num_antennas < 1:
        raise ValueError(f"num_antennas must be a positive integer, got {num_antennas}")
    m = int(num_antennas)
    if abs(delta) > np.pi / m:
        raise ValueError(f"|delta| must not exceed pi/M = {np.pi / m:.6g}, got {delta}")
    return np.diag(np.exp(1j * delta * np.arange(m)))


def dirichlet_peak(r: float, num_antennas: int) -> complex:
    """Normalized Dirichlet kernel (1/M) e^{-j(M-1)r/2} sin(Mr/2)/sin(r/2).

    This is the value a unit-gain single path contributes to a beamspace bin
    at spatial-frequency offset ``r``.  The singularity at r = 0 (mod 2*pi)
    is removable; the analytic limit there is exactly 1.
    """
    m = int(num_antennas)
    half = 0.5 * r
    s = np.sin(half)
    if abs(s) < _DIRICHLET_SING_TOL:
        return complex(1.0)
    return complex(np.exp(-1j * (m - 1) * half) * np.sin(m * half) / (m * s))
