"""Scalar peak search used by the angular-rotation refinement.

The objective is g(delta) = |sum_n w_n e^{j n delta}|^2 for a fixed complex
vector w (a beamspace-demodulated channel estimate).  Maximizing the squared
modulus gives the same argmax as the modulus itself and avoids a square root
per evaluation.

The search is a bracketed golden-section pass followed by two parabolic
polish steps.  Golden section alone, stopped at bracket width ``tol``, leaves
an O(tol) offset in the rotation angle; the polish steps exploit local
smoothness to push the peak location two to five orders of magnitude below
that, which the noiseless exactness guarantees of the estimator rely on.

A numba-compiled kernel is used when numba is importable; the pure-numpy
fallback runs the identical algorithm (results may differ in the last ulp
because the summation order differs).
"""

from __future__ import annotations

import numpy as np

try:
    from numba import njit

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - exercised only without numba
    NUMBA_AVAILABLE = False

    def njit(*args, **kwargs):
        def deco(func):
            return func

        return deco


_INV_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0
# Parabolic polish offsets: large enough that curvature dominates float noise,
# small enough that the local quadratic model holds (bin width is ~2*pi/M).
_POLISH_STEPS = (1e-6, 1e-8)


@njit(cache=True)
def _peak_power_jit(wr, wi, delta):  # pragma: no cover - compiled
    re = 0.0
    im = 0.0
    for n in range(wr.shape[0]):
        ph = delta * n
        c = np.cos(ph)
        s = np.sin(ph)
        re += wr[n] * c - wi[n] * s
        im += wr[n] * s + wi[n] * c
    return re * re + im * im


@njit(cache=True)
def _golden_polish_jit(wr, wi, lo, hi, tol, dom_lo, dom_hi):  # pragma: no cover - compiled
    a = lo
    b = hi
    c = b - _INV_GOLDEN * (b - a)
    d = a + _INV_GOLDEN * (b - a)
    fc = _peak_power_jit(wr, wi, c)
    fd = _peak_power_jit(wr, wi, d)
    while (b - a) > tol:
        if fc > fd:
            b = d
            d = c
            fd = fc
            c = b - _INV_GOLDEN * (b - a)
            fc = _peak_power_jit(wr, wi, c)
        else:
            a = c
            c = d
            fc = fd
            d = a + _INV_GOLDEN * (b - a)
            fd = _peak_power_jit(wr, wi, d)
    x = 0.5 * (a + b)
    f0 = _peak_power_jit(wr, wi, x)
    for step in _POLISH_STEPS:
        fm = _peak_power_jit(wr, wi, x - step)
        fp = _peak_power_jit(wr, wi, x + step)
        den = fm - 2.0 * f0 + fp
        if den < 0.0:
            cand = x + 0.5 * step * (fm - fp) / den
            if cand < dom_lo:
                cand = dom_lo
            if cand > dom_hi:
                cand = dom_hi
            fcand = _peak_power_jit(wr, wi, cand)
            if fcand >= f0:
                x = cand
                f0 = fcand
    return x, f0


def _peak_power_np(w: np.ndarray, idx: np.ndarray, delta: float) -> float:
    z = w @ np.exp(1j * delta * idx)
    return float(z.real * z.real + z.imag * z.imag)


def _golden_polish_np(w, idx, lo, hi, tol, dom_lo, dom_hi):
    a, b = lo, hi
    c = b - _INV_GOLDEN * (b - a)
    d = a + _INV_GOLDEN * (b - a)
    fc = _peak_power_np(w, idx, c)
    fd = _peak_power_np(w, idx, d)
    while (b - a) > tol:
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - _INV_GOLDEN * (b - a)
            fc = _peak_power_np(w, idx, c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_GOLDEN * (b - a)
            fd = _peak_power_np(w, idx, d)
    x = 0.5 * (a + b)
    f0 = _peak_power_np(w, idx, x)
    for step in _POLISH_STEPS:
        fm = _peak_power_np(w, idx, x - step)
        fp = _peak_power_np(w, idx, x + step)
        den = fm - 2.0 * f0 + fp
        if den < 0.0:
            cand = min(max(x + 0.5 * step * (fm - fp) / den, dom_lo), dom_hi)
            fcand = _peak_power_np(w, idx, cand)
            if fcand >= f0:
                x, f0 = cand, fcand
    return x, f0


def golden_peak_search(
    w: np.ndarray,
    lo: float,
    hi: float,
    tol: float,
    dom_lo: float,
    dom_hi: float,
) -> tuple[float, float]:
    """Maximize |sum_n w_n e^{j n delta}|^2 for delta in [lo, hi].

    Returns ``(delta_star, peak_power)``.  The polish steps may move
    delta_star slightly outside [lo, hi] but never outside the hard domain
    [dom_lo, dom_hi].
    """
    if NUMBA_AVAILABLE:
        wr = np.ascontiguousarray(w.real)
        wi = np.ascontiguousarray(w.imag)
        return _golden_polish_jit(wr, wi, lo, hi, tol, dom_lo, dom_hi)
    idx = np.arange(w.shape[0], dtype=np.float64)
    return _golden_polish_np(w, idx, lo, hi, tol, dom_lo, dom_hi)
