"""Fisher information and Cramer-Rao machinery for the two-path model.

The estimated quantities are g = [|h0|, |h1|/eta, theta0, theta1], obtained
from the natural parameter vector phi = [|h0|, |h1|, sin(theta0), sin(theta1)]
through the diagonal Jacobian diag{1, 1/eta, 1/cos(theta0), 1/cos(theta1)}.
Three bound flavors are provided for the reflecting (B = 1) state:

* ``crlb_numeric``   - Jacobian-transformed diagonal of the inverted 4x4
  Fisher matrix (the normative values).
* ``crlb_closed_form`` - the same four numbers written as cofactor ratios;
  agreement with the numeric route is a structural self-check.
* ``lcrlb``          - the looser bounds that replace [I^-1]_kk by 1/[I]_kk,
  which collapse to simple closed forms.

For the absorbing (B = 0) state the model is single-path and its two bounds
coincide with the first and third LCRLB entries (``bounds_state0``).

Note on the gain-squared entries: the angle-angle Fisher terms carry
sum_{m=0}^{M-1} m^2 = (M-1)M(2M-1)/6 times |h_i|^2.  The squared moduli (not
squared complex gains) are what keep the matrix real and consistent with the
LCRLB closed forms; see the repository test suite for the cross-checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SingularFisherError",
    "BoundInputs",
    "BoundsResult",
    "fisher_matrix",
    "crlb_numeric",
    "crlb_closed_form",
    "lcrlb",
    "bounds_state0",
    "compute_bounds",
]

# Fisher condition number beyond which the geometry is declared degenerate
# instead of returning garbage bounds.
CONDITION_LIMIT = 1e12


class SingularFisherError(ArithmeticError):
    """Raised when the Fisher matrix is numerically singular."""


@dataclass(frozen=True)
class BoundInputs:
    """Scene and system parameters the bounds depend on.

    ``abs_h0``/``abs_h1`` are gain moduli, ``omega0``/``omega1`` their phases
    (the bounds see the phases only through the difference omega0 - omega1).
    Angles must stay strictly inside (-pi/2, pi/2): the Jacobian carries
    1/cos(theta) factors that blow up at the edges.
    """

    abs_h0: float
    abs_h1: float
    omega0: float
    omega1: float
    theta0: float
    theta1: float
    eta: float
    num_antennas: int
    num_pilots: int
    pilot_power: float
    sigma2: float
    spacing_ratio: float = 0.5

    def __post_init__(self):
        if self.abs_h0 < 0 or self.abs_h1 < 0:
            raise ValueError("gain moduli must be >= 0")
        for name in ("theta0", "theta1"):
            th = getattr(self, name)
            if not (abs(th) < np.pi / 2):
                raise ValueError(f"{name} must satisfy |theta| < pi/2, got {th}")
        if not (0.0 < self.eta <= 1.0):
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")
        if self.num_antennas < 2 or self.num_pilots < 1:
            raise ValueError("need num_antennas >= 2 and num_pilots >= 1")
        if self.pilot_power <= 0 or self.sigma2 <= 0:
            raise ValueError("pilot_power and sigma2 must be positive")
        if not (0.0 < self.spacing_ratio <= 0.5):
            raise ValueError(f"spacing_ratio must lie in (0, 0.5], got {self.spacing_ratio}")

    @property
    def c0(self) -> float:
        """Spatial-frequency scale 2*pi*d/lambda."""
        return 2 * np.pi * self.spacing_ratio

    def jacobian_diag(self) -> np.ndarray:
        return np.array([1.0, 1.0 / self.eta, 1.0 / np.cos(self.theta0), 1.0 / np.cos(self.theta1)])


@dataclass(frozen=True)
class BoundsResult:
    """Bundle of the Fisher matrix and all bound flavors for one tag state."""

    fisher: np.ndarray
    crlb_numeric: np.ndarray
    crlb_closed: np.ndarray
    lcrlb: np.ndarray
    tag_state: int


def _t_entries(inp: BoundInputs):
    m = np.arange(inp.num_antennas, dtype=np.float64)
    c0 = inp.c0
    c1 = c0 * (np.sin(inp.theta0) - np.sin(inp.theta1))
    c2 = inp.omega0 - inp.omega1
    phase = c1 * m + c2
    sin_sum = float(np.sum(m * np.sin(phase)))
    mm = float(inp.num_antennas)
    sum_m2 = (mm - 1.0) * mm * (2.0 * mm - 1.0) / 6.0  # sum of m^2, m = 0..M-1

    t11 = mm
    t22 = mm
    t12 = float(np.sum(np.cos(phase)))
    t14 = c0 * inp.abs_h1 * sin_sum
    t23 = -c0 * inp.abs_h0 * sin_sum
    t33 = c0**2 * inp.abs_h0**2 * sum_m2
    t34 = c0**2 * inp.abs_h0 * inp.abs_h1 * float(np.sum(m**2 * np.cos(phase)))
    t44 = c0**2 * inp.abs_h1**2 * sum_m2
    return t11, t12, t14, t22, t23, t33, t34, t44


def fisher_matrix(inp: BoundInputs) -> np.ndarray:
    """4x4 Fisher information of phi = [|h0|, |h1|, sin(theta0), sin(theta1)].

    Built as (2*N*P_s/sigma^2) times the symmetric T-matrix whose entries are
    trigonometric sums over the antenna index; the (1,3) and (2,4) blocks
    vanish identically (each gain modulus is orthogonal to its own angle).
    """
    t11, t12, t14, t22, t23, t33, t34, t44 = _t_entries(inp)
    scale = 2.0 * inp.num_pilots * inp.pilot_power / inp.sigma2
    t = np.array(
        [
            [t11, t12, 0.0, t14],
            [t12, t22, t23, 0.0],
            [0.0, t23, t33, t34],
            [t14, 0.0, t34, t44],
        ]
    )
    return scale * t


def crlb_numeric(inp: BoundInputs) -> np.ndarray:
    """Variance bounds on [|h0|, |h1|/eta, theta0, theta1] via matrix inversion."""
    fim = fisher_matrix(inp)
    try:
        inv = np.linalg.inv(fim)
    except np.linalg.LinAlgError:
        inv = None
    # 1-norm condition number; cheaper than an SVD and adequate as a
    # degeneracy guard on a 4x4 matrix.
    cond = np.inf if inv is None else float(
        np.abs(fim).sum(axis=0).max() * np.abs(inv).sum(axis=0).max()
    )
    if not np.isfinite(cond) or cond > CONDITION_LIMIT:
        raise SingularFisherError(
            f"Fisher matrix is singular (condition {cond:.3e}) for "
            f"|h0|={inp.abs_h0:.3g}, |h1|={inp.abs_h1:.3g}, "
            f"theta0={inp.theta0:.4g}, theta1={inp.theta1:.4g}; "
            "coincident angles or a vanishing gain make the two paths inseparable"
        )
    jac = inp.jacobian_diag()
    return jac**2 * np.diag(inv)


def crlb_closed_form(inp: BoundInputs) -> np.ndarray:
    """The same four bounds written as cofactor ratios of the T-matrix.

    The common denominator L1 equals det(T); each numerator is the principal
    cofactor of the bounded parameter.  Matching ``crlb_numeric`` to relative
    1e-8 is the normative correctness check for both routes.
    """
    t11, t12, t14, t22, t23, t33, t34, t44 = _t_entries(inp)
    l1 = (
        t14**2 * (t23**2 - t22 * t33)
        - 2.0 * t12 * t14 * t23 * t34
        + (t12**2 - t11 * t22) * (t34**2 - t33 * t44)
        - t11 * t23**2 * t44
    )
    scale_ref = abs(t11 * t22 * t33 * t44)
    if abs(l1) <= 1e-12 * scale_ref or scale_ref == 0.0:
        raise SingularFisherError(
            f"degenerate geometry: det(T) = {l1:.3e} vanishes relative to the "
            f"diagonal scale {scale_ref:.3e}"
        )
    num = np.array(
        [
            t22 * t33 * t44 - t22 * t34**2 - t23**2 * t44,
            t11 * t33 * t44 - t14**2 * t33 - t11 * t34**2,
            t11 * t22 * t44 - t22 * t14**2 - t12**2 * t44,
            t11 * t22 * t33 - t11 * t23**2 - t12**2 * t33,
        ]
    )
    base = inp.sigma2 / (2.0 * inp.num_pilots * inp.pilot_power)
    return inp.jacobian_diag() ** 2 * base * num / l1


def lcrlb(inp: BoundInputs) -> np.ndarray:
    """Looser bounds from the Fisher diagonal, 1/[I]_kk per parameter.

    Closed forms: sigma^2/(2MNP_s) for |h0|, the same divided by eta^2 for
    |h1|/eta, and 3*lambda^2*sigma^2 / ((2*pi*d)^2 N (M-1)M(2M-1) |h_i|^2
    P_s cos^2(theta_i)) for the two angles.
    """
    mm = float(inp.num_antennas)
    gain_bound = inp.sigma2 / (2.0 * mm * inp.num_pilots * inp.pilot_power)
    angle_base = (
        3.0
        * inp.sigma2
        / (inp.c0**2 * inp.num_pilots * (mm - 1.0) * mm * (2.0 * mm - 1.0) * inp.pilot_power)
    )
    return np.array(
        [
            gain_bound,
            gain_bound / inp.eta**2,
            angle_base / (inp.abs_h0**2 * np.cos(inp.theta0) ** 2) if inp.abs_h0 > 0 else np.inf,
            angle_base / (inp.abs_h1**2 * np.cos(inp.theta1) ** 2) if inp.abs_h1 > 0 else np.inf,
        ]
    )


def bounds_state0(inp: BoundInputs) -> np.ndarray:
    """Bounds for the absorbing state: [var(|h0|) bound, var(theta0) bound].

    With the tag absorbing, the model is a single path and the 2x2 Fisher
    matrix is diagonal, so the bounds equal the first and third LCRLB entries
    of the reflecting state.
    """
    full = lcrlb(inp)
    return np.array([full[0], full[2]])


def compute_bounds(inp: BoundInputs) -> BoundsResult:
    """All reflecting-state bound flavors for one scene, bundled together."""
    return BoundsResult(
        fisher=fisher_matrix(inp),
        crlb_numeric=crlb_numeric(inp),
        crlb_closed=crlb_closed_form(inp),
        lcrlb=lcrlb(inp),
        tag_state=1,
    )
