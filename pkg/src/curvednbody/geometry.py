"""Signature-aware linear algebra on constant-curvature spaces.

Points live on the 3-sphere (kappa > 0), in flat space (kappa = 0), or on
the hyperbolic 3-sphere (kappa < 0), all embedded in a 4-component ambient
space.  An "ambient vector" throughout this package is a float array of
shape (4,) holding (x, y, z, w); stacked configurations are (N, 4) arrays.
The ambient inner product carries the signature (+, +, +, sigma): Euclidean
for kappa >= 0 and Lorentz for kappa < 0.

Two coordinate frames are used:

* ``Frame.CENTERED`` - origin at the center of the sphere/hyperboloid,
  manifold equation kappa * (q . q) = 1.  Only meaningful for kappa != 0.
* ``Frame.NORTH_POLE`` - origin shifted to (0, 0, 0, |kappa|**-0.5), the
  one point shared by all the manifolds as kappa varies.  Valid for every
  kappa, including 0 (where the last component is identically zero).

Everything here is a pure function of its inputs and safe to call from any
number of threads.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AtProjectionPole,
    NegativeSeparationSquare,
    OffManifold,
    OutsideDisk,
    SingularMetric,
    ZeroCurvature,
    ZeroCurvatureShift,
)

# Relative slack accepted when clamping inverse trig/cosh arguments; beyond
# this the input is treated as genuinely off-manifold rather than round-off.
CLAMP_TOL = 1e-9


@dataclass(frozen=True)
class Curvature:
    """Curvature parameter kappa with its sign and length scale.

    Attributes
    ----------
    kappa : float
        Gaussian curvature, any real number (units 1/length**2).
    sigma : int
        +1 for kappa >= 0, -1 for kappa < 0; selects the inner-product
        signature.
    sqrt_abs : float
        |kappa|**0.5, the inverse radius scale.
    """

    kappa: float
    sigma: int = field(init=False)
    sqrt_abs: float = field(init=False)

    def __post_init__(self):
        k = float(self.kappa)
        if not math.isfinite(k):
            raise ValueError(f"curvature must be finite, got {self.kappa!r}")
        object.__setattr__(self, "kappa", k)
        object.__setattr__(self, "sigma", 1 if k >= 0 else -1)
        object.__setattr__(self, "sqrt_abs", math.sqrt(abs(k)))

    @property
    def is_flat(self) -> bool:
        return self.kappa == 0.0


class Frame(enum.Enum):
    """Coordinate frame tag; explicit state, never inferred from values."""

    CENTERED = "centered"
    NORTH_POLE = "north_pole"


def signed_dot(a, b, curv: Curvature):
    """Inner product a . b with signature (+, +, +, sigma).

    Broadcasts over leading axes, so (N, 4) inputs give (N,) outputs.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return (
        a[..., 0] * b[..., 0]
        + a[..., 1] * b[..., 1]
        + a[..., 2] * b[..., 2]
        + curv.sigma * a[..., 3] * b[..., 3]
    )


def pair_separation(a, b, curv: Curvature, tol: float = 1e-12) -> float:
    """Chordal separation r_ij between two ambient points.

    Three-case rule: full 4-component Euclidean norm for kappa > 0, the
    3-component norm (w difference dropped) for kappa = 0, and the Lorentz
    pseudo-norm for kappa < 0.  The kappa = 0 branch is exact, not a limit.
    """
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    sq = d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
    if curv.kappa != 0.0:
        sq += curv.sigma * d[3] * d[3]
    if sq < 0.0:
        if sq < -tol:
            raise NegativeSeparationSquare(
                f"Lorentz separation square {sq:.3e} < -{tol:.1e}; "
                "points are not on the hyperbolic sphere"
            )
        sq = 0.0
    return math.sqrt(sq)


def geodesic_distance(a, b, curv: Curvature, tol: float = CLAMP_TOL) -> float:
    """Arc distance between two centered-frame points on the manifold.

    kappa > 0: |kappa|**-0.5 * arccos(kappa * a.b), kappa = 0: Euclidean
    |a - b|, kappa < 0: |kappa|**-0.5 * arccosh(kappa * a.b).  Arguments are
    clamped within ``tol`` (relative); beyond that raises OffManifold.
    North-Pole data must be frame-shifted to centered coordinates first.
    """
    if curv.is_flat:
        d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
        return math.sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2])
    arg = curv.kappa * float(signed_dot(a, b, curv))
    if curv.kappa > 0.0:
        if abs(arg) > 1.0 + tol:
            raise OffManifold(f"arccos argument {arg!r} exceeds [-1, 1] beyond tolerance")
        arg = min(1.0, max(-1.0, arg))
        return math.acos(arg) / curv.sqrt_abs
    if arg < 1.0 - tol:
        raise OffManifold(f"arccosh argument {arg!r} below 1 beyond tolerance")
    return math.acosh(max(arg, 1.0)) / curv.sqrt_abs


def constraint_residuals_northpole(pos, vel, curv: Curvature):
    """Residuals of the manifold and tangency constraints, North-Pole frame.

    Returns the pair::

        (kappa * r.r + 2 |kappa|**0.5 * w,
         sigma * |kappa|**0.5 * r.rdot + wdot)

    Both vanish on the tangent bundle of the curvature-kappa manifold and
    are identically zero for kappa = 0 states with w = wdot = 0.  The dots
    are signature-aware.  Broadcasts over leading axes.
    """
    pos = np.asarray(pos, dtype=float)
    vel = np.asarray(vel, dtype=float)
    r2 = signed_dot(pos, pos, curv)
    rdr = signed_dot(pos, vel, curv)
    res1 = curv.kappa * r2 + 2.0 * curv.sqrt_abs * pos[..., 3]
    res2 = curv.sigma * curv.sqrt_abs * rdr + vel[..., 3]
    return res1, res2


def constraint_residuals_centered(pos, vel, curv: Curvature):
    """Residuals (kappa * q.q - 1, q.qdot) of the centered-frame constraints."""
    if curv.is_flat:
        raise ZeroCurvature("centered-frame constraints need kappa != 0")
    pos = np.asarray(pos, dtype=float)
    vel = np.asarray(vel, dtype=float)
    return curv.kappa * signed_dot(pos, pos, curv) - 1.0, signed_dot(pos, vel, curv)


def shift_to_northpole(pos_centered, curv: Curvature) -> np.ndarray:
    """Shift centered coordinates to the North-Pole frame (w -> w - |kappa|**-0.5).

    x, y, z are unchanged; velocities need no shift.  Requires kappa != 0.
    """
    if curv.is_flat:
        raise ZeroCurvatureShift("frame shift undefined at kappa = 0")
    out = np.array(pos_centered, dtype=float, copy=True)
    out[..., 3] -= 1.0 / curv.sqrt_abs
    return out


def shift_to_centered(pos_northpole, curv: Curvature) -> np.ndarray:
    """Inverse of :func:`shift_to_northpole`."""
    if curv.is_flat:
        raise ZeroCurvatureShift("frame shift undefined at kappa = 0")
    out = np.array(pos_northpole, dtype=float, copy=True)
    out[..., 3] += 1.0 / curv.sqrt_abs
    return out


def normalize_to_manifold(pos_centered, curv: Curvature) -> np.ndarray:
    """Rescale centered points onto kappa * q.q = 1 along the ambient ray.

    Works for both signs of kappa (Lorentz normalization when kappa < 0).
    Broadcasts over leading axes.
    """
    if curv.is_flat:
        raise ZeroCurvature("nothing to normalize at kappa = 0")
    pos = np.asarray(pos_centered, dtype=float)
    s2 = curv.kappa * signed_dot(pos, pos, curv)
    if np.any(s2 <= 0.0):
        raise OffManifold("cannot normalize: kappa * q.q <= 0")
    return pos / np.sqrt(s2)[..., np.newaxis]


def project_velocity_to_tangent(pos_centered, vel, curv: Curvature) -> np.ndarray:
    """Remove the constraint-normal component: v -> v - kappa (q.v) q.

    Exact tangency (q.v = 0) holds when the position is normalized.
    """
    pos = np.asarray(pos_centered, dtype=float)
    vel = np.asarray(vel, dtype=float)
    qv = curv.kappa * signed_dot(pos, vel, curv)
    return vel - qv[..., np.newaxis] * pos


def stereo_project(p, curv: Curvature, tol: float = 1e-12):
    """Stereographic projection of a point on the 2D manifold.

    ``p`` is (x, y, z) with x**2 + y**2 + sigma*z**2 = 1/kappa.  Returns
    (u, v) = (x, y) / (1 - sigma * |kappa|**0.5 * z).  For kappa < 0 the
    image lies in the open disk of radius (-kappa)**-0.5.
    """
    if curv.is_flat:
        raise ZeroCurvature("stereographic projection needs kappa != 0")
    p = np.asarray(p, dtype=float)
    denom = 1.0 - curv.sigma * curv.sqrt_abs * p[2]
    if abs(denom) < tol:
        raise AtProjectionPole(f"projection denominator {denom:.3e} below tolerance")
    return p[0] / denom, p[1] / denom


def stereo_lift(u: float, v: float, curv: Curvature) -> np.ndarray:
    """Inverse stereographic projection onto the 2D manifold.

    Returns (x, y, z) with x**2 + y**2 + sigma*z**2 = 1/kappa.  For
    kappa < 0 the input must satisfy u**2 + v**2 < (-kappa)**-1.
    """
    if curv.is_flat:
        raise ZeroCurvature("stereographic lift needs kappa != 0")
    rho2 = u * u + v * v
    if curv.kappa < 0.0 and rho2 >= 1.0 / (-curv.kappa):
        raise OutsideDisk(
            f"u**2 + v**2 = {rho2:.6g} is not inside the disk of radius "
            f"{(-curv.kappa) ** -0.5:.6g}"
        )
    m = 1.0 + curv.kappa * rho2
    z = (curv.kappa * rho2 - 1.0) / (curv.sqrt_abs ** 3 * rho2 + curv.sigma * curv.sqrt_abs)
    return np.array([2.0 * u / m, 2.0 * v / m, z])


def conformal_factor(u: float, v: float, curv: Curvature, tol: float = 1e-12) -> float:
    """Conformal metric factor 4 / (1 + kappa*(u**2 + v**2))**2."""
    m = 1.0 + curv.kappa * (u * u + v * v)
    if abs(m) < tol:
        raise SingularMetric(f"1 + kappa*(u**2+v**2) = {m:.3e} below tolerance")
    return 4.0 / (m * m)
