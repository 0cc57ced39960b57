"""Force functions for curved-space gravitation and their gradients.

Three equivalent forms are provided:

* the cotangent force function ``U`` in centered extrinsic coordinates
  (kappa != 0), written through the signed dot products of the bodies;
* the chordal force function ``V`` written through the mutual chordal
  separations, which extends smoothly through kappa = 0 where it reduces
  to the classical Newtonian force function sum(m_i*m_j/r_ij);
* the stereographic form ``W`` for the 2D problem in conformal coordinates,
  kept for validation at small N.

On the manifolds all three take identical values; the test suite pins the
identities.  Conventions: the gravitational constant is 1 and the force
function is the negative of the potential energy (energy = T - V).

All functions are pure; pair terms are accumulated in (i < j) order, so
identical inputs give bit-identical results run to run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    AntipodalSingularity,
    Collision,
    NegativeSeparationSquare,
    OutsideDisk,
    ZeroCurvature,
)
from .geometry import Curvature, Frame, signed_dot

# Default singularity thresholds.  Scenario-driven code rescales the
# collision threshold by the initial configuration's length scale.
COLLISION_TOL = 1e-8
ANTIPODAL_TOL = 1e-12


def _config(positions, masses):
    positions = np.asarray(positions, dtype=float)
    masses = np.asarray(masses, dtype=float)
    if positions.ndim != 2 or positions.shape[1] != 4:
        raise ValueError(f"positions must be (N, 4), got {positions.shape}")
    if masses.shape != (positions.shape[0],):
        raise ValueError("masses length must match number of bodies")
    return positions, masses


def separation_matrix(positions, curv: Curvature, tol: float = 1e-12) -> np.ndarray:
    """Pairwise chordal separations r_ij as an (N, N) matrix (zero diagonal)."""
    positions = np.asarray(positions, dtype=float)
    d = positions[:, np.newaxis, :] - positions[np.newaxis, :, :]
    sq = d[..., 0] ** 2 + d[..., 1] ** 2 + d[..., 2] ** 2
    if curv.kappa != 0.0:
        sq = sq + curv.sigma * d[..., 3] ** 2
    if np.any(sq < 0.0):
        if np.any(sq < -tol):
            raise NegativeSeparationSquare(
                "negative Lorentz separation square beyond tolerance"
            )
        sq = np.maximum(sq, 0.0)
    return np.sqrt(sq)


def _check_pair(i, j, r, curv: Curvature, collision_tol: float):
    if r < collision_tol:
        raise Collision(f"bodies {i} and {j} at separation {r:.3e}")
    if curv.kappa > 0.0 and 1.0 - curv.kappa * r * r / 4.0 < ANTIPODAL_TOL:
        raise AntipodalSingularity(f"bodies {i} and {j} numerically antipodal")


@dataclass
class PairTerms:
    """Per-pair breakdown of the chordal force function (i < j)."""

    i: int
    j: int
    separation: float
    dot: float           # signed dot of the centered position vectors
    contribution: float  # this pair's share of the force function


def pair_breakdown(positions, masses, curv: Curvature, frame: Frame) -> list:
    """Per-pair separations, dots, and energy contributions, in (i < j) order.

    Diagnostic view of the chordal force function; the dots are reported in
    centered coordinates (computed through the frame shift when the input is
    North-Pole data and kappa != 0; at kappa = 0 the dot is of the spatial
    blocks).
    """
    positions, masses = _config(positions, masses)
    if frame is Frame.NORTH_POLE and not curv.is_flat:
        from .geometry import shift_to_centered

        centered = shift_to_centered(positions, curv)
    else:
        centered = positions
    n = len(masses)
    r = separation_matrix(positions, curv)
    out = []
    for i in range(n - 1):
        for j in range(i + 1, n):
            rij = r[i, j]
            krr = curv.kappa * rij * rij
            contrib = masses[i] * masses[j] * (1.0 - 0.5 * krr) / (
                rij * (1.0 - 0.25 * krr) ** 0.5
            )
            out.append(
                PairTerms(
                    i=i,
                    j=j,
                    separation=float(rij),
                    dot=float(signed_dot(centered[i], centered[j], curv)),
                    contribution=float(contrib),
                )
            )
    return out


def chordal_potential(
    positions,
    masses,
    curv: Curvature,
    frame: Frame = Frame.NORTH_POLE,
    check: bool = True,
    collision_tol: float = COLLISION_TOL,
) -> float:
    """Chordal force function, valid for every kappa and in both frames.

    V = sum over pairs of m_i*m_j*(1 - kappa*r**2/2) / (r*sqrt(1 - kappa*r**2/4))
    with r the chordal separation (frame independent).  At kappa = 0 this is
    exactly the Newtonian force function.
    """
    positions, masses = _config(positions, masses)
    del frame  # separations are translation invariant; accepted for symmetry
    n = len(masses)
    r = separation_matrix(positions, curv)
    total = 0.0
    for i in range(n - 1):
        for j in range(i + 1, n):
            rij = r[i, j]
            if check:
                _check_pair(i, j, rij, curv, collision_tol)
            krr = curv.kappa * rij * rij
            # ** 0.5 on the float64 radicand propagates nan for unchecked
            # beyond-antipodal inputs instead of raising mid-evaluation
            total += masses[i] * masses[j] * (1.0 - 0.5 * krr) / (rij * (1.0 - 0.25 * krr) ** 0.5)
    return float(total)


def chordal_accel_terms(
    positions,
    masses,
    curv: Curvature,
    frame: Frame,
    check: bool = True,
    collision_tol: float = COLLISION_TOL,
) -> np.ndarray:
    """Gravitational acceleration rows of the chordal equations of motion.

    For each body i returns

        sum_{j != i} m_j * (p_j - (1 - kappa*r**2/2) * p_i [+ r**2/2 * pole])
                     / (r**3 * (1 - kappa*r**2/4)**1.5)

    where the pole correction (0, 0, 0, sigma*|kappa|**0.5) * r**2/2 is
    present only in the North-Pole frame.  At kappa = 0 (North-Pole) the
    expression is exactly the Newtonian sum m_j*(p_j - p_i)/r**3.  Pairs are
    accumulated in (i < j) order so results are reproducible bit for bit.

    With ``check=False`` invalid geometry (off-sheet Lorentz separations,
    coincident bodies) yields non-finite rows rather than exceptions, so
    adaptive integrators can reject the step.
    """
    positions, masses = _config(positions, masses)
    n = len(masses)
    # unchecked trial evaluations may sit far off-manifold; clamp instead of raise
    r = separation_matrix(positions, curv, tol=1e-12 if check else math.inf)
    pole = np.zeros(4)
    if frame is Frame.NORTH_POLE:
        pole[3] = curv.sigma * curv.sqrt_abs
    accel = np.zeros((n, 4))
    for i in range(n - 1):
        for j in range(i + 1, n):
            rij = r[i, j]
            if check:
                _check_pair(i, j, rij, curv, collision_tol)
            r2 = rij * rij
            coef = 1.0 - 0.5 * curv.kappa * r2
            denom = rij ** 3 * (1.0 - 0.25 * curv.kappa * r2) ** 1.5
            extra = 0.5 * r2 * pole
            accel[i] += masses[j] * (positions[j] - coef * positions[i] + extra) / denom
            accel[j] += masses[i] * (positions[i] - coef * positions[j] + extra) / denom
    return accel


def cotangent_potential(
    positions,
    masses,
    curv: Curvature,
    check: bool = True,
    collision_tol: float = COLLISION_TOL,
) -> float:
    """Cotangent force function in centered coordinates (kappa != 0).

    U = sum over pairs of m_i*m_j*|kappa|**0.5 * k*q_ij
        / |(k*q_i.q_i)(k*q_j.q_j) - (k*q_ij)**2|**0.5,   k = kappa.

    On the manifold a unit-mass pair at geodesic distance d contributes
    sqrt(kappa)*cot(sqrt(kappa)*d) for kappa > 0 and the coth analogue for
    kappa < 0.  The general (off-manifold) expression is kept so that finite
    differences of U are meaningful.
    """
    positions, masses = _config(positions, masses)
    if curv.is_flat:
        raise ZeroCurvature("cotangent force function needs kappa != 0")
    n = len(masses)
    k = curv.kappa
    total = 0.0
    for i in range(n - 1):
        for j in range(i + 1, n):
            qi2 = k * signed_dot(positions[i], positions[i], curv)
            qj2 = k * signed_dot(positions[j], positions[j], curv)
            qij = k * signed_dot(positions[i], positions[j], curv)
            if check:
                r2 = (qi2 + qj2 - 2.0 * qij) / k
                _check_pair(i, j, math.sqrt(max(r2, 0.0)), curv, collision_tol)
            total += masses[i] * masses[j] * curv.sqrt_abs * qij / math.sqrt(abs(qi2 * qj2 - qij * qij))
    return total


def cotangent_gradient(
    positions,
    masses,
    curv: Curvature,
    check: bool = True,
    collision_tol: float = COLLISION_TOL,
) -> np.ndarray:
    """Per-body gradient of the cotangent force function on the manifold.

    grad_i = sum_{j != i} m_i*m_j*|kappa|**1.5 * (q_j - (k*q_ij) q_i)
             / |1 - (k*q_ij)**2|**1.5

    (the on-manifold reduction; assumes kappa * q.q = 1).  Each row is
    tangent: signed_dot(q_i, grad_i) = 0.
    """
    positions, masses = _config(positions, masses)
    if curv.is_flat:
        raise ZeroCurvature("cotangent gradient needs kappa != 0")
    n = len(masses)
    k = curv.kappa
    scale = curv.sqrt_abs ** 3
    grad = np.zeros((n, 4))
    for i in range(n - 1):
        for j in range(i + 1, n):
            kqij = k * signed_dot(positions[i], positions[j], curv)
            if check:
                r2 = (2.0 - 2.0 * kqij) / k
                _check_pair(i, j, math.sqrt(max(r2, 0.0)), curv, collision_tol)
            common = masses[i] * masses[j] * scale / abs(1.0 - kqij * kqij) ** 1.5
            grad[i] += common * (positions[j] - kqij * positions[i])
            grad[j] += common * (positions[i] - kqij * positions[j])
    return grad


def _stereo_pair_terms(zi: complex, zj: complex, k: float):
    """A_ij and B_ij of the stereographic force function."""
    inv = 1.0 / k
    a = (abs(zi) ** 2 + inv) * (abs(zj) ** 2 + inv)
    b = 2.0 * inv * (zi * zj.conjugate() + zj * zi.conjugate()).real + (
        abs(zi) ** 2 - inv
    ) * (abs(zj) ** 2 - inv)
    return a, b


def _check_disk(zs, curv: Curvature):
    if curv.kappa < 0.0:
        bound = 1.0 / (-curv.kappa)
        for idx, z in enumerate(zs):
            if abs(z) ** 2 >= bound:
                raise OutsideDisk(f"body {idx} at |z|**2 = {abs(z) ** 2:.6g} outside the disk")


def stereo_potential(zs, masses, curv: Curvature, check: bool = True) -> float:
    """Force function of the 2D problem in stereographic coordinates.

    W = sum over pairs of |kappa|**0.5 * m_i*m_j*B_ij / |A_ij**2 - B_ij**2|**0.5
    with A_ij = (|z_i|**2 + 1/k)(|z_j|**2 + 1/k) and
    B_ij = (2/k)(z_i*conj(z_j) + z_j*conj(z_i)) + (|z_i|**2 - 1/k)(|z_j|**2 - 1/k).
    Equals the cotangent force function of the lifted configuration.
    """
    zs = [complex(z) for z in zs]
    masses = np.asarray(masses, dtype=float)
    if curv.is_flat:
        raise ZeroCurvature("stereographic force function needs kappa != 0")
    if check:
        _check_disk(zs, curv)
    n = len(zs)
    total = 0.0
    for i in range(n - 1):
        for j in range(i + 1, n):
            a, b = _stereo_pair_terms(zs[i], zs[j], curv.kappa)
            total += curv.sqrt_abs * masses[i] * masses[j] * b / math.sqrt(abs(a * a - b * b))
    return total


def stereo_gradient_zbar(zs, masses, curv: Curvature, check: bool = True) -> np.ndarray:
    """Conjugate Wirtinger derivative dW/d(conj(z_i)) of the stereographic
    force function, one complex value per body.

    Closed form (derived by differentiating W; cross-checked in the tests
    against central finite differences and against the pushforward of the
    extrinsic equations):

        dW/dzbar_i = sum_{j != i} 2*sigma*|kappa|**0.5 / kappa**2 * m_i*m_j
                     * (|z_i|**2 + 1/k) * (|z_j|**2 + 1/k)**2
                     * (z_j - z_i) * (1 + k*z_i*conj(z_j))
                     / |A_ij**2 - B_ij**2|**1.5
    """
    zs = [complex(z) for z in zs]
    masses = np.asarray(masses, dtype=float)
    if curv.is_flat:
        raise ZeroCurvature("stereographic gradient needs kappa != 0")
    if check:
        _check_disk(zs, curv)
    n = len(zs)
    k = curv.kappa
    inv = 1.0 / k
    pref = 2.0 * curv.sigma * curv.sqrt_abs / (k * k)
    grad = np.zeros(n, dtype=complex)
    for i in range(n):
        for j in range(n):
            if j == i:
                continue
            a, b = _stereo_pair_terms(zs[i], zs[j], k)
            num = (
                (abs(zs[i]) ** 2 + inv)
                * (abs(zs[j]) ** 2 + inv) ** 2
                * (zs[j] - zs[i])
                * (1.0 + k * zs[i] * zs[j].conjugate())
            )
            grad[i] += pref * masses[i] * masses[j] * num / abs(a * a - b * b) ** 1.5
    return grad
