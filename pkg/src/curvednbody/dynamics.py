"""Right-hand sides for the equations of motion in all five formulations.

The production path is the curvature-unified North-Pole system, defined for
every kappa and reducing exactly to Newton's equations at kappa = 0.  The
centered extrinsic, shifted extrinsic, and intrinsic 2D systems are kept as
independent cross-checks; they are algebraically equivalent where defined
and the test suite pins the equivalences numerically.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .errors import Collision, FormulationInvalidAtKappa, FrameMismatch, ZeroCurvature
from .geometry import (
    Curvature,
    Frame,
    constraint_residuals_centered,
    constraint_residuals_northpole,
    shift_to_centered,
    shift_to_northpole,
    signed_dot,
)
from .potentials import (
    COLLISION_TOL,
    _check_pair,
    chordal_accel_terms,
    cotangent_gradient,
    separation_matrix,
    stereo_gradient_zbar,
)

# Residual level above which a state no longer counts as constrained.
STATE_TOL = 1e-8


class Formulation(enum.Enum):
    UNIFIED = "unified"
    CENTERED_EXTRINSIC = "centered_extrinsic"
    NORTHPOLE_EXTRINSIC = "northpole_extrinsic"
    INTRINSIC_2D = "intrinsic_2d"
    NEWTONIAN = "newtonian"

    def valid_at(self, curv: Curvature) -> bool:
        if self is Formulation.UNIFIED:
            return True
        if self is Formulation.NEWTONIAN:
            return curv.is_flat
        return not curv.is_flat

    @property
    def frame(self) -> Frame:
        """Coordinate frame the formulation's state must carry."""
        if self is Formulation.CENTERED_EXTRINSIC:
            return Frame.CENTERED
        return Frame.NORTH_POLE


@dataclass
class SystemState:
    """Masses, ambient positions/velocities, time, curvature, and frame.

    positions and velocities are (N, 4) float arrays; masses is (N,).
    """

    masses: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    time: float
    curvature: Curvature
    frame: Frame

    def __post_init__(self):
        self.masses = np.asarray(self.masses, dtype=float)
        self.positions = np.asarray(self.positions, dtype=float)
        self.velocities = np.asarray(self.velocities, dtype=float)
        n = self.masses.shape[0]
        if self.positions.shape != (n, 4) or self.velocities.shape != (n, 4):
            raise ValueError(
                f"positions/velocities must be ({n}, 4), got "
                f"{self.positions.shape} and {self.velocities.shape}"
            )
        if self.frame is Frame.CENTERED and self.curvature.is_flat:
            raise FrameMismatch("the centered frame does not exist at kappa = 0")

    @property
    def n_bodies(self) -> int:
        return self.masses.shape[0]

    def copy_with(self, positions=None, velocities=None, time=None) -> "SystemState":
        return replace(
            self,
            positions=self.positions if positions is None else positions,
            velocities=self.velocities if velocities is None else velocities,
            time=self.time if time is None else time,
        )

    def constraint_residual_max(self) -> float:
        """Largest constraint residual over all bodies (both constraints)."""
        if self.frame is Frame.NORTH_POLE:
            if self.curvature.is_flat:
                return max(
                    float(np.max(np.abs(self.positions[:, 3]), initial=0.0)),
                    float(np.max(np.abs(self.velocities[:, 3]), initial=0.0)),
                )
            r1, r2 = constraint_residuals_northpole(
                self.positions, self.velocities, self.curvature
            )
        else:
            r1, r2 = constraint_residuals_centered(
                self.positions, self.velocities, self.curvature
            )
        return float(max(np.max(np.abs(r1)), np.max(np.abs(r2))))

    def validate(self, tol: float = STATE_TOL) -> None:
        """Raise if the state violates finiteness, positivity, or constraints."""
        if not np.all(np.isfinite(self.positions)) or not np.all(np.isfinite(self.velocities)):
            raise ValueError("non-finite position or velocity component")
        if not np.all(self.masses > 0.0):
            raise ValueError("masses must be strictly positive")
        res = self.constraint_residual_max()
        if self.curvature.is_flat and self.frame is Frame.NORTH_POLE:
            if res != 0.0:
                raise ValueError(
                    f"kappa = 0 states must have w = wdot = 0 exactly (residual {res:.3e})"
                )
        elif res > tol:
            raise ValueError(f"constraint residual {res:.3e} exceeds tolerance {tol:.1e}")


def state_to_centered(s: SystemState) -> SystemState:
    if s.frame is Frame.CENTERED:
        return s
    return SystemState(
        s.masses,
        shift_to_centered(s.positions, s.curvature),
        s.velocities.copy(),
        s.time,
        s.curvature,
        Frame.CENTERED,
    )


def state_to_northpole(s: SystemState) -> SystemState:
    if s.frame is Frame.NORTH_POLE:
        return s
    return SystemState(
        s.masses,
        shift_to_northpole(s.positions, s.curvature),
        s.velocities.copy(),
        s.time,
        s.curvature,
        Frame.NORTH_POLE,
    )


def _require(s: SystemState, formulation: Formulation):
    if not formulation.valid_at(s.curvature):
        raise FormulationInvalidAtKappa(
            f"{formulation.value} is not defined at kappa = {s.curvature.kappa}"
        )
    if s.frame is not formulation.frame:
        raise FrameMismatch(
            f"{formulation.value} expects the {formulation.frame.value} frame, "
            f"state is in {s.frame.value}"
        )


def pole_vector(curv: Curvature) -> np.ndarray:
    """The fixed ambient vector (0, 0, 0, sigma * |kappa|**0.5)."""
    out = np.zeros(4)
    out[3] = curv.sigma * curv.sqrt_abs
    return out


def _accel_unified(positions, velocities, masses, curv, check, collision_tol):
    grav = chordal_accel_terms(
        positions, masses, curv, Frame.NORTH_POLE, check=check, collision_tol=collision_tol
    )
    vsq = signed_dot(velocities, velocities, curv)
    return grav - vsq[:, np.newaxis] * (curv.kappa * positions + pole_vector(curv))


def accel_unified(s: SystemState, check: bool = True, collision_tol: float = COLLISION_TOL) -> np.ndarray:
    """Accelerations of the curvature-unified system (North-Pole frame, any kappa).

    rddot_i = gravitational chordal terms - (rdot_i . rdot_i)(kappa r_i + pole).
    At kappa = 0 the w components are exactly zero and the x, y, z parts are
    the Newtonian right-hand side.
    """
    _require(s, Formulation.UNIFIED)
    return _accel_unified(s.positions, s.velocities, s.masses, s.curvature, check, collision_tol)


def _accel_centered(positions, velocities, masses, curv, check, collision_tol):
    grad = cotangent_gradient(positions, masses, curv, check=check, collision_tol=collision_tol)
    vsq = signed_dot(velocities, velocities, curv)
    return grad / masses[:, np.newaxis] - curv.kappa * vsq[:, np.newaxis] * positions


def accel_centered(s: SystemState, check: bool = True, collision_tol: float = COLLISION_TOL) -> np.ndarray:
    """Accelerations of the centered extrinsic system (kappa != 0).

    m_i qddot_i = grad_i U - kappa m_i (qdot_i . qdot_i) q_i.
    """
    _require(s, Formulation.CENTERED_EXTRINSIC)
    return _accel_centered(s.positions, s.velocities, s.masses, s.curvature, check, collision_tol)


def _accel_northpole(positions, velocities, masses, curv, check, collision_tol):
    if check:
        _check_separations(positions, curv, collision_tol)
    n = len(masses)
    k = curv.kappa
    inv_sqrt = 1.0 / curv.sqrt_abs
    scale = curv.sqrt_abs ** 3
    accel = np.zeros((n, 4))
    for i in range(n):
        for j in range(n):
            if j == i:
                continue
            bracket = (
                k * signed_dot(positions[i], positions[j], curv)
                + curv.sqrt_abs * (positions[i, 3] + positions[j, 3])
                + 1.0
            )
            denom = abs(1.0 - bracket * bracket) ** 1.5
            num = positions[j] - bracket * positions[i]
            # the w row carries the unshifted coordinate w + |kappa|**-0.5
            num[3] = positions[j, 3] + inv_sqrt - bracket * (positions[i, 3] + inv_sqrt)
            accel[i] += masses[j] * scale * num / denom
    vsq = signed_dot(velocities, velocities, curv)
    vterm = k * positions.copy()
    vterm[:, 3] = k * (positions[:, 3] + inv_sqrt)
    return accel - vsq[:, np.newaxis] * vterm


def _check_separations(positions, curv: Curvature, collision_tol: float):
    r = separation_matrix(positions, curv)
    n = positions.shape[0]
    for i in range(n - 1):
        for j in range(i + 1, n):
            _check_pair(i, j, r[i, j], curv, collision_tol)


def accel_northpole_extrinsic(
    s: SystemState, check: bool = True, collision_tol: float = COLLISION_TOL
) -> np.ndarray:
    """Accelerations of the shifted extrinsic system (North-Pole frame, kappa != 0).

    The four-component system written directly in the shifted coordinates;
    equal to :func:`accel_unified` on constraint-satisfying states.
    """
    _require(s, Formulation.NORTHPOLE_EXTRINSIC)
    return _accel_northpole(s.positions, s.velocities, s.masses, s.curvature, check, collision_tol)


def _accel_newtonian(positions, velocities, masses, check, collision_tol):
    del velocities
    n = len(masses)
    flat = Curvature(0.0)
    r = separation_matrix(positions, flat)
    accel = np.zeros((n, 4))
    for i in range(n - 1):
        for j in range(i + 1, n):
            rij = r[i, j]
            if check and rij < collision_tol:
                raise Collision(f"bodies {i} and {j} at separation {rij:.3e}")
            denom = rij ** 3
            accel[i] += masses[j] * (positions[j] - positions[i]) / denom
            accel[j] += masses[i] * (positions[i] - positions[j]) / denom
    accel[:, 3] = 0.0
    return accel


def accel_newtonian(s: SystemState, check: bool = True, collision_tol: float = COLLISION_TOL) -> np.ndarray:
    """Classical Newtonian accelerations (kappa = 0, w components zero)."""
    _require(s, Formulation.NEWTONIAN)
    return _accel_newtonian(s.positions, s.velocities, s.masses, check, collision_tol)


def accel_intrinsic_2d(zs, zdots, masses, curv: Curvature, check: bool = True) -> np.ndarray:
    """Complex accelerations of the 2D problem in stereographic coordinates.

    m_i zddot_i = (kappa|z_i|**2 + 1)**2 / 2 * dW/dzbar_i
                  + 2*kappa*m_i*conj(z_i)*zdot_i**2 / (kappa|z_i|**2 + 1)

    The velocity term is the conformal geodesic term, coefficient 2*kappa
    for both signs of the curvature (see NOTES.md for the cross-checks that
    pinned this and the gradient's closed form).
    """
    if curv.is_flat:
        raise ZeroCurvature("intrinsic 2D formulation needs kappa != 0")
    zs = np.asarray(zs, dtype=complex)
    zdots = np.asarray(zdots, dtype=complex)
    masses = np.asarray(masses, dtype=float)
    grad = stereo_gradient_zbar(zs, masses, curv, check=check)
    conf = curv.kappa * np.abs(zs) ** 2 + 1.0
    force = conf ** 2 / 2.0 * grad / masses
    geodesic = 2.0 * curv.kappa * np.conj(zs) * zdots ** 2 / conf
    return force + geodesic


def stereo_pushforward(positions_centered, velocities, accelerations, curv: Curvature):
    """Chain-rule image of planar extrinsic motion in stereographic coordinates.

    The bodies must move on the z = 0 slice of the centered-frame manifold
    (the 2D manifold with coordinates (x, y, w)).  Given positions,
    velocities, and accelerations, returns the complex (z, zdot, zddot)
    arrays of the projected motion.  This is the independent oracle for the
    intrinsic 2D equations.
    """
    if curv.is_flat:
        raise ZeroCurvature("stereographic pushforward needs kappa != 0")
    p = np.asarray(positions_centered, dtype=float)
    v = np.asarray(velocities, dtype=float)
    a = np.asarray(accelerations, dtype=float)
    if np.max(np.abs(p[:, 2]), initial=0.0) > 1e-12 or np.max(np.abs(v[:, 2]), initial=0.0) > 1e-12:
        raise ValueError("pushforward requires motion in the z = 0 slice")
    sb = curv.sigma * curv.sqrt_abs
    xy = p[:, 0] + 1j * p[:, 1]
    vxy = v[:, 0] + 1j * v[:, 1]
    axy = a[:, 0] + 1j * a[:, 1]
    d = 1.0 - sb * p[:, 3]
    zs = xy / d
    zdots = vxy / d + xy * sb * v[:, 3] / d**2
    zddots = (
        axy / d
        + 2.0 * vxy * sb * v[:, 3] / d**2
        + xy * (sb * a[:, 3] / d**2 + 2.0 * abs(curv.kappa) * v[:, 3] ** 2 / d**3)
    )
    return zs, zdots, zddots


_KERNELS = {
    Formulation.UNIFIED: _accel_unified,
    Formulation.CENTERED_EXTRINSIC: _accel_centered,
    Formulation.NORTHPOLE_EXTRINSIC: _accel_northpole,
}


def acceleration_kernel(formulation: Formulation):
    """Raw (non-raising) acceleration evaluator for the integrator hot path.

    Returns f(positions, velocities, masses, curv) -> (N, 4).  Singular or
    off-manifold inputs produce non-finite values instead of exceptions;
    the integrator rejects such steps.
    """
    if formulation is Formulation.NEWTONIAN:
        return lambda p, v, m, c: _accel_newtonian(p, v, m, check=False, collision_tol=0.0)
    if formulation is Formulation.INTRINSIC_2D:
        raise FormulationInvalidAtKappa(
            "the intrinsic 2D system integrates complex states; see cli.compare"
        )
    kern = _KERNELS[formulation]
    return lambda p, v, m, c: kern(p, v, m, c, False, 0.0)


def acceleration(s: SystemState, formulation: Formulation, check: bool = True) -> np.ndarray:
    """Dispatch to the formulation's public acceleration function."""
    if formulation is Formulation.UNIFIED:
        return accel_unified(s, check=check)
    if formulation is Formulation.CENTERED_EXTRINSIC:
        return accel_centered(s, check=check)
    if formulation is Formulation.NORTHPOLE_EXTRINSIC:
        return accel_northpole_extrinsic(s, check=check)
    if formulation is Formulation.NEWTONIAN:
        return accel_newtonian(s, check=check)
    raise FormulationInvalidAtKappa("intrinsic 2D does not act on ambient states")
