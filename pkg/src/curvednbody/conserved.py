"""First integrals of the motion and the integral-count audit.

For kappa != 0 the system has one energy integral and six wedge (angular
momentum) integrals.  At kappa = 0 three of the wedge integrals turn into
the linear-momentum integrals, and the center-of-mass integrals appear, for
the classical count of ten.  The ``hybrid`` momenta are the North-Pole-frame
combinations that interpolate the two regimes: they are conserved for every
kappa and reduce exactly to the linear momentum at kappa = 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import FrameMismatch
from .geometry import Curvature, Frame, signed_dot
from .potentials import chordal_potential
from .dynamics import SystemState, state_to_centered, state_to_northpole

WEDGE_NAMES = ("c_wx", "c_wy", "c_wz", "c_xy", "c_xz", "c_yz")


def kinetic_energy(s: SystemState) -> float:
    """Signature-aware kinetic energy in the state's own frame.

    North-Pole frame: 0.5 * sum m*(kappa*r.r + 2|kappa|**0.5*w + 1)*(v.v);
    the prefactor is identically 1 on the constraint set.  Centered frame:
    0.5 * sum kappa*m*(q.q)*(v.v).
    """
    curv = s.curvature
    vsq = signed_dot(s.velocities, s.velocities, curv)
    if s.frame is Frame.NORTH_POLE:
        r2 = signed_dot(s.positions, s.positions, curv)
        pref = curv.kappa * r2 + 2.0 * curv.sqrt_abs * s.positions[:, 3] + 1.0
    else:
        pref = curv.kappa * signed_dot(s.positions, s.positions, curv)
    return float(0.5 * np.sum(s.masses * pref * vsq))


def energy(s: SystemState, check: bool = True) -> float:
    """Total energy H = kinetic - chordal force function."""
    return kinetic_energy(s) - chordal_potential(
        s.positions, s.masses, s.curvature, s.frame, check=check
    )


def wedge_momenta(s: SystemState) -> np.ndarray:
    """The six wedge momenta (c_wx, c_wy, c_wz, c_xy, c_xz, c_yz).

    Requires the centered frame when kappa != 0; evaluable directly at
    kappa = 0 (where the w rows vanish identically).
    """
    if not s.curvature.is_flat and s.frame is not Frame.CENTERED:
        raise FrameMismatch("wedge momenta need centered coordinates for kappa != 0")
    m = s.masses
    x, y, z, w = (s.positions[:, i] for i in range(4))
    vx, vy, vz, vw = (s.velocities[:, i] for i in range(4))
    return np.array(
        [
            np.sum(m * (w * vx - vw * x)),
            np.sum(m * (w * vy - vw * y)),
            np.sum(m * (w * vz - vw * z)),
            np.sum(m * (x * vy - vx * y)),
            np.sum(m * (x * vz - vx * z)),
            np.sum(m * (y * vz - vy * z)),
        ]
    )


def hybrid_momenta(s: SystemState) -> np.ndarray:
    """North-Pole momenta sum(m*v_xyz) + |kappa|**0.5 * sum(m*(w*v_xyz - wdot*xyz)).

    Conserved for every kappa including 0, where they reduce to the linear
    momentum.  State-wise they equal |kappa|**0.5 times the (w, xyz) wedge
    momenta of the frame-shifted state.
    """
    if s.frame is not Frame.NORTH_POLE:
        raise FrameMismatch("hybrid momenta are defined in the North-Pole frame")
    m = s.masses
    om = s.positions[:, 3]
    omdot = s.velocities[:, 3]
    out = np.empty(3)
    for a in range(3):
        out[a] = np.sum(m * s.velocities[:, a]) + s.curvature.sqrt_abs * np.sum(
            m * (om * s.velocities[:, a] - omdot * s.positions[:, a])
        )
    return out


def flat_only_integrals(s: SystemState):
    """Linear momentum and center-of-mass constant of the flat problem.

    Returns (sum m*v_xyz, sum m*r_xyz - momentum * t).  Evaluable at any
    kappa; both are conserved only at kappa = 0.
    """
    m = s.masses[:, np.newaxis]
    momentum = np.sum(m * s.velocities[:, :3], axis=0)
    com_b = np.sum(m * s.positions[:, :3], axis=0) - momentum * s.time
    return momentum, com_b


@dataclass
class ConservedReport:
    """Evaluated first integrals of one state."""

    energy: float
    wedge: np.ndarray            # (6,) ordered as WEDGE_NAMES
    hybrid: np.ndarray           # (3,)
    linear_momentum: np.ndarray  # (3,)
    center_of_mass: np.ndarray   # (3,) the constant b = sum(m r) - p t

    def as_dict(self) -> dict:
        out = {"energy": self.energy}
        out.update(zip(WEDGE_NAMES, (float(v) for v in self.wedge)))
        for name, arr in (
            ("h", self.hybrid),
            ("p", self.linear_momentum),
            ("b", self.center_of_mass),
        ):
            for axis, v in zip("xyz", arr):
                out[f"{name}_{axis}"] = float(v)
        return out


def build_report(s: SystemState, check: bool = True) -> ConservedReport:
    """Evaluate every monitored integral of a state, shifting frames as needed."""
    if s.curvature.is_flat or s.frame is Frame.CENTERED:
        wedge = wedge_momenta(s)
    else:
        wedge = wedge_momenta(state_to_centered(s))
    if s.frame is Frame.NORTH_POLE:
        hybrid = hybrid_momenta(s)
    else:
        hybrid = hybrid_momenta(state_to_northpole(s))
    momentum, com_b = flat_only_integrals(s)
    return ConservedReport(
        energy=energy(s, check=check),
        wedge=wedge,
        hybrid=hybrid,
        linear_momentum=momentum,
        center_of_mass=com_b,
    )


@dataclass
class IntegralRow:
    name: str
    expected_conserved: bool
    initial: float
    final: float
    max_drift: float
    conserved: bool


@dataclass
class AuditResult:
    """Per-integral drift table plus the conserved-count bookkeeping."""

    kappa: float
    rows: list = field(default_factory=list)
    conserved_count: int = 0
    expected_count: int = 0

    @property
    def count_line(self) -> str:
        return f"conserved: {self.conserved_count}/{self.expected_count}"


def _series(reports, pick):
    return np.array([pick(rep) for rep in reports])


def integral_audit(reports, curv: Curvature, drift_tol: float = 1e-6) -> AuditResult:
    """Classify each integral of a sampled trajectory as conserved or not.

    ``reports`` is the per-sample ConservedReport sequence.  The expected
    set has 10 members at kappa = 0 (energy, linear momentum, center of
    mass, three angular momenta) and 7 at kappa != 0 (energy, six wedge).
    Momentum rows are still shown at kappa != 0, flagged as expected
    non-conserved.
    """
    flat = curv.is_flat
    entries = [("energy", True, lambda r: r.energy)]
    if flat:
        for a, axis in enumerate("xyz"):
            entries.append((f"p_{axis}", True, lambda r, a=a: r.linear_momentum[a]))
        for a, axis in enumerate("xyz"):
            entries.append((f"b_{axis}", True, lambda r, a=a: r.center_of_mass[a]))
        for idx in (3, 4, 5):  # c_xy, c_xz, c_yz
            entries.append((WEDGE_NAMES[idx], True, lambda r, idx=idx: r.wedge[idx]))
    else:
        for idx, name in enumerate(WEDGE_NAMES):
            entries.append((name, True, lambda r, idx=idx: r.wedge[idx]))
        for a, axis in enumerate("xyz"):
            entries.append((f"p_{axis}", False, lambda r, a=a: r.linear_momentum[a]))

    result = AuditResult(kappa=curv.kappa)
    for name, expected, pick in entries:
        vals = _series(reports, pick)
        drift = float(np.max(np.abs(vals - vals[0])))
        if name == "energy":
            tol = drift_tol * max(1.0, abs(vals[0]))
        else:
            tol = drift_tol
        row = IntegralRow(
            name=name,
            expected_conserved=expected,
            initial=float(vals[0]),
            final=float(vals[-1]),
            max_drift=drift,
            conserved=drift < tol,
        )
        result.rows.append(row)
        if expected:
            result.expected_count += 1
            if row.conserved:
                result.conserved_count += 1
    return result
