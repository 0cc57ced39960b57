"""Time integration with constraint projection and singularity detection.

Two schemes are provided: a classic fixed-step RK4 and an embedded
Dormand-Prince 5(4) pair with standard step-size control.  Both operate on
the packed state vector [positions.ravel(), velocities.ravel()].  After
each accepted step the state can be projected back onto the constraint
manifold (positions renormalized along the ambient ray in centered
coordinates, velocities projected onto the tangent space), and pair
separations are scanned for singular approaches.  Singularity and
regularity thresholds follow the force-function module, rescaled by the
initial configuration's length scale.

A single trajectory is sequential in time; independent integrations share
no mutable state and may run in parallel.  Results are deterministic for a
given (state, formulation, config) triple.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    FormulationInvalidAtKappa,
    FrameMismatch,
    MaxStepsExceeded,
    SingularityReached,
    StepUnderflow,
)
from .geometry import (
    Frame,
    normalize_to_manifold,
    project_velocity_to_tangent,
    shift_to_centered,
    shift_to_northpole,
)
from .potentials import ANTIPODAL_TOL, COLLISION_TOL, separation_matrix
from .conserved import ConservedReport, build_report
from .dynamics import Formulation, SystemState, acceleration_kernel

SCHEME_FIXED_RK4 = "fixed_rk4"
SCHEME_ADAPTIVE_RK45 = "adaptive_rk45"
PROJECTION_NONE = "none"
PROJECTION_POST_STEP = "post_step"

FLAG_COLLISION = "collision_near"
FLAG_ANTIPODAL = "antipodal_near"

# Margin factor for the "near singular" warning flags relative to the hard
# termination thresholds.
NEAR_FACTOR = 1e4
# Step underflow threshold relative to the local time scale.
UNDERFLOW_REL = 1e-14

# Dormand-Prince 5(4) tableau.
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_ERR = _DP_B5 - np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)


@dataclass
class IntegratorConfig:
    """Scheme selection and control parameters.

    ``step`` is the fixed-scheme step size and the adaptive scheme's initial
    trial step.  ``projection`` re-imposes the manifold/tangency constraints
    after every accepted step when set to "post_step".
    """

    scheme: str = SCHEME_ADAPTIVE_RK45
    step: float = 0.01
    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    projection: str = PROJECTION_POST_STEP
    max_steps: int = 1_000_000

    def __post_init__(self):
        if self.scheme not in (SCHEME_FIXED_RK4, SCHEME_ADAPTIVE_RK45):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.projection not in (PROJECTION_NONE, PROJECTION_POST_STEP):
            raise ValueError(f"unknown projection mode {self.projection!r}")
        if not self.step > 0.0:
            raise ValueError("step must be positive")
        if not (0.0 < self.rel_tol < 1.0 and 0.0 < self.abs_tol < 1.0):
            raise ValueError("tolerances must lie in (0, 1)")
        if self.max_steps <= 0:
            raise ValueError("max_steps must be positive")


@dataclass
class StepOutcome:
    """Result of one accepted step."""

    state: SystemState
    accepted_step: float
    residual_before_projection: float
    constraint_residual_max: float
    singular_flag: str | None = None


@dataclass
class Trajectory:
    """Sampled output of :func:`integrate`."""

    samples: list
    reports: list
    residuals: list
    status: str                      # "completed" or "singular"
    termination_reason: str | None
    steps_taken: int
    drift: dict

    @property
    def times(self) -> np.ndarray:
        return np.array([s.time for s in self.samples])

    @property
    def final_state(self) -> SystemState:
        return self.samples[-1]


def _pack(state: SystemState) -> np.ndarray:
    return np.concatenate([state.positions.ravel(), state.velocities.ravel()])


def _unpack(y: np.ndarray, n: int):
    return y[: 4 * n].reshape(n, 4), y[4 * n :].reshape(n, 4)


def _make_rhs(masses, curv, formulation: Formulation):
    kern = acceleration_kernel(formulation)
    n = len(masses)

    def rhs(y: np.ndarray) -> np.ndarray:
        pos, vel = _unpack(y, n)
        with np.errstate(all="ignore"):
            acc = kern(pos, vel, masses, curv)
        return np.concatenate([vel.ravel(), np.asarray(acc).ravel()])

    return rhs


def _rk4_step(rhs, y, h):
    with np.errstate(all="ignore"):  # non-finite trial values are handled by callers
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _dp45_step(rhs, y, h, k1=None):
    """One Dormand-Prince trial step: returns (y5, error_vector, k7)."""
    with np.errstate(all="ignore"):  # non-finite trial values are handled by callers
        ks = [k1 if k1 is not None else rhs(y)]
        for s in range(1, 7):
            ys = y + h * (_DP_A[s] @ np.stack(ks[: len(_DP_A[s])]))
            ks.append(rhs(ys))
        kmat = np.stack(ks)
        y5 = y + h * (_DP_B5 @ kmat)
        err = h * (_DP_ERR @ kmat)
    return y5, err, ks[6]


def _error_norm(err, y0, y1, rel_tol, abs_tol) -> float:
    scale = abs_tol + rel_tol * np.maximum(np.abs(y0), np.abs(y1))
    with np.errstate(all="ignore"):
        val = math.sqrt(float(np.mean((np.abs(err) / scale) ** 2)))
    return val


def solve_sampled(rhs, y0, t0: float, sample_times, cfg: IntegratorConfig) -> np.ndarray:
    """Minimal driver for an arbitrary first-order system y' = rhs(y).

    Advances with the configured scheme, landing exactly on each requested
    sample time, and returns the stacked states (len(sample_times), len(y)).
    Real or complex state vectors are accepted.  Used for the intrinsic 2D
    system, whose state is not ambient.
    """
    y = np.array(y0)
    t = t0
    h = cfg.step
    k1 = None
    out = []
    for target in sample_times:
        while t < target - 1e-12 * max(1.0, abs(target)):
            if cfg.scheme == SCHEME_FIXED_RK4:
                ht = min(cfg.step, target - t)
                y = _rk4_step(rhs, y, ht)
                if not np.all(np.isfinite(y)):
                    raise StepUnderflow(f"fixed step produced non-finite values at t={t:.6g}")
                t += ht
                continue
            ht = min(h, target - t)
            if ht < UNDERFLOW_REL * max(1.0, abs(t)):
                raise StepUnderflow(f"step size underflow at t={t:.6g}")
            y_new, err, k7 = _dp45_step(rhs, y, ht, k1)
            if not np.all(np.isfinite(y_new)):
                h = 0.2 * ht
                continue
            norm = _error_norm(err, y, y_new, cfg.rel_tol, cfg.abs_tol)
            if not math.isfinite(norm):
                h = 0.2 * ht
                continue
            if norm <= 1.0:
                factor = 5.0 if norm == 0.0 else min(5.0, max(0.2, 0.9 * norm ** -0.2))
                y, t, k1 = y_new, t + ht, k7
                h = max(h, ht * factor) if ht < h else ht * factor
            else:
                h = ht * max(0.2, 0.9 * norm ** -0.2)
        out.append(y.copy())
    return np.stack(out)


def project_state(state: SystemState) -> SystemState:
    """Re-impose the constraints by radial renormalization + tangent projection.

    For kappa = 0 the constraints (w = wdot = 0) are preserved exactly by
    the flow, so this is the identity.
    """
    curv = state.curvature
    if curv.is_flat:
        return state
    if state.frame is Frame.NORTH_POLE:
        qc = shift_to_centered(state.positions, curv)
    else:
        qc = state.positions
    qc = normalize_to_manifold(qc, curv)
    vel = project_velocity_to_tangent(qc, state.velocities, curv)
    pos = shift_to_northpole(qc, curv) if state.frame is Frame.NORTH_POLE else qc
    return state.copy_with(positions=pos, velocities=vel)


def length_scale(state: SystemState) -> float:
    """Length scale used for singularity thresholds.

    The largest pair separation, floored at 1.0 so that thresholds stay
    meaningful for compact configurations; 1.0 for a single body.
    """
    if state.n_bodies < 2:
        return 1.0
    r = separation_matrix(state.positions, state.curvature, tol=1e-6)
    return max(1.0, float(np.max(r)))


def _singularity_scan(positions, curv, collision_threshold: float):
    """Return (hard_flag, near_flag): which singularity, if any, is hit/close."""
    n = positions.shape[0]
    if n < 2:
        return None, None
    r = separation_matrix(positions, curv, tol=1e-6)
    off = ~np.eye(n, dtype=bool)
    rmin = float(np.min(r[off]))
    hard = near = None
    if rmin < collision_threshold:
        hard = FLAG_COLLISION
    elif rmin < NEAR_FACTOR * collision_threshold:
        near = FLAG_COLLISION
    if curv.kappa > 0.0:
        margin = float(np.min(1.0 - curv.kappa * r[off] ** 2 / 4.0))
        if margin < ANTIPODAL_TOL:
            hard = FLAG_ANTIPODAL
        elif margin < NEAR_FACTOR * ANTIPODAL_TOL and near is None:
            near = FLAG_ANTIPODAL
    return hard, near


class _Stepper:
    """Carries the step size and FSAL stage between accepted steps."""

    def __init__(self, state: SystemState, formulation: Formulation, cfg: IntegratorConfig,
                 collision_threshold: float | None = None):
        if not formulation.valid_at(state.curvature):
            raise FormulationInvalidAtKappa(
                f"{formulation.value} is not defined at kappa = {state.curvature.kappa}"
            )
        if state.frame is not formulation.frame:
            raise FrameMismatch(
                f"{formulation.value} integrates {formulation.frame.value}-frame states"
            )
        self.cfg = cfg
        self.formulation = formulation
        self.rhs = _make_rhs(state.masses, state.curvature, formulation)
        self.h = cfg.step
        self.k1 = None
        if collision_threshold is None:
            collision_threshold = COLLISION_TOL * length_scale(state)
        self.collision_threshold = collision_threshold

    def advance(self, state: SystemState, h_max: float) -> StepOutcome:
        """Advance by one accepted step of size <= h_max."""
        y = _pack(state)
        t = state.time
        if self.cfg.scheme == SCHEME_FIXED_RK4:
            h = min(self.cfg.step, h_max)
            y_new = _rk4_step(self.rhs, y, h)
            if not np.all(np.isfinite(y_new)):
                raise StepUnderflow(f"fixed step produced non-finite values at t={t:.6g}")
            return self._finish(state, y_new, t + h, h)

        proposal = self.h
        h = min(proposal, h_max)
        clamped = proposal > h_max
        underflow = UNDERFLOW_REL * max(1.0, abs(t))
        while True:
            if h < underflow:
                self._bail_underflow(state, t)
            y_new, err, k7 = _dp45_step(self.rhs, y, h, self.k1)
            if not np.all(np.isfinite(y_new)):
                h *= 0.2
                continue
            norm = _error_norm(err, y, y_new, self.cfg.rel_tol, self.cfg.abs_tol)
            if not math.isfinite(norm):
                h *= 0.2
                continue
            if norm <= 1.0:
                factor = 5.0 if norm == 0.0 else min(5.0, max(0.2, 0.9 * norm ** -0.2))
                if clamped and h >= h_max * (1.0 - 1e-12):
                    # cadence-clamped step; do not let it shrink the natural size
                    self.h = max(proposal, h * factor)
                else:
                    self.h = h * factor
                self.k1 = k7
                return self._finish(state, y_new, t + h, h)
            h *= max(0.2, 0.9 * norm ** -0.2)

    def _bail_underflow(self, state: SystemState, t: float):
        # A collapsing step at a close approach is the singular funnel; report
        # it as the singularity rather than a bare numerical failure.
        hard, near = _singularity_scan(
            state.positions, state.curvature, self.collision_threshold
        )
        flag = hard or near
        if flag is not None:
            raise SingularityReached(flag, t, "step size collapsed at the approach")
        raise StepUnderflow(f"step size below {UNDERFLOW_REL:g} * time scale at t={t:.6g}")

    def _finish(self, state: SystemState, y_new, t_new, h) -> StepOutcome:
        n = state.n_bodies
        pos, vel = _unpack(y_new, n)
        new = state.copy_with(positions=pos, velocities=vel, time=t_new)
        res_before = new.constraint_residual_max()
        if self.cfg.projection == PROJECTION_POST_STEP:
            new = project_state(new)
            self.k1 = None  # state changed; FSAL stage no longer valid
        res_after = new.constraint_residual_max()
        hard, near = _singularity_scan(
            new.positions, new.curvature, self.collision_threshold
        )
        if hard is not None:
            raise SingularityReached(hard, t_new)
        return StepOutcome(
            state=new,
            accepted_step=h,
            residual_before_projection=res_before,
            constraint_residual_max=res_after,
            singular_flag=near,
        )


def step(state: SystemState, formulation: Formulation, cfg: IntegratorConfig) -> StepOutcome:
    """Advance a state by one accepted step (standalone; no carried step size)."""
    return _Stepper(state, formulation, cfg).advance(state, math.inf)


class _DriftTracker:
    """Running max deviations of the first integrals against their t0 values."""

    def __init__(self, report0: ConservedReport):
        self.ref = report0
        self.energy_abs = 0.0
        self.wedge = 0.0
        self.hybrid = 0.0
        self.momentum = 0.0
        self.com = 0.0
        self.residual = 0.0
        self.residual_before = 0.0

    def update(self, report: ConservedReport, outcome: StepOutcome):
        self.energy_abs = max(self.energy_abs, abs(report.energy - self.ref.energy))
        self.wedge = max(self.wedge, float(np.max(np.abs(report.wedge - self.ref.wedge))))
        self.hybrid = max(self.hybrid, float(np.max(np.abs(report.hybrid - self.ref.hybrid))))
        self.momentum = max(
            self.momentum,
            float(np.max(np.abs(report.linear_momentum - self.ref.linear_momentum))),
        )
        self.com = max(
            self.com, float(np.max(np.abs(report.center_of_mass - self.ref.center_of_mass)))
        )
        self.residual = max(self.residual, outcome.constraint_residual_max)
        self.residual_before = max(self.residual_before, outcome.residual_before_projection)

    def summary(self) -> dict:
        h0 = abs(self.ref.energy)
        return {
            "energy_abs": self.energy_abs,
            "energy_rel": self.energy_abs / h0 if h0 > 0 else self.energy_abs,
            "wedge_abs_max": self.wedge,
            "hybrid_abs_max": self.hybrid,
            "linear_momentum_abs_max": self.momentum,
            "center_of_mass_abs_max": self.com,
            "residual_max": self.residual,
            "residual_before_projection_max": self.residual_before,
        }


def _sample_times(t0: float, t_end: float, sample_dt: float) -> np.ndarray:
    n = int(math.floor((t_end - t0) / sample_dt + 1e-9))
    times = t0 + sample_dt * np.arange(1, n + 1)
    if times.size == 0 or times[-1] < t_end - 1e-9 * max(1.0, abs(t_end)):
        times = np.append(times, t_end)
    times[-1] = t_end
    return times


def integrate(
    state0: SystemState,
    formulation: Formulation,
    cfg: IntegratorConfig,
    t_end: float,
    sample_dt: float,
) -> Trajectory:
    """Integrate to ``t_end``, sampling every ``sample_dt`` time units.

    Steps land exactly on the sample times, so every emitted record is a
    true integrator state (any denser output a caller interpolates between
    records is linear and correspondingly less accurate).  Conserved
    quantities and constraint residuals are tracked at every accepted step,
    not just at samples.  On a singular approach the trajectory ends early
    with status "singular" and the reason recorded.
    """
    if not t_end > state0.time:
        raise ValueError("t_end must exceed the initial time")
    if not 0.0 < sample_dt <= t_end - state0.time:
        raise ValueError("sample_dt must lie in (0, t_end - t0]")
    state0.validate()

    stepper = _Stepper(state0, formulation, cfg)
    report0 = build_report(state0, check=False)
    tracker = _DriftTracker(report0)

    samples = [state0]
    reports = [report0]
    residuals = [state0.constraint_residual_max()]

    sample_times = _sample_times(state0.time, t_end, sample_dt)
    next_idx = 0
    state = state0
    status, reason = "completed", None
    steps = 0
    eps = 1e-12 * max(1.0, abs(t_end))

    while next_idx < len(sample_times):
        target = sample_times[next_idx]
        try:
            outcome = stepper.advance(state, target - state.time)
        except SingularityReached as exc:
            status, reason = "singular", exc.flag
            if state.time > samples[-1].time + eps:
                samples.append(state)  # last healthy state
                reports.append(build_report(state, check=False))
                residuals.append(state.constraint_residual_max())
            break
        state = outcome.state
        steps += 1
        if steps > cfg.max_steps:
            raise MaxStepsExceeded(f"exceeded {cfg.max_steps} steps at t={state.time:.6g}")
        report = build_report(state, check=False)
        tracker.update(report, outcome)
        if state.time >= target - eps:
            samples.append(state)
            reports.append(report)
            residuals.append(outcome.constraint_residual_max)
            next_idx += 1

    return Trajectory(
        samples=samples,
        reports=reports,
        residuals=residuals,
        status=status,
        termination_reason=reason,
        steps_taken=steps,
        drift=tracker.summary(),
    )
