"""Scenario files, the flat-to-curved lift, curvature sweeps, and trajectory output.

Scenario files are strict JSON: every key must be known, numbers are 64-bit
floats, and a ``format_version`` field is required.  Initial data is always
given as flat 3-vectors; the vertical lift solves the two North-Pole
constraints for the fourth components, so the same file runs at any
curvature that admits the lift.

Trajectory files are CSV with a fixed header (or JSON lines) and 17
significant digits, which round-trips float64 exactly; identical runs
produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .errors import LiftOutOfRange, ScenarioValidationError
from .geometry import Curvature, Frame
from .dynamics import Formulation, SystemState, state_to_centered
from .conserved import ConservedReport
from .integrators import IntegratorConfig, Trajectory, integrate

FORMAT_VERSION = 1

_SCENARIO_KEYS = {
    "format_version",
    "name",
    "masses",
    "flat_positions",
    "flat_velocities",
    "kappa",
    "formulation",
    "integrator",
    "t_end",
    "sample_dt",
}
_INTEGRATOR_KEYS = {"scheme", "step", "rel_tol", "abs_tol", "projection", "max_steps"}

# Drift below this counts as "conserved" in sweep bookkeeping.
SWEEP_CONSERVED_TOL = 1e-6


@dataclass
class Scenario:
    """Declarative simulation request with flat-frame initial data."""

    name: str
    masses: np.ndarray
    flat_positions: np.ndarray   # (N, 3)
    flat_velocities: np.ndarray  # (N, 3)
    kappa: float
    formulation: Formulation = Formulation.UNIFIED
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)
    t_end: float = 10.0
    sample_dt: float = 0.1

    @property
    def curvature(self) -> Curvature:
        return Curvature(self.kappa)

    @property
    def n_bodies(self) -> int:
        return len(self.masses)


def _as_float(value, fieldname: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioValidationError(f"expected a number, got {value!r}", fieldname)
    out = float(value)
    if not math.isfinite(out):
        raise ScenarioValidationError("must be finite", fieldname)
    return out


def _as_vectors(value, fieldname: str) -> np.ndarray:
    if not isinstance(value, list) or not value:
        raise ScenarioValidationError("expected a non-empty list of 3-vectors", fieldname)
    rows = []
    for i, row in enumerate(value):
        if not isinstance(row, list) or len(row) != 3:
            raise ScenarioValidationError("expected a 3-vector", f"{fieldname}[{i}]")
        rows.append([_as_float(x, f"{fieldname}[{i}][{j}]") for j, x in enumerate(row)])
    return np.array(rows)


def parse_scenario(data, source: str = "<scenario>") -> Scenario:
    """Validate a parsed JSON object (or JSON text) into a Scenario.

    Unknown keys are errors; every diagnostic names the offending field.
    """
    if isinstance(data, str):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise ScenarioValidationError(
                f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}",
                source,
            ) from exc
    if not isinstance(data, dict):
        raise ScenarioValidationError("scenario must be a JSON object", source)

    unknown = set(data) - _SCENARIO_KEYS
    if unknown:
        raise ScenarioValidationError("unknown key(s)", ", ".join(sorted(unknown)))
    missing = {
        "format_version", "name", "masses", "flat_positions",
        "flat_velocities", "kappa", "t_end", "sample_dt",
    } - set(data)
    if missing:
        raise ScenarioValidationError("missing required key(s)", ", ".join(sorted(missing)))

    if data["format_version"] != FORMAT_VERSION:
        raise ScenarioValidationError(
            f"unsupported version {data['format_version']!r} (expected {FORMAT_VERSION})",
            "format_version",
        )
    name = data["name"]
    if not isinstance(name, str) or not name:
        raise ScenarioValidationError("must be a non-empty string", "name")

    if not isinstance(data["masses"], list) or not data["masses"]:
        raise ScenarioValidationError("expected a non-empty list", "masses")
    masses = np.array([_as_float(m, f"masses[{i}]") for i, m in enumerate(data["masses"])])
    if np.any(masses <= 0.0):
        raise ScenarioValidationError("masses must be strictly positive", "masses")

    pos = _as_vectors(data["flat_positions"], "flat_positions")
    vel = _as_vectors(data["flat_velocities"], "flat_velocities")
    n = len(masses)
    if pos.shape[0] != n:
        raise ScenarioValidationError(f"expected {n} rows to match masses", "flat_positions")
    if vel.shape[0] != n:
        raise ScenarioValidationError(f"expected {n} rows to match masses", "flat_velocities")

    kappa = _as_float(data["kappa"], "kappa")
    t_end = _as_float(data["t_end"], "t_end")
    sample_dt = _as_float(data["sample_dt"], "sample_dt")
    if t_end <= 0.0:
        raise ScenarioValidationError("must be positive", "t_end")
    if not 0.0 < sample_dt <= t_end:
        raise ScenarioValidationError("must lie in (0, t_end]", "sample_dt")

    form_name = data.get("formulation", Formulation.UNIFIED.value)
    try:
        formulation = Formulation(form_name)
    except ValueError:
        valid = ", ".join(f.value for f in Formulation)
        raise ScenarioValidationError(f"unknown formulation {form_name!r} (one of {valid})",
                                      "formulation") from None

    integ = data.get("integrator", {})
    if not isinstance(integ, dict):
        raise ScenarioValidationError("must be an object", "integrator")
    unknown = set(integ) - _INTEGRATOR_KEYS
    if unknown:
        raise ScenarioValidationError("unknown key(s)", "integrator." + ", ".join(sorted(unknown)))
    try:
        integrator = IntegratorConfig(**integ)
    except (TypeError, ValueError) as exc:
        raise ScenarioValidationError(str(exc), "integrator") from exc

    sc = Scenario(
        name=name,
        masses=masses,
        flat_positions=pos,
        flat_velocities=vel,
        kappa=kappa,
        formulation=formulation,
        integrator=integrator,
        t_end=t_end,
        sample_dt=sample_dt,
    )
    _check_lift_range(sc)
    return sc


def _check_lift_range(sc: Scenario):
    if sc.kappa > 0.0:
        rho2 = np.sum(sc.flat_positions**2, axis=1)
        bad = np.nonzero(sc.kappa * rho2 >= 1.0)[0]
        if bad.size:
            i = int(bad[0])
            raise ScenarioValidationError(
                f"kappa * |position|**2 = {sc.kappa * rho2[i]:.6g} >= 1; "
                "no lift to this curvature",
                f"flat_positions[{i}]",
            )


def load_scenario(path) -> Scenario:
    path = Path(path)
    return parse_scenario(path.read_text(encoding="utf-8"), source=str(path))


def scenario_to_dict(sc: Scenario) -> dict:
    """Canonical JSON-compatible form; parse -> serialize -> parse is identity."""
    return {
        "format_version": FORMAT_VERSION,
        "name": sc.name,
        "masses": [float(m) for m in sc.masses],
        "flat_positions": [[float(x) for x in row] for row in sc.flat_positions],
        "flat_velocities": [[float(x) for x in row] for row in sc.flat_velocities],
        "kappa": float(sc.kappa),
        "formulation": sc.formulation.value,
        "integrator": {
            "scheme": sc.integrator.scheme,
            "step": sc.integrator.step,
            "rel_tol": sc.integrator.rel_tol,
            "abs_tol": sc.integrator.abs_tol,
            "projection": sc.integrator.projection,
            "max_steps": sc.integrator.max_steps,
        },
        "t_end": float(sc.t_end),
        "sample_dt": float(sc.sample_dt),
    }


def serialize_scenario(sc: Scenario) -> str:
    return json.dumps(scenario_to_dict(sc), indent=2) + "\n"


def lift_to_curvature(flat_pos, flat_vel, curv: Curvature):
    """Vertical lift of flat initial data onto the curvature-kappa manifold.

    Keeps (x, y, z) and solves the two constraints for the fourth
    components, choosing the root continuous with w = 0 at kappa = 0:

        w    = -sigma * |kappa|**0.5 * rho**2 / (1 + sqrt(1 - kappa*rho**2))
        wdot = -sigma * |kappa|**0.5 * (p . v) / (1 + |kappa|**0.5 * w)

    (rho = |p|; at kappa = 0 both are exactly zero).  Raises LiftOutOfRange
    when kappa * rho**2 >= 1.
    """
    p = np.asarray(flat_pos, dtype=float)
    v = np.asarray(flat_vel, dtype=float)
    if p.shape != (3,) or v.shape != (3,):
        raise ValueError("flat data must be 3-vectors")
    if curv.is_flat:
        return np.array([*p, 0.0]), np.array([*v, 0.0])
    rho2 = float(p @ p)
    disc = 1.0 - curv.kappa * rho2
    if disc <= 0.0:
        raise LiftOutOfRange(
            f"kappa * |position|**2 = {curv.kappa * rho2:.6g} >= 1; lift undefined"
        )
    omega = -curv.sigma * curv.sqrt_abs * rho2 / (1.0 + math.sqrt(disc))
    omega_dot = -curv.sigma * curv.sqrt_abs * float(p @ v) / (1.0 + curv.sqrt_abs * omega)
    return np.array([*p, omega]), np.array([*v, omega_dot])


def initial_state(sc: Scenario) -> SystemState:
    """Lift a scenario's flat data into the frame its formulation integrates."""
    curv = sc.curvature
    n = sc.n_bodies
    pos = np.zeros((n, 4))
    vel = np.zeros((n, 4))
    for i in range(n):
        pos[i], vel[i] = lift_to_curvature(sc.flat_positions[i], sc.flat_velocities[i], curv)
    state = SystemState(sc.masses.copy(), pos, vel, 0.0, curv, Frame.NORTH_POLE)
    if sc.formulation.frame is Frame.CENTERED:
        state = state_to_centered(state)
    return state


@dataclass
class TrajectoryRecord:
    """One sampled output row."""

    time: float
    positions: np.ndarray
    velocities: np.ndarray
    conserved: ConservedReport
    constraint_residual_max: float


def records_from_trajectory(traj: Trajectory) -> list:
    return [
        TrajectoryRecord(
            time=s.time,
            positions=s.positions,
            velocities=s.velocities,
            conserved=rep,
            constraint_residual_max=res,
        )
        for s, rep, res in zip(traj.samples, traj.reports, traj.residuals)
    ]


_CONSERVED_COLUMNS = ("energy", "c_xy", "c_xz", "c_yz", "h_x", "h_y", "h_z")


def trajectory_columns(n_bodies: int) -> list:
    cols = ["time"]
    for i in range(1, n_bodies + 1):
        cols += [f"{c}{i}" for c in ("x", "y", "z", "w", "vx", "vy", "vz", "vw")]
    cols += list(_CONSERVED_COLUMNS)
    cols.append("residual")
    return cols


def _record_values(rec: TrajectoryRecord):
    vals = [rec.time]
    for i in range(rec.positions.shape[0]):
        vals.extend(rec.positions[i])
        vals.extend(rec.velocities[i])
    d = rec.conserved
    vals += [d.energy, d.wedge[3], d.wedge[4], d.wedge[5], d.hybrid[0], d.hybrid[1], d.hybrid[2]]
    vals.append(rec.constraint_residual_max)
    return vals


def write_trajectory_csv(records, path) -> None:
    path = Path(path)
    n = records[0].positions.shape[0]
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(trajectory_columns(n))
        for rec in records:
            writer.writerow([f"{v:.17g}" for v in _record_values(rec)])


def write_trajectory_jsonl(records, path) -> None:
    path = Path(path)
    with path.open("w", encoding="utf-8") as fh:
        for rec in records:
            d = rec.conserved
            obj = {
                "time": rec.time,
                "positions": [[float(x) for x in row] for row in rec.positions],
                "velocities": [[float(x) for x in row] for row in rec.velocities],
                "energy": d.energy,
                "c_xy": float(d.wedge[3]),
                "c_xz": float(d.wedge[4]),
                "c_yz": float(d.wedge[5]),
                "h_x": float(d.hybrid[0]),
                "h_y": float(d.hybrid[1]),
                "h_z": float(d.hybrid[2]),
                "residual": rec.constraint_residual_max,
            }
            fh.write(json.dumps(obj) + "\n")


def read_trajectory_csv(path):
    """Read a trajectory CSV back: (times, positions, velocities, extras).

    positions/velocities have shape (samples, N, 4); extras maps the
    conserved/residual column names to arrays.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    data = np.array(rows)
    n = (len(header) - 2 - len(_CONSERVED_COLUMNS)) // 8
    times = data[:, 0]
    body = data[:, 1 : 1 + 8 * n].reshape(len(rows), n, 8)
    extras = {
        name: data[:, 1 + 8 * n + k]
        for k, name in enumerate(header[1 + 8 * n :])
    }
    return times, body[:, :, :4], body[:, :, 4:], extras


@dataclass
class RunResult:
    scenario: Scenario
    trajectory: Trajectory
    records: list
    trajectory_path: Path | None = None
    metadata_path: Path | None = None

    @property
    def status(self) -> str:
        return self.trajectory.status


def _write_metadata(result: RunResult, path: Path, overrides: dict | None,
                    file_format: str) -> None:
    traj = result.trajectory
    meta = {
        "format_version": FORMAT_VERSION,
        "scenario": scenario_to_dict(result.scenario),
        "overrides": overrides or {},
        "status": traj.status,
        "termination_reason": traj.termination_reason,
        "steps_taken": traj.steps_taken,
        "final_time": float(traj.final_state.time),
        "drift": {k: float(v) for k, v in traj.drift.items()},
        "trajectory_format": file_format,
        "columns": trajectory_columns(result.scenario.n_bodies),
        "package_version": __version__,
        "numpy_version": np.__version__,
        "determinism": (
            "no randomness is used; identical scenario, overrides, and package "
            "versions produce byte-identical trajectory and summary files"
        ),
    }
    path.write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")


def run_scenario(
    sc: Scenario,
    output_dir=None,
    file_format: str = "csv",
    overrides: dict | None = None,
) -> RunResult:
    """Lift, integrate, and (optionally) persist one scenario.

    With ``output_dir`` set, writes ``<name>__trajectory.csv`` (or ``.jsonl``)
    and ``<name>__metadata.json``.  A singular termination is recorded in the
    metadata, not raised.
    """
    if file_format not in ("csv", "jsonl"):
        raise ScenarioValidationError(f"unknown trajectory format {file_format!r}", "format")
    state0 = initial_state(sc)
    traj = integrate(state0, sc.formulation, sc.integrator, sc.t_end, sc.sample_dt)
    result = RunResult(scenario=sc, trajectory=traj, records=records_from_trajectory(traj))
    if output_dir is not None:
        out = Path(output_dir)
        out.mkdir(parents=True, exist_ok=True)
        suffix = "csv" if file_format == "csv" else "jsonl"
        result.trajectory_path = out / f"{sc.name}__trajectory.{suffix}"
        if file_format == "csv":
            write_trajectory_csv(result.records, result.trajectory_path)
        else:
            write_trajectory_jsonl(result.records, result.trajectory_path)
        result.metadata_path = out / f"{sc.name}__metadata.json"
        _write_metadata(result, result.metadata_path, overrides, file_format)
    return result


def flat_block_distance(a: SystemState, b: SystemState) -> float:
    """Euclidean distance between the spatial (x, y, z) blocks of two states.

    The w blocks are excluded: they are determined by the constraints and
    scale as |kappa|**0.5, which would mask the O(kappa) dynamical response
    this metric is meant to expose.
    """
    dp = a.positions[:, :3] - b.positions[:, :3]
    dv = a.velocities[:, :3] - b.velocities[:, :3]
    return float(np.sqrt(np.sum(dp**2) + np.sum(dv**2)))


def kappa_token(kappa: float) -> str:
    """Filesystem-safe token for a curvature value."""
    return f"{kappa:.10g}".replace("-", "m").replace("+", "").replace(".", "_")


@dataclass
class SweepRow:
    kappa: float
    status: str
    energy_drift: float
    max_wedge_drift: float
    momentum_conserved: bool
    com_uniform: bool
    final_state_distance_to_flat: float


@dataclass
class SweepResult:
    rows: list
    baseline: RunResult
    summary_path: Path | None = None
    run_paths: dict = field(default_factory=dict)


SWEEP_COLUMNS = (
    "kappa",
    "status",
    "energy_drift",
    "max_wedge_drift",
    "momentum_conserved",
    "com_uniform",
    "final_state_distance_to_flat",
)


def write_sweep_summary(rows, path) -> None:
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for row in rows:
            # shortest round-trip floats: exact and readable for summary data
            writer.writerow(
                [
                    repr(row.kappa),
                    row.status,
                    repr(row.energy_drift),
                    repr(row.max_wedge_drift),
                    str(row.momentum_conserved).lower(),
                    str(row.com_uniform).lower(),
                    repr(row.final_state_distance_to_flat),
                ]
            )


def curvature_sweep(
    sc: Scenario,
    kappas,
    output_dir=None,
    file_format: str = "csv",
) -> SweepResult:
    """Run the same flat initial data at each curvature and aggregate.

    Each member writes its own trajectory file; per-kappa failures are
    recorded in the summary and the sweep continues.  The flat (kappa = 0)
    run is always computed as the comparison baseline.  Members run
    sequentially in the given order, so the sweep is deterministic.
    """
    out = Path(output_dir) if output_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)

    baseline = run_scenario(
        replace(sc, kappa=0.0),
        output_dir=None,
    )
    rows = []
    run_paths = {}
    for kappa in kappas:
        member = replace(sc, kappa=float(kappa), name=f"{sc.name}__kappa_{kappa_token(kappa)}")
        try:
            res = run_scenario(member, output_dir=out, file_format=file_format)
        except Exception as exc:  # recorded, sweep continues
            rows.append(
                SweepRow(
                    kappa=float(kappa),
                    status=f"error:{type(exc).__name__}",
                    energy_drift=math.nan,
                    max_wedge_drift=math.nan,
                    momentum_conserved=False,
                    com_uniform=False,
                    final_state_distance_to_flat=math.nan,
                )
            )
            continue
        if res.trajectory_path is not None:
            run_paths[float(kappa)] = res.trajectory_path
        traj = res.trajectory
        if traj.status == "completed" and baseline.trajectory.status == "completed":
            dist = flat_block_distance(traj.final_state, baseline.trajectory.final_state)
        else:
            dist = math.nan
        rows.append(
            SweepRow(
                kappa=float(kappa),
                status=traj.status,
                energy_drift=traj.drift["energy_rel"],
                max_wedge_drift=traj.drift["wedge_abs_max"],
                momentum_conserved=traj.drift["linear_momentum_abs_max"] < SWEEP_CONSERVED_TOL,
                com_uniform=traj.drift["center_of_mass_abs_max"] < SWEEP_CONSERVED_TOL,
                final_state_distance_to_flat=dist,
            )
        )
    result = SweepResult(rows=rows, baseline=baseline, run_paths=run_paths)
    if out is not None:
        result.summary_path = out / f"{sc.name}__sweep_summary.csv"
        write_sweep_summary(rows, result.summary_path)
    return result
