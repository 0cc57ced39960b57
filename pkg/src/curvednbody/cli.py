"""Command-line front end: simulate, sweep, compare, check, and lift.

Every exit path prints a machine-parseable ``STATUS <code> <reason>`` line
as the final line on standard error.  Exit codes: 0 success, 1 usage or
validation failure, 2 singular termination, 3 internal numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    CurvedNBodyError,
    LiftOutOfRange,
    MaxStepsExceeded,
    ScenarioValidationError,
    SingularityReached,
    StepUnderflow,
)
from .geometry import Frame
from .conserved import build_report, integral_audit
from .dynamics import (
    Formulation,
    SystemState,
    acceleration,
    accel_intrinsic_2d,
    state_to_centered,
    state_to_northpole,
    stereo_pushforward,
)
from .errors import FormulationInvalidAtKappa
from .integrators import integrate, solve_sampled
from .scenario_io import (
    Scenario,
    curvature_sweep,
    initial_state,
    load_scenario,
    parse_scenario,
    read_trajectory_csv,
    run_scenario,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SINGULAR = 2
EXIT_NUMERICAL = 3

_REASONS = {"collision_near": "CollisionNear", "antipodal_near": "AntipodalNear"}

AUDIT_DRIFT_TOL = 1e-6


def _status(code: int, reason: str) -> int:
    print(f"STATUS {code} {reason}", file=sys.stderr)
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="curved-nbody",
        description="N-body simulation on spheres, flat space, and hyperbolic spheres.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_output=True):
        p.add_argument("scenario", help="scenario file (.scn JSON)")
        p.add_argument("--kappa", type=float, default=None, help="override curvature")
        p.add_argument("--t-end", type=float, default=None, help="override end time")
        p.add_argument("--rel-tol", type=float, default=None, help="override relative tolerance")
        p.add_argument("--formulation", default=None,
                       choices=[f.value for f in Formulation], help="override formulation")
        p.add_argument("--sample-dt", type=float, default=None, help="override sample cadence")
        if needs_output:
            p.add_argument("--output-dir", default=None,
                           help="where to write outputs (default: ./runs/<scenario name>)")
            p.add_argument("--format", default="csv", choices=["csv", "jsonl"],
                           help="trajectory file format")
            p.add_argument("--no-plots", action="store_true", help="skip figure rendering")

    p = sub.add_parser("simulate", help="run one scenario and write the trajectory")
    common(p)

    p = sub.add_parser("sweep", help="run the scenario across a list of curvatures")
    common(p)
    p.add_argument("--kappas", required=True,
                   help="comma-separated curvature values; use the = form for "
                        "lists starting with a negative value, e.g. "
                        "--kappas=-0.1,-0.01,0,0.01,0.1")

    p = sub.add_parser("compare", help="integrate under two formulations and report deviations")
    common(p)
    p.add_argument("--formulation-a", default=Formulation.UNIFIED.value,
                   choices=[f.value for f in Formulation])
    p.add_argument("--formulation-b", required=True,
                   choices=[f.value for f in Formulation])

    p = sub.add_parser("check", help="audit the first integrals of a scenario or trajectory")
    common(p)
    p.add_argument("--drift-tol", type=float, default=AUDIT_DRIFT_TOL,
                   help="drift threshold for counting an integral as conserved")

    p = sub.add_parser("lift", help="print the lifted (curved) initial conditions")
    common(p, needs_output=False)
    p.add_argument("--output-dir", default=None, help="optionally write the lift as CSV")
    return parser


def _apply_overrides(sc: Scenario, args) -> tuple[Scenario, dict]:
    overrides = {}
    if args.kappa is not None:
        sc = replace(sc, kappa=args.kappa)
        overrides["kappa"] = args.kappa
    if args.t_end is not None:
        sc = replace(sc, t_end=args.t_end)
        overrides["t_end"] = args.t_end
    if args.sample_dt is not None:
        sc = replace(sc, sample_dt=args.sample_dt)
        overrides["sample_dt"] = args.sample_dt
    if args.rel_tol is not None:
        sc = replace(sc, integrator=replace(sc.integrator, rel_tol=args.rel_tol))
        overrides["rel_tol"] = args.rel_tol
    if args.formulation is not None:
        sc = replace(sc, formulation=Formulation(args.formulation))
        overrides["formulation"] = args.formulation
    if not 0.0 < sc.sample_dt <= sc.t_end:
        raise ScenarioValidationError("must lie in (0, t_end]", "sample_dt")
    return sc, overrides


def _load(args) -> tuple[Scenario, dict]:
    path = Path(args.scenario)
    if not path.exists():
        raise FileNotFoundError(f"scenario file not found: {path}")
    return _apply_overrides(load_scenario(path), args)


def _out_dir(args, sc: Scenario) -> Path:
    if args.output_dir is not None:
        return Path(args.output_dir)
    return Path("runs") / sc.name


def cmd_simulate(args) -> int:
    sc, overrides = _load(args)
    out = _out_dir(args, sc)
    result = run_scenario(sc, output_dir=out, file_format=args.format, overrides=overrides)
    traj = result.trajectory
    print(f"scenario:       {sc.name} (kappa = {sc.kappa:g}, {sc.formulation.value})")
    print(f"status:         {traj.status}"
          + (f" ({_REASONS.get(traj.termination_reason, traj.termination_reason)})"
             if traj.termination_reason else ""))
    print(f"final time:     {traj.final_state.time:.6g} of {sc.t_end:g}")
    print(f"steps:          {traj.steps_taken}")
    print(f"energy drift:   {traj.drift['energy_rel']:.3e} (relative)")
    print(f"momentum drift: {traj.drift['hybrid_abs_max']:.3e} (hybrid, abs)")
    print(f"residual max:   {traj.drift['residual_max']:.3e}")
    print(f"trajectory:     {result.trajectory_path}")
    print(f"metadata:       {result.metadata_path}")
    if not args.no_plots:
        from .plots import render_run_figures

        for fig_path in render_run_figures(result.records, sc.name, out):
            print(f"figure:         {fig_path}")
    if traj.status == "singular":
        return _status(EXIT_SINGULAR, _REASONS[traj.termination_reason])
    return _status(EXIT_OK, "ok")


def cmd_sweep(args) -> int:
    sc, _ = _load(args)
    try:
        kappas = [float(tok) for tok in args.kappas.split(",") if tok.strip()]
    except ValueError as exc:
        raise ScenarioValidationError(f"bad curvature list: {exc}", "--kappas") from None
    if not kappas:
        raise ScenarioValidationError("needs at least one value", "--kappas")
    out = _out_dir(args, sc)
    sweep = curvature_sweep(sc, kappas, output_dir=out, file_format=args.format)
    header = f"{'kappa':>12} {'status':<12} {'energy_drift':>13} {'momentum':>9} {'com':>6} {'dist_to_flat':>13}"
    print(header)
    for row in sweep.rows:
        print(
            f"{row.kappa:>12.4g} {row.status:<12} {row.energy_drift:>13.3e} "
            f"{str(row.momentum_conserved).lower():>9} {str(row.com_uniform).lower():>6} "
            f"{row.final_state_distance_to_flat:>13.6e}"
        )
    print(f"summary: {sweep.summary_path}")
    if not args.no_plots:
        from .plots import render_sweep_figure

        print(f"figure:  {render_sweep_figure(sweep.rows, sc.name, out)}")
    return _status(EXIT_OK, "ok")


def _integrate_formulation(sc: Scenario, formulation: Formulation):
    """Integrate under one formulation; samples returned in the North-Pole frame."""
    state0 = initial_state(replace(sc, formulation=formulation))
    traj = integrate(state0, formulation, sc.integrator, sc.t_end, sc.sample_dt)
    if formulation.frame is Frame.CENTERED:
        samples = [state_to_northpole(s) for s in traj.samples]
    else:
        samples = traj.samples
    return traj, samples


def _compare_ambient(sc: Scenario, fa: Formulation, fb: Formulation):
    traj_a, samples_a = _integrate_formulation(sc, fa)
    traj_b, samples_b = _integrate_formulation(sc, fb)
    n = min(len(samples_a), len(samples_b))
    times, state_dev, rhs_dev = [], [], []
    for sa, sb in zip(samples_a[:n], samples_b[:n]):
        times.append(sa.time)
        state_dev.append(
            max(
                float(np.max(np.abs(sa.positions - sb.positions))),
                float(np.max(np.abs(sa.velocities - sb.velocities))),
            )
        )
        # RHS of both formulations evaluated on the same (run A) state
        va = acceleration(sa if fa.frame is Frame.NORTH_POLE else state_to_centered(sa), fa)
        vb = acceleration(sa if fb.frame is Frame.NORTH_POLE else state_to_centered(sa), fb)
        rhs_dev.append(float(np.max(np.abs(va - vb))))
    reason = traj_a.termination_reason or traj_b.termination_reason
    return times, state_dev, rhs_dev, reason


def _compare_intrinsic(sc: Scenario, fa: Formulation):
    """Run A (ambient extrinsic) against the intrinsic 2D complex system."""
    planar = np.max(np.abs(sc.flat_positions[:, 2])) == 0.0 and np.max(
        np.abs(sc.flat_velocities[:, 2])
    ) == 0.0
    if not planar:
        raise ScenarioValidationError(
            "intrinsic 2D comparison needs planar data (z = 0)", "flat_positions"
        )
    traj_a, samples_a = _integrate_formulation(sc, fa)
    curv = sc.curvature
    masses = sc.masses

    # project run A and build the intrinsic initial data from its t0 state
    def project(state):
        qc = state_to_centered(state)
        acc = acceleration(qc, Formulation.CENTERED_EXTRINSIC)
        return stereo_pushforward(qc.positions, qc.velocities, acc, curv)

    z0, zd0, _ = project(samples_a[0])
    rhs_cfg = sc.integrator

    def rhs(y):
        half = len(y) // 2
        zs, zds = y[:half], y[half:]
        with np.errstate(all="ignore"):
            acc = accel_intrinsic_2d(zs, zds, masses, curv, check=False)
        return np.concatenate([zds, acc])

    sample_times = [s.time for s in samples_a]
    ys = solve_sampled(rhs, np.concatenate([z0, zd0]), samples_a[0].time,
                       sample_times[1:], rhs_cfg)
    times, state_dev, rhs_dev = [samples_a[0].time], [0.0], [0.0]
    nb = sc.n_bodies
    for state, y in zip(samples_a[1:], ys):
        z_ext, zd_ext, zdd_ext = project(state)
        z_int, zd_int = y[:nb], y[nb:]
        times.append(state.time)
        state_dev.append(
            max(float(np.max(np.abs(z_ext - z_int))), float(np.max(np.abs(zd_ext - zd_int))))
        )
        # intrinsic RHS on the projected extrinsic state vs the pushforward
        zdd_int = accel_intrinsic_2d(z_ext, zd_ext, masses, curv)
        rhs_dev.append(float(np.max(np.abs(zdd_ext - zdd_int))))
    return times, state_dev, rhs_dev, traj_a.termination_reason


def cmd_compare(args) -> int:
    sc, _ = _load(args)
    fa = Formulation(args.formulation_a)
    fb = Formulation(args.formulation_b)
    for f in (fa, fb):
        if not f.valid_at(sc.curvature):
            raise FormulationInvalidAtKappa(
                f"{f.value} is not defined at kappa = {sc.kappa:g}"
            )
    if fb is Formulation.INTRINSIC_2D:
        times, state_dev, rhs_dev, singular_reason = _compare_intrinsic(sc, fa)
    elif fa is Formulation.INTRINSIC_2D:
        times, state_dev, rhs_dev, singular_reason = _compare_intrinsic(sc, fb)
    else:
        times, state_dev, rhs_dev, singular_reason = _compare_ambient(sc, fa, fb)
    out = _out_dir(args, sc)
    out.mkdir(parents=True, exist_ok=True)
    report = out / f"{sc.name}__compare_{fa.value}_vs_{fb.value}.csv"
    with report.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["time", "state_deviation", "rhs_deviation"])
        for row in zip(times, state_dev, rhs_dev):
            writer.writerow([f"{v:.17g}" for v in row])
    print(f"compared:            {fa.value} vs {fb.value} (kappa = {sc.kappa:g})")
    print(f"samples:             {len(times)} over t = {times[-1]:g}")
    print(f"max state deviation: {max(state_dev):.3e}")
    print(f"max RHS deviation:   {max(rhs_dev):.3e}")
    print(f"report:              {report}")
    if not args.no_plots:
        from .plots import render_compare_figure

        print(f"figure:              {render_compare_figure(times, state_dev, rhs_dev, sc.name, out)}")
    if singular_reason is not None:
        return _status(EXIT_SINGULAR, _REASONS[singular_reason])
    return _status(EXIT_OK, "ok")


def _audit_from_csv(args):
    """Audit a previously written trajectory; needs its sibling metadata file."""
    csv_path = Path(args.scenario)
    meta_path = Path(str(csv_path).replace("__trajectory.csv", "__metadata.json"))
    if not meta_path.exists():
        raise ScenarioValidationError(
            f"metadata file {meta_path} not found next to the trajectory", "metadata"
        )
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    sc = parse_scenario(meta["scenario"], source=str(meta_path))
    times, positions, velocities, _ = read_trajectory_csv(csv_path)
    curv = sc.curvature
    frame = sc.formulation.frame
    reports = []
    for t, pos, vel in zip(times, positions, velocities):
        state = SystemState(sc.masses, pos, vel, float(t), curv, frame)
        reports.append(build_report(state, check=False))
    return sc, reports, meta["status"], meta.get("termination_reason")


def cmd_check(args) -> int:
    if args.scenario.endswith(".csv"):
        sc, reports, status, reason = _audit_from_csv(args)
        out = _out_dir(args, sc) if args.output_dir else None
    else:
        sc, overrides = _load(args)
        out = _out_dir(args, sc)
        result = run_scenario(sc, output_dir=out, file_format=args.format,
                              overrides=overrides)
        reports, status = result.trajectory.reports, result.trajectory.status
        reason = result.trajectory.termination_reason
    audit = integral_audit(reports, sc.curvature, drift_tol=args.drift_tol)
    print(f"integral audit: {sc.name} at kappa = {sc.kappa:g}")
    print(f"{'integral':<10} {'expected':<10} {'initial':>24} {'max drift':>12}  verdict")
    for row in audit.rows:
        expected = "conserved" if row.expected_conserved else "varies"
        verdict = "conserved" if row.conserved else "not-conserved"
        print(f"{row.name:<10} {expected:<10} {row.initial:>24.16e} {row.max_drift:>12.3e}  {verdict}")
    print(audit.count_line)
    if not args.no_plots and out is not None:
        from .plots import render_audit_figure

        print(f"figure: {render_audit_figure(audit, sc.name, out)}")
    if status == "singular":
        return _status(EXIT_SINGULAR, _REASONS.get(reason, "CollisionNear"))
    return _status(EXIT_OK, "ok")


def cmd_lift(args) -> int:
    sc, _ = _load(args)
    state = initial_state(replace(sc, formulation=Formulation.UNIFIED))
    res = state.constraint_residual_max()
    print(f"lift of {sc.name} to kappa = {sc.kappa:g} (North-Pole frame)")
    print(f"{'body':<6}{'x':>14}{'y':>14}{'z':>14}{'w':>14}{'vx':>14}{'vy':>14}{'vz':>14}{'vw':>14}")
    for i in range(state.n_bodies):
        p, v = state.positions[i], state.velocities[i]
        print(f"{i + 1:<6}" + "".join(f"{val:>14.6g}" for val in (*p, *v)))
    print(f"max constraint residual: {res:.3e}")
    if args.output_dir is not None:
        out = Path(args.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"{sc.name}__lift.csv"
        with path.open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["body", "x", "y", "z", "w", "vx", "vy", "vz", "vw"])
            for i in range(state.n_bodies):
                writer.writerow(
                    [i + 1]
                    + [f"{v:.17g}" for v in (*state.positions[i], *state.velocities[i])]
                )
        print(f"written: {path}")
    return _status(EXIT_OK, "ok")


_COMMANDS = {
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "compare": cmd_compare,
    "check": cmd_check,
    "lift": cmd_lift,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code in (0, None):
            return _status(EXIT_OK, "ok")
        return _status(EXIT_USAGE, "usage")
    try:
        return _COMMANDS[args.command](args)
    except (FileNotFoundError, ScenarioValidationError, LiftOutOfRange) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _status(EXIT_USAGE, "validation")
    except SingularityReached as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _status(EXIT_SINGULAR, _REASONS[exc.flag])
    except (StepUnderflow, MaxStepsExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _status(EXIT_NUMERICAL, type(exc).__name__)
    except CurvedNBodyError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _status(EXIT_USAGE, "validation")
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return _status(EXIT_NUMERICAL, "InternalError")


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
