"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines.  Tolerances are pinned here, not configurable.
"""

import math
from dataclasses import replace

import numpy as np

from curvednbody import (
    Curvature,
    Formulation,
    Frame,
    IntegratorConfig,
    SystemState,
    accel_centered,
    accel_intrinsic_2d,
    accel_newtonian,
    accel_northpole_extrinsic,
    accel_unified,
    chordal_accel_terms,
    chordal_potential,
    cotangent_gradient,
    cotangent_potential,
    hybrid_momenta,
    integral_audit,
    integrate,
    load_scenario,
    run_scenario,
    signed_dot,
    state_to_centered,
    stereo_pushforward,
    wedge_momenta,
)
from curvednbody.integrators import PROJECTION_NONE, SCHEME_FIXED_RK4
from curvednbody.scenario_io import flat_block_distance, initial_state

from helpers import SCENARIO_DIR, lifted_state, tangent_vector


def _report(num, label, ok, detail):
    print(f"ACCEPTANCE {num:02d} {'PASS' if ok else 'FAIL'}: {label} ({detail})")
    assert ok, f"criterion {num}: {label} ({detail})"


def test_criterion_01_potential_identity():
    rng = np.random.default_rng(101)
    worst = 0.0
    for kappa in (2.0, -2.0, 1.0, -1.0, 0.1, -0.1):
        for _ in range(100):
            s = lifted_state(kappa, n=4, rng=rng)
            qc = state_to_centered(s)
            u = cotangent_potential(qc.positions, s.masses, s.curvature)
            v = chordal_potential(s.positions, s.masses, s.curvature, Frame.NORTH_POLE)
            worst = max(worst, abs(u - v) / abs(v))
    _report(1, "cotangent and chordal force functions agree on-manifold", worst < 1e-10,
            f"worst rel gap {worst:.2e}")


def test_criterion_02_cotangent_law():
    worst = 0.0
    for kappa in (2.0, 1.0, 0.5):
        b = math.sqrt(kappa)
        for frac in np.linspace(0.05, 0.95, 19):
            d = frac * math.pi / b
            q = np.array(
                [
                    [0.0, 0.0, 0.0, 1.0 / b],
                    [math.sin(b * d) / b, 0.0, 0.0, math.cos(b * d) / b],
                ]
            )
            v = chordal_potential(q, np.ones(2), Curvature(kappa), Frame.CENTERED)
            worst = max(worst, abs(v - b / math.tan(b * d)))
    for kappa in (-2.0, -1.0, -0.5):
        b = math.sqrt(-kappa)
        for d in np.linspace(0.1, 3.0, 19):
            q = np.array(
                [
                    [0.0, 0.0, 0.0, 1.0 / b],
                    [math.sinh(b * d) / b, 0.0, 0.0, math.cosh(b * d) / b],
                ]
            )
            v = chordal_potential(q, np.ones(2), Curvature(kappa), Frame.CENTERED)
            worst = max(worst, abs(v - b / math.tanh(b * d)))
    _report(2, "unit-mass pair potential equals the cot/coth law", worst < 1e-10,
            f"worst abs gap {worst:.2e}")


def test_criterion_03_formulation_equivalence():
    rng = np.random.default_rng(103)
    worst_centered = worst_shifted = 0.0
    for kappa in (1.0, -1.0, 0.25, -0.25):
        for _ in range(100):
            s = lifted_state(kappa, n=3, rng=rng)
            a = accel_unified(s)
            c = accel_centered(state_to_centered(s))
            np_acc = accel_northpole_extrinsic(s)
            worst_centered = max(worst_centered, float(np.max(np.abs(a - c))))
            worst_shifted = max(worst_shifted, float(np.max(np.abs(a - np_acc))))
    ok = worst_centered < 1e-10 and worst_shifted < 1e-10
    _report(3, "unified RHS matches the centered and shifted extrinsic systems", ok,
            f"centered {worst_centered:.2e}, shifted {worst_shifted:.2e}")


def test_criterion_04_flat_specialization():
    rng = np.random.default_rng(104)
    worst = 0.0
    for _ in range(50):
        s = lifted_state(0.0, n=5, rng=rng, pos_scale=1.0, vel_scale=1.0)
        worst = max(worst, float(np.max(np.abs(accel_unified(s) - accel_newtonian(s)))))
    _report(4, "unified equations reduce to Newton's at kappa = 0", worst <= 1e-15,
            f"worst component gap {worst:.2e}")


def test_criterion_05_kappa_continuity():
    sc = load_scenario(SCENARIO_DIR / "three_body_bound.scn")
    sc = replace(sc, t_end=2.0, sample_dt=0.5)

    def final_state(kappa):
        member = replace(sc, kappa=kappa)
        return run_scenario(member).trajectory.final_state

    flat_end = final_state(0.0)
    ratios = []
    for sign in (1.0, -1.0):
        devs = [
            flat_block_distance(final_state(sign * 10.0 ** (-k)), flat_end) for k in (2, 3, 4)
        ]
        ratios += [devs[0] / devs[1], devs[1] / devs[2]]
    ok = all(5.0 < r < 20.0 for r in ratios)
    _report(5, "final state converges to the flat run at O(kappa)", ok,
            "ratios per decade " + ", ".join(f"{r:.2f}" for r in ratios))


def test_criterion_06_conservation_drift():
    sc = load_scenario(SCENARIO_DIR / "three_body_bound.scn")
    assert sc.integrator.scheme == "adaptive_rk45"
    assert sc.integrator.rel_tol == 1e-10
    assert sc.integrator.projection == "post_step"
    res = run_scenario(sc)  # kappa = 1, t_end = 10
    drift = res.trajectory.drift
    ok = (
        res.status == "completed"
        and drift["energy_rel"] < 1e-7
        and drift["wedge_abs_max"] < 1e-7
        and drift["hybrid_abs_max"] < 1e-7
        and drift["residual_max"] < 1e-9
    )
    _report(
        6,
        "energy/momenta/constraint drift over t=10 within budget",
        ok,
        f"energy {drift['energy_rel']:.2e}, wedge {drift['wedge_abs_max']:.2e}, "
        f"hybrid {drift['hybrid_abs_max']:.2e}, residual {drift['residual_max']:.2e}",
    )


def test_criterion_07_bifurcation_audit():
    sc = load_scenario(SCENARIO_DIR / "asym_two_body.scn")  # masses 1 and 2, t_end 2

    def run_at(kappa):
        return run_scenario(replace(sc, kappa=kappa)).trajectory

    flat = run_at(0.0)
    audit_flat = integral_audit(flat.reports, Curvature(0.0))
    counts_ok = (audit_flat.conserved_count, audit_flat.expected_count) == (10, 10)
    momentum_flat = flat.drift["linear_momentum_abs_max"]
    curved_counts = []
    momentum_curved = []
    for kappa in (0.5, -0.5):
        traj = run_at(kappa)
        audit = integral_audit(traj.reports, Curvature(kappa))
        curved_counts.append((audit.conserved_count, audit.expected_count))
        momentum_curved.append(traj.drift["linear_momentum_abs_max"])
    ok = (
        counts_ok
        and all(c == (7, 7) for c in curved_counts)
        and momentum_flat < 1e-10
        and all(m > 1e-3 for m in momentum_curved)
    )
    _report(
        7,
        "integral count bifurcates 10 (flat) vs 7 (curved); momentum varies only off-flat",
        ok,
        f"flat momentum {momentum_flat:.1e}, curved momentum "
        + ", ".join(f"{m:.1e}" for m in momentum_curved),
    )


def test_criterion_08_hybrid_momentum_identity():
    rng = np.random.default_rng(108)
    worst = 0.0
    for kappa in (2.0, -2.0, 1.0, -1.0, 0.25, -0.25):
        for _ in range(50):
            s = lifted_state(kappa, n=3, rng=rng)
            h = hybrid_momenta(s)
            w = wedge_momenta(state_to_centered(s))
            worst = max(worst, float(np.max(np.abs(h - s.curvature.sqrt_abs * w[:3]))))
    _report(8, "hybrid momenta equal |kappa|**0.5 times the shifted wedge momenta",
            worst < 1e-12, f"worst gap {worst:.2e}")


def test_criterion_09_gradient_correctness():
    rng = np.random.default_rng(109)
    eps = 1e-5
    worst = 0.0
    for kappa in (1.0, -1.0, 0.5, -0.5):
        for _ in range(10):
            s = lifted_state(kappa, n=3, rng=rng)
            qc = state_to_centered(s).positions
            curv, masses = s.curvature, s.masses
            grad = cotangent_gradient(qc, masses, curv)
            force = chordal_accel_terms(qc, masses, curv, Frame.CENTERED) * masses[:, None]
            for i in range(3):
                v = tangent_vector(qc[i], curv, rng)
                qp, qm = qc.copy(), qc.copy()
                qp[i] = qc[i] + eps * v
                qm[i] = qc[i] - eps * v
                fd_u = (
                    cotangent_potential(qp, masses, curv)
                    - cotangent_potential(qm, masses, curv)
                ) / (2 * eps)
                fd_v = (
                    chordal_potential(qp, masses, curv, Frame.CENTERED)
                    - chordal_potential(qm, masses, curv, Frame.CENTERED)
                ) / (2 * eps)
                worst = max(
                    worst,
                    abs(fd_u - float(signed_dot(grad[i], v, curv))) / max(abs(fd_u), 1e-30),
                    abs(fd_v - float(signed_dot(force[i], v, curv))) / max(abs(fd_v), 1e-30),
                )
    _report(9, "closed-form gradients match tangent finite differences", worst < 1e-6,
            f"worst rel gap {worst:.2e}")


def test_criterion_10_integrator_order():
    s0 = SystemState(
        masses=np.array([1.0]),
        positions=np.zeros((1, 4)),
        velocities=np.array([[1.0, 0.0, 0.0, 0.0]]),
        time=0.0,
        curvature=Curvature(1.0),
        frame=Frame.NORTH_POLE,
    )
    errs = []
    hs = [0.1, 0.05, 0.025, 0.0125]
    for h in hs:
        cfg = IntegratorConfig(scheme=SCHEME_FIXED_RK4, step=h, projection=PROJECTION_NONE)
        end = integrate(s0, Formulation.UNIFIED, cfg, 2.0 * math.pi, 2.0 * math.pi).final_state
        errs.append(
            max(
                float(np.max(np.abs(end.positions - s0.positions))),
                float(np.max(np.abs(end.velocities - s0.velocities))),
            )
        )
    slope = float(np.polyfit(np.log(hs), np.log(errs), 1)[0])
    _report(10, "fixed RK4 shows fourth-order convergence on the exact geodesic",
            abs(slope - 4.0) <= 0.3, f"measured slope {slope:.3f}")


def test_criterion_11_intrinsic_cross_check():
    sc = load_scenario(SCENARIO_DIR / "two_body_sphere_planar.scn")
    worst = 0.0
    for kappa in (1.0, -1.0):
        member = replace(sc, kappa=kappa, formulation=Formulation.CENTERED_EXTRINSIC)
        state0 = initial_state(member)
        traj = integrate(state0, member.formulation, member.integrator, 1.0, 0.05)
        assert traj.status == "completed"
        curv = member.curvature
        for s in traj.samples:
            acc = accel_centered(s)
            zs, zds, zdd = stereo_pushforward(s.positions, s.velocities, acc, curv)
            rhs = accel_intrinsic_2d(zs, zds, member.masses, curv)
            worst = max(worst, float(np.max(np.abs(zdd - rhs))))
    _report(11, "projected extrinsic motion satisfies the intrinsic 2D equations",
            worst < 1e-6, f"worst per-sample residual {worst:.2e}")
