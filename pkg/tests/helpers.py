"""Shared generators for the test suite."""

from pathlib import Path

import numpy as np

from curvednbody import Curvature, Frame, SystemState, lift_to_curvature

SCENARIO_DIR = Path(__file__).resolve().parents[1] / "scenarios"


def lifted_state(
    kappa,
    n=3,
    rng=None,
    pos_scale=0.4,
    vel_scale=0.6,
    min_sep=0.15,
    masses=None,
    time=0.0,
):
    """Random constraint-satisfying North-Pole state built through the lift.

    Flat Gaussian draws are lifted to the requested curvature; draws whose
    bodies come too close (or fall outside the kappa > 0 lift range) are
    rejected and retried.
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    curv = Curvature(kappa)
    if masses is None:
        masses = rng.uniform(0.5, 2.0, n)
    masses = np.asarray(masses, dtype=float)
    while True:
        flat_pos = rng.normal(0.0, pos_scale, (n, 3))
        flat_vel = rng.normal(0.0, vel_scale, (n, 3))
        if kappa > 0 and np.max(np.sum(flat_pos**2, axis=1)) * kappa >= 0.9:
            continue
        if n > 1:
            seps = [
                np.linalg.norm(flat_pos[i] - flat_pos[j])
                for i in range(n - 1)
                for j in range(i + 1, n)
            ]
            if min(seps) < min_sep:
                continue
        pos = np.zeros((n, 4))
        vel = np.zeros((n, 4))
        for i in range(n):
            pos[i], vel[i] = lift_to_curvature(flat_pos[i], flat_vel[i], curv)
        return SystemState(masses, pos, vel, time, curv, Frame.NORTH_POLE)


def sphere_point(curv, rng):
    """Uniform random point on the centered-frame manifold (either sign)."""
    if curv.kappa > 0:
        v = rng.normal(0.0, 1.0, 4)
        return v / np.linalg.norm(v) / curv.sqrt_abs
    p = rng.normal(0.0, 0.5, 3)
    w = np.sqrt(p @ p + 1.0 / abs(curv.kappa))
    return np.array([*p, w])


def tangent_vector(q, curv, rng):
    """Random unit tangent vector at a centered-frame point (signed metric)."""
    from curvednbody import signed_dot

    v = rng.normal(0.0, 1.0, 4)
    v = v - curv.kappa * float(signed_dot(q, v, curv)) * q
    return v / np.linalg.norm(v)
