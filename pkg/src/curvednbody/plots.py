"""Figure rendering for run reports.

Every figure is written to a file next to the delimited data outputs; the
Agg backend is forced so the CLI never needs a display.  Figures are a
convenience view; the CSV/JSONL files remain the authoritative outputs.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_DPI = 150


def _save(fig, path: Path) -> Path:
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def render_run_figures(records, name: str, out_dir) -> list:
    """Orbit view plus conserved-drift/residual view for one trajectory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    times = np.array([r.time for r in records])
    pos = np.stack([r.positions for r in records])  # (S, N, 4)
    n = pos.shape[1]
    written = []

    fig, ax = plt.subplots(figsize=(5.0, 5.0))
    for i in range(n):
        ax.plot(pos[:, i, 0], pos[:, i, 1], lw=0.8, label=f"body {i + 1}")
        ax.plot(pos[0, i, 0], pos[0, i, 1], "o", ms=4, color=ax.lines[-1].get_color())
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_title(f"{name}: trajectories (x-y view)")
    ax.legend(fontsize=8)
    written.append(_save(fig, out / f"{name}__trajectory.png"))

    energy = np.array([r.conserved.energy for r in records])
    resid = np.array([r.constraint_residual_max for r in records])
    momenta = np.stack(
        [np.concatenate([r.conserved.wedge[3:], r.conserved.hybrid]) for r in records]
    )
    labels = ["c_xy", "c_xz", "c_yz", "h_x", "h_y", "h_z"]
    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6.0, 6.0), sharex=True)
    floor = 1e-18
    ax1.semilogy(times, np.abs(energy - energy[0]) + floor, label="|H - H(0)|")
    for k, lab in enumerate(labels):
        ax1.semilogy(times, np.abs(momenta[:, k] - momenta[0, k]) + floor, lw=0.8, label=lab)
    ax1.set_ylabel("integral drift")
    ax1.legend(fontsize=7, ncol=4)
    ax1.set_title(f"{name}: first-integral drift and constraint residual")
    ax2.semilogy(times, resid + floor, color="k")
    ax2.set_ylabel("residual")
    ax2.set_xlabel("time")
    written.append(_save(fig, out / f"{name}__conserved.png"))
    return written


def render_sweep_figure(rows, name: str, out_dir) -> Path:
    """Final-state distance to the flat run and drifts against kappa."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    kappas = np.array([r.kappa for r in rows])
    dist = np.array([r.final_state_distance_to_flat for r in rows])
    edrift = np.array([r.energy_drift for r in rows])
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9.0, 4.0))
    ax1.plot(kappas, dist, "o-")
    ax1.set_xlabel("kappa")
    ax1.set_ylabel("final-state distance to flat run")
    ax1.set_title(f"{name}: continuation in kappa")
    ax2.semilogy(kappas, np.maximum(edrift, 1e-18), "o-")
    ax2.set_xlabel("kappa")
    ax2.set_ylabel("relative energy drift")
    fig.tight_layout()
    return _save(fig, out / f"{name}__sweep.png")


def render_compare_figure(times, state_dev, rhs_dev, name: str, out_dir) -> Path:
    """Deviation-vs-time view for a formulation comparison."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    floor = 1e-18
    ax.semilogy(times, np.asarray(state_dev) + floor, label="state deviation")
    ax.semilogy(times, np.asarray(rhs_dev) + floor, label="RHS deviation")
    ax.set_xlabel("time")
    ax.set_ylabel("max abs deviation")
    ax.set_title(f"{name}: formulation comparison")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, out / f"{name}__compare.png")


def render_audit_figure(audit, name: str, out_dir) -> Path:
    """Per-integral drift bars with the conservation threshold marked."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    names = [row.name for row in audit.rows]
    drifts = np.array([max(row.max_drift, 1e-18) for row in audit.rows])
    colors = ["tab:blue" if row.expected_conserved else "tab:red" for row in audit.rows]
    fig, ax = plt.subplots(figsize=(7.0, 4.0))
    ax.bar(range(len(names)), drifts, color=colors)
    ax.set_yscale("log")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=45, fontsize=8)
    ax.set_ylabel("max drift")
    ax.set_title(f"{name}: integral audit at kappa = {audit.kappa:g} ({audit.count_line})")
    fig.tight_layout()
    return _save(fig, out / f"{name}__audit.png")
