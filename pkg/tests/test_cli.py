"""Command-line interface: exit codes, STATUS lines, files, and figures."""

import json

from curvednbody.cli import main

from helpers import SCENARIO_DIR

TWO_BODY = str(SCENARIO_DIR / "two_body_flat.scn")
HEADON = str(SCENARIO_DIR / "headon_flat.scn")
ASYM = str(SCENARIO_DIR / "asym_two_body.scn")
PLANAR = str(SCENARIO_DIR / "two_body_sphere_planar.scn")


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def last_status(err):
    lines = [line for line in err.strip().splitlines() if line]
    return lines[-1]


def test_simulate_success(tmp_path, capsys):
    code, out, err = run_cli(
        capsys, "simulate", TWO_BODY, "--t-end", "1.0",
        "--output-dir", str(tmp_path), "--no-plots",
    )
    assert code == 0
    assert last_status(err) == "STATUS 0 ok"
    assert (tmp_path / "two_body_flat__trajectory.csv").exists()
    meta = json.loads((tmp_path / "two_body_flat__metadata.json").read_text())
    assert meta["overrides"] == {"t_end": 1.0}
    assert meta["drift"]["energy_rel"] < 1e-8


def test_simulate_renders_figures_by_default(tmp_path, capsys):
    code, out, err = run_cli(
        capsys, "simulate", TWO_BODY, "--t-end", "0.5", "--sample-dt", "0.1",
        "--output-dir", str(tmp_path),
    )
    assert code == 0
    assert (tmp_path / "two_body_flat__trajectory.png").exists()
    assert (tmp_path / "two_body_flat__conserved.png").exists()


def test_simulate_singular_exit_code(tmp_path, capsys):
    code, out, err = run_cli(
        capsys, "simulate", HEADON, "--output-dir", str(tmp_path), "--no-plots"
    )
    assert code == 2
    assert last_status(err) == "STATUS 2 CollisionNear"


def test_missing_file_names_path(tmp_path, capsys):
    code, out, err = run_cli(capsys, "simulate", "no/such/file.scn")
    assert code == 1
    assert "no/such/file.scn" in err
    assert last_status(err) == "STATUS 1 validation"


def test_usage_error(capsys):
    code, out, err = run_cli(capsys, "simulate")  # missing scenario argument
    assert code == 1
    assert last_status(err) == "STATUS 1 usage"


def test_invalid_override_combination(tmp_path, capsys):
    # lift range: kappa=3 with |p| = 0.6 -> kappa*rho**2 = 1.08 >= 1
    code, out, err = run_cli(
        capsys, "simulate", ASYM, "--kappa", "3.0",
        "--output-dir", str(tmp_path), "--no-plots",
    )
    assert code == 1
    assert last_status(err) == "STATUS 1 validation"


def test_identical_invocations_byte_identical(tmp_path, capsys):
    args = ("simulate", ASYM, "--t-end", "0.5", "--no-plots")
    run_cli(capsys, *args, "--output-dir", str(tmp_path / "a"))
    run_cli(capsys, *args, "--output-dir", str(tmp_path / "b"))
    fa = (tmp_path / "a" / "asym_two_body__trajectory.csv").read_bytes()
    fb = (tmp_path / "b" / "asym_two_body__trajectory.csv").read_bytes()
    assert fa == fb


def test_check_flat_counts_ten(tmp_path, capsys):
    code, out, err = run_cli(
        capsys, "check", ASYM, "--output-dir", str(tmp_path), "--no-plots"
    )
    assert code == 0
    assert "conserved: 10/10" in out


def test_check_curved_counts_seven_and_flags_momentum(tmp_path, capsys):
    code, out, err = run_cli(
        capsys, "check", ASYM, "--kappa", "1.0",
        "--output-dir", str(tmp_path), "--no-plots",
    )
    assert code == 0
    assert "conserved: 7" in out
    momentum_lines = [line for line in out.splitlines() if line.startswith("p_")]
    assert momentum_lines and any("not-conserved" in line for line in momentum_lines)


def test_check_on_existing_trajectory(tmp_path, capsys):
    run_cli(capsys, "simulate", ASYM, "--output-dir", str(tmp_path), "--no-plots")
    csv_path = tmp_path / "asym_two_body__trajectory.csv"
    code, out, err = run_cli(capsys, "check", str(csv_path), "--no-plots")
    assert code == 0
    assert "conserved: 10/10" in out


def test_check_com_row_uses_b_constancy(tmp_path, capsys):
    # scenario with net momentum: b = sum(m r) - p t stays fixed even though
    # the center of mass moves
    drifting = {
        "format_version": 1,
        "name": "drifting_pair",
        "masses": [1.0, 1.0],
        "flat_positions": [[0.5, 0.0, 0.0], [-0.5, 0.0, 0.0]],
        "flat_velocities": [[0.3, -0.5, 0.1], [0.3, 0.9, 0.1]],
        "kappa": 0.0,
        "t_end": 2.0,
        "sample_dt": 0.1,
    }
    path = tmp_path / "drifting_pair.scn"
    path.write_text(json.dumps(drifting))
    code, out, err = run_cli(
        capsys, "check", str(path), "--output-dir", str(tmp_path), "--no-plots"
    )
    assert code == 0
    assert "conserved: 10/10" in out


def test_sweep_summary_and_momentum_flags(tmp_path, capsys):
    code, out, err = run_cli(
        capsys, "sweep", ASYM, "--kappas=-0.1,0,0.1",
        "--output-dir", str(tmp_path), "--no-plots",
    )
    assert code == 0
    summary = (tmp_path / "asym_two_body__sweep_summary.csv").read_text().splitlines()
    assert summary[0].startswith("kappa,status,")
    flags = {row.split(",")[0]: row.split(",")[4] for row in summary[1:]}
    assert flags["0.0"] == "true"
    assert flags["-0.1"] == "false" and flags["0.1"] == "false"


def test_compare_unified_vs_centered(tmp_path, capsys):
    code, out, err = run_cli(
        capsys, "compare", ASYM, "--kappa", "1.0",
        "--formulation-b", "centered_extrinsic",
        "--output-dir", str(tmp_path), "--no-plots",
    )
    assert code == 0
    max_dev = float(
        [line for line in out.splitlines() if "max state deviation" in line][0].split()[-1]
    )
    assert max_dev < 1e-7
    reports = list(tmp_path.glob("*__compare_*.csv"))
    assert len(reports) == 1


def test_compare_unified_vs_newtonian_rhs_exact(tmp_path, capsys):
    code, out, err = run_cli(
        capsys, "compare", TWO_BODY, "--t-end", "1.0",
        "--formulation-b", "newtonian",
        "--output-dir", str(tmp_path), "--no-plots",
    )
    assert code == 0
    rhs_dev = float(
        [line for line in out.splitlines() if "max RHS deviation" in line][0].split()[-1]
    )
    assert rhs_dev <= 1e-15


def test_compare_formulation_invalid_at_kappa(capsys):
    code, out, err = run_cli(capsys, "compare", TWO_BODY, "--formulation-b", "centered_extrinsic")
    assert code == 1  # centered extrinsic undefined at kappa = 0
    assert last_status(err) == "STATUS 1 validation"


def test_compare_intrinsic(tmp_path, capsys):
    code, out, err = run_cli(
        capsys, "compare", PLANAR, "--formulation-a", "centered_extrinsic",
        "--formulation-b", "intrinsic_2d",
        "--output-dir", str(tmp_path), "--no-plots",
    )
    assert code == 0
    max_dev = float(
        [line for line in out.splitlines() if "max state deviation" in line][0].split()[-1]
    )
    assert max_dev < 1e-6


def test_simulate_jsonl_format(tmp_path, capsys):
    code, out, err = run_cli(
        capsys, "simulate", ASYM, "--t-end", "0.5", "--format", "jsonl",
        "--output-dir", str(tmp_path), "--no-plots",
    )
    assert code == 0
    path = tmp_path / "asym_two_body__trajectory.jsonl"
    assert path.exists()
    first = json.loads(path.read_text().splitlines()[0])
    assert first["time"] == 0.0 and "energy" in first


def test_compare_intrinsic_as_formulation_a(tmp_path, capsys):
    # order should not matter: intrinsic on either side works
    code, out, err = run_cli(
        capsys, "compare", PLANAR, "--formulation-a", "intrinsic_2d",
        "--formulation-b", "centered_extrinsic",
        "--output-dir", str(tmp_path), "--no-plots",
    )
    assert code == 0
    max_dev = float(
        [line for line in out.splitlines() if "max state deviation" in line][0].split()[-1]
    )
    assert max_dev < 1e-6


def test_compare_intrinsic_rejects_nonplanar(tmp_path, capsys):
    scn = json.loads((SCENARIO_DIR / "two_body_sphere_planar.scn").read_text())
    scn["flat_positions"][0][2] = 0.1
    scn["name"] = "tilted"
    path = tmp_path / "tilted.scn"
    path.write_text(json.dumps(scn))
    code, out, err = run_cli(
        capsys, "compare", str(path), "--formulation-b", "intrinsic_2d", "--no-plots",
        "--output-dir", str(tmp_path),
    )
    assert code == 1
    assert last_status(err) == "STATUS 1 validation"


def test_lift_command(capsys):
    code, out, err = run_cli(capsys, "lift", TWO_BODY, "--kappa", "-1.0")
    assert code == 0
    assert "max constraint residual" in out
    resid = float(out.strip().splitlines()[-1].split()[-1])
    assert resid < 1e-12


def test_figures_rendered_for_sweep_and_check(tmp_path, capsys):
    code, _, _ = run_cli(
        capsys, "sweep", ASYM, "--kappas", "0,0.1", "--output-dir", str(tmp_path)
    )
    assert code == 0
    assert (tmp_path / "asym_two_body__sweep.png").exists()
    code, _, _ = run_cli(capsys, "check", ASYM, "--output-dir", str(tmp_path))
    assert code == 0
    assert (tmp_path / "asym_two_body__audit.png").exists()
