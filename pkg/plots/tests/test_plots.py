import json
import subprocess
import sys
from pathlib import Path

import pytest

PLOTS = Path(__file__).resolve().parent.parent
ROOT = PLOTS.parent

SWEEP = PLOTS / "render_sweep.py"
CONV = PLOTS / "render_convergence.py"


def run_script(script, *args):
    return subprocess.run(
        [sys.executable, str(script), *args], capture_output=True, text=True, cwd=PLOTS
    )


@pytest.fixture(scope="session")
def study_csvs(tmp_path_factory):
    """Sweep and simulation CSVs produced through the computation CLI."""
    tmp = tmp_path_factory.mktemp("study")
    cfg = tmp / "dsbs.json"
    cfg.write_text(
        json.dumps(
            {
                "u_sizes": [2],
                "v_size": 2,
                "z_size": 1,
                "p_joint": [0.45, 0.05, 0.05, 0.45],
                "channels": ["bsc:0.1"],
                "tau": 1.0,
                "tau_grid": [0.5, 1.0, 2.0],
                "j_values": [15, 20, 30, 45, 60],
                "trials": 4000,
                "restarts": 16,
            }
        )
    )
    sweep_csv = tmp / "sweep.csv"
    sim_csv = tmp / "simulate.csv"
    for argv in (
        ["sweep", "--config", str(cfg), "--out", str(sweep_csv)],
        ["simulate", "--config", str(cfg), "--seed", "3", "--out", str(sim_csv)],
    ):
        proc = subprocess.run(
            [sys.executable, "-m", "dht", *argv], capture_output=True, text=True, cwd=ROOT
        )
        assert proc.returncode == 0, proc.stderr
    return sweep_csv, sim_csv


def test_sweep_renders_from_cli_output(study_csvs, tmp_path):
    sweep_csv, _ = study_csvs
    out = tmp_path / "sweep.png"
    proc = run_script(SWEEP, "--in", str(sweep_csv), "--out", str(out), "--ref", "0.31992")
    assert proc.returncode == 0, proc.stderr
    assert "monotonicity lint: ok" in proc.stdout
    assert out.exists() and out.stat().st_size > 0


def test_convergence_renders_from_cli_output(study_csvs, tmp_path):
    _, sim_csv = study_csvs
    out = tmp_path / "conv.png"
    proc = run_script(CONV, "--in", str(sim_csv), "--out", str(out), "--ref", "0.31992")
    assert proc.returncode == 0, proc.stderr
    assert out.exists() and out.stat().st_size > 0


def test_sweep_missing_column(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("x,value\n1,0.5\n")
    out = tmp_path / "bad.png"
    proc = run_script(SWEEP, "--in", str(bad), "--out", str(out))
    assert proc.returncode == 1
    assert "MissingColumn" in proc.stderr
    assert not out.exists()


def test_convergence_missing_column(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("j,alpha_hat\n10,0.2\n")
    out = tmp_path / "bad.png"
    proc = run_script(CONV, "--in", str(bad), "--out", str(out))
    assert proc.returncode == 1
    assert "MissingColumn" in proc.stderr


def test_empty_input(tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("tau,value\n")
    proc = run_script(SWEEP, "--in", str(empty), "--out", str(tmp_path / "e.png"))
    assert proc.returncode == 1
    assert "EmptyInput" in proc.stderr
    blank = tmp_path / "blank.csv"
    blank.write_text("")
    proc = run_script(CONV, "--in", str(blank), "--out", str(tmp_path / "b.png"))
    assert proc.returncode == 1
    assert "EmptyInput" in proc.stderr


def test_sweep_lint_flags_decreasing_values(tmp_path):
    csv_path = tmp_path / "dec.csv"
    csv_path.write_text("tau,value\n0.5,0.3\n1.0,0.2\n")
    out = tmp_path / "dec.png"
    proc = run_script(SWEEP, "--in", str(csv_path), "--out", str(out))
    assert proc.returncode == 0
    assert "decrease" in proc.stdout
    assert out.exists()


def test_convergence_uses_beta_hat_when_no_exact_column(tmp_path):
    csv_path = tmp_path / "mc.csv"
    csv_path.write_text("j,beta_hat\n10,0.25\n20,0.0625\n")
    out = tmp_path / "mc.png"
    proc = run_script(CONV, "--in", str(csv_path), "--out", str(out))
    assert proc.returncode == 0, proc.stderr
    assert out.exists() and out.stat().st_size > 0
