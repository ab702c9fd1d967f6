import json

import numpy as np
import pytest

from dht.cli import main
from dht.config import load_config
from dht.errors import ConfigError

DSBS_DOC = {
    "u_sizes": [2],
    "v_size": 2,
    "z_size": 1,
    "p_joint": [0.45, 0.05, 0.05, 0.45],
    "channels": ["bsc:0.1"],
    "tau": 1.0,
}


def write_config(tmp_path, name="cfg.json", **overrides):
    doc = dict(DSBS_DOC)
    doc.update(overrides)
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def test_capacity_stdout(capsys):
    assert main(["capacity", "--channel", "bsc:0.1"]) == 0
    assert capsys.readouterr().out == "0.531004\n"
    assert main(["capacity", "--channel", "bsc:0.5"]) == 0
    assert capsys.readouterr().out == "0.000000\n"


def test_capacity_invalid_probability_exit_code(capsys):
    assert main(["capacity", "--channel", "bsc:1.5"]) == 2
    err = capsys.readouterr().err
    assert "bsc" in err and "1.5" in err


def test_exponent_summary_line(tmp_path, capsys):
    cfg = write_config(tmp_path, restarts=24)
    out = tmp_path / "exp.csv"
    assert main(["exponent", "--config", str(cfg), "--out", str(out)]) == 0
    assert "theta=0.3199" in capsys.readouterr().out
    header, row = out.read_text().strip().split("\n")
    assert header == "tau,value,lower_bound,upper_bound,status,restarts_used"
    assert row.split(",")[0] == "1"


def test_oracle_identity_sum(tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "oracle.csv"
    assert main(["oracle", "--config", str(cfg), "--k", "1", "--out", str(out)]) == 0
    row = out.read_text().strip().split("\n")[1].split(",")
    theta, r_k = float(row[2]), float(row[3])
    assert abs(theta + r_k - 1.0) <= 1e-9


def test_unknown_config_key_is_rejected(tmp_path, capsys):
    cfg = write_config(tmp_path, p_jointt=[1.0])
    assert main(["exponent", "--config", str(cfg)]) == 2
    assert "p_jointt" in capsys.readouterr().err


def test_wrong_cell_count_names_field(tmp_path, capsys):
    cfg = write_config(tmp_path, p_joint=[0.5, 0.5])
    assert main(["exponent", "--config", str(cfg)]) == 2
    assert "p_joint" in capsys.readouterr().err


def test_budget_exit_code(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("DHT_BUDGET_CELLS", "2")
    cfg = write_config(tmp_path, k=1)
    assert main(["oracle", "--config", str(cfg), "--k", "1"]) == 4


def test_simulate_deterministic_across_runs_and_threads(tmp_path):
    cfg = write_config(tmp_path, j_values=[10, 20], trials=2000)
    outs = []
    for name, threads in [("a.csv", "1"), ("b.csv", "1"), ("c.csv", "8")]:
        out = tmp_path / name
        rc = main(
            ["simulate", "--config", str(cfg), "--seed", "7", "--threads", threads, "--out", str(out)]
        )
        assert rc == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1] == outs[2]


def test_sweep_outputs_monotone_curve(tmp_path):
    cfg = write_config(tmp_path, tau_grid=[0.5, 1.0, 2.0], restarts=16)
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--config", str(cfg), "--out", str(out)]) == 0
    rows = out.read_text().strip().split("\n")[1:]
    vals = [float(r.split(",")[1]) for r in rows]
    assert len(vals) == 3
    assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def test_sweep_requires_grid(tmp_path, capsys):
    cfg = write_config(tmp_path)
    assert main(["sweep", "--config", str(cfg)]) == 2
    assert "tau_grid" in capsys.readouterr().err


def test_bounds_csv(tmp_path):
    cfg = write_config(tmp_path, restarts=16)
    out = tmp_path / "bounds.csv"
    assert main(["bounds", "--config", str(cfg), "--out", str(out)]) == 0
    row = out.read_text().strip().split("\n")[1].split(",")
    assert abs(float(row[1]) - float(row[3])) < 1e-9  # single helper: bounds coincide


def test_load_config_round_trip(tmp_path):
    cfg_path = write_config(tmp_path, seed=11, trials=500)
    cfg = load_config(cfg_path)
    assert cfg.seed == 11 and cfg.trials == 500
    assert cfg.tau == 1.0


def test_matrix_channel_relative_to_config(tmp_path):
    (tmp_path / "law.csv").write_text("0.8,0.2\n0.3,0.7\n")
    cfg = write_config(tmp_path, channels=["matrix:law.csv"])
    from dht.config import build_instance

    inst = build_instance(load_config(cfg))
    assert inst.channels[0].matrix[0, 1] == pytest.approx(0.2)


def test_encoder_matrix_validation(tmp_path):
    cfg_path = write_config(tmp_path, encoder=[[0.5, 0.5]])
    from dht.config import build_encoder, build_instance

    cfg = load_config(cfg_path)
    inst = build_instance(cfg)
    with pytest.raises(ConfigError):
        build_encoder(cfg, inst, k=1)
