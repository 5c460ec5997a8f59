import json
import os

import numpy as np
import pytest

from qdpd import cli, harness
from qdpd.harness import ConfigError

CONFIG_DIR = os.path.join(os.path.dirname(__file__), "..", "configs")


def _write(tmp_path, text, name="run.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


MINIMAL = """\
[problem]
name = table1

[topology]
name = ring
nodes = 12

[params]
mode = manual
t = 0.05
l0 = 0.8
step_decay = 0.0015
l = 67

[run]
horizon_periods = {horizon}
x0 = -9, 4, -9, -9, 0, -8, 6, 6, 4, -7, 3, 0
output = {out}
"""


def test_shipped_config_loads():
    cfg = harness.load_config(os.path.join(CONFIG_DIR, "table1.cfg"))
    assert cfg.problem_name == "table1"
    assert cfg.topology_name == "ring"
    assert cfg.T == 0.05
    assert cfg.l0 == 0.8
    assert cfg.step_decay == 0.1
    assert cfg.L == 67
    assert cfg.horizon_periods == 8000
    assert cfg.alpha == 1.0
    assert cfg.substeps == 50
    np.testing.assert_array_equal(
        cfg.x0, [-9, 4, -9, -9, 0, -8, 6, 6, 4, -7, 3, 0]
    )


def test_empty_config_rejected(tmp_path):
    path = _write(tmp_path, "")
    with pytest.raises(ConfigError):
        harness.load_config(path)


def test_unknown_keys_listed(tmp_path):
    path = _write(tmp_path,
                  "[problem]\nname = table1\nbogus = 1\n"
                  "[topology]\nname = ring\nnodes = 12\nweird = 2\n"
                  "[params]\nmode = manual\nt = 0.05\nl0 = 0.8\n"
                  "step_decay = 0.1\nl = 67\n"
                  "[run]\nhorizon_periods = 1\n")
    with pytest.raises(ConfigError) as err:
        harness.load_config(path)
    msg = str(err.value)
    assert "problem.bogus" in msg and "topology.weird" in msg


def test_negative_alpha_rejected(tmp_path):
    text = MINIMAL.format(horizon=1, out="o").replace(
        "mode = manual", "mode = manual\nalpha = -1"
    )
    with pytest.raises(ConfigError):
        harness.load_config(_write(tmp_path, text))


def test_missing_manual_keys(tmp_path):
    text = (
        "[problem]\nname = table1\n[topology]\nname = ring\nnodes = 12\n"
        "[params]\nmode = manual\nt = 0.05\n[run]\nhorizon_periods = 1\n"
    )
    with pytest.raises(ConfigError) as err:
        harness.load_config(_write(tmp_path, text))
    assert "l0" in str(err.value)


def test_missing_file():
    with pytest.raises(ConfigError):
        harness.load_config("/nonexistent/nope.cfg")


def test_minimal_run_and_export(tmp_path):
    out = tmp_path / "out"
    path = _write(tmp_path, MINIMAL.format(horizon=1, out=out))
    cfg = harness.load_config(path)
    traj, diagnostics, manifest = harness.run_experiment(cfg)
    paths = harness.export(traj, diagnostics, manifest, str(out))
    for p in paths:
        assert os.path.exists(p)
    with open(paths[0]) as fh:
        header = fh.readline().strip()
    cols = header.split(",")
    assert cols[0] == "t"
    assert cols[1] == "x_1" and cols[12] == "x_12"
    assert cols[13] == "lambda_1" and cols[24] == "lambda_12"
    assert cols[25] == "qx_1" and cols[36] == "qx_12"
    assert cols[37] == "qlambda_1" and cols[48] == "qlambda_12"
    assert cols[49] == "e_norm" and cols[50] == "bits_cum"
    with open(paths[1]) as fh:
        assert fh.readline().strip() == (
            "t,F_norm,V,consensus_residual,dual_sum,tracking_error,J"
        )
    with open(paths[2]) as fh:
        m = json.load(fh)
    assert m["exit_status"] == 0
    assert m["parameters"]["L"] == 67
    assert len(m["config_sha256"]) == 64


def test_bits_accounting(tmp_path):
    out = tmp_path / "out"
    path = _write(tmp_path, MINIMAL.format(horizon=3, out=out))
    cfg = harness.load_config(path)
    traj, _, _ = harness.run_experiment(cfg)
    # 12 agents, 2 coordinates per frame, 7 bits per index.
    per_step = 12 * 2 * 7
    np.testing.assert_array_equal(traj.bits_cum, [0, per_step, 2 * per_step,
                                                  3 * per_step])


def test_determinism_byte_identical(tmp_path):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    path = _write(tmp_path, MINIMAL.format(horizon=30, out=out1))
    cfg = harness.load_config(path)
    traj, diag, manifest = harness.run_experiment(cfg)
    harness.export(traj, diag, manifest, str(out1))
    traj2, diag2, manifest2 = harness.run_experiment(cfg)
    harness.export(traj2, diag2, manifest2, str(out2))
    for name in ("trajectory.csv", "diagnostics.csv", "manifest.json"):
        b1 = (out1 / name).read_bytes()
        b2 = (out2 / name).read_bytes()
        assert b1 == b2, f"{name} differs between identical runs"


def test_output_env_override(tmp_path, monkeypatch):
    path = _write(tmp_path, MINIMAL.format(horizon=1, out=tmp_path / "ignored"))
    cfg = harness.load_config(path)
    monkeypatch.setenv("QDPD_OUT", str(tmp_path / "redirected"))
    assert harness.output_dir(cfg) == str(tmp_path / "redirected")


def test_x0_size_mismatch(tmp_path):
    text = MINIMAL.format(horizon=1, out="o").replace(
        "x0 = -9, 4, -9, -9, 0, -8, 6, 6, 4, -7, 3, 0", "x0 = 1, 2, 3"
    )
    cfg = harness.load_config(_write(tmp_path, text))
    with pytest.raises(ConfigError):
        harness.run_experiment(cfg)


def test_cli_solve_and_validate():
    assert cli.main(["solve", os.path.join(CONFIG_DIR, "table1.cfg")]) == 0
    assert cli.main(["validate", os.path.join(CONFIG_DIR, "table1.cfg")]) == 0


def test_cli_run_exit_codes(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("QDPD_OUT", str(tmp_path / "cliout"))
    path = _write(tmp_path, MINIMAL.format(horizon=2, out=tmp_path / "x"))
    assert cli.main(["run", path]) == 0
    # The shipped fast-decay schedule saturates: algorithmic failure.
    assert cli.main(["run", os.path.join(CONFIG_DIR, "table1.cfg")]) == 1
    capsys.readouterr()


def test_cli_usage_errors(tmp_path):
    assert cli.main(["frobnicate"]) == 2
    assert cli.main(["run", "/nonexistent.cfg"]) == 2


def test_cli_validate_infeasible(tmp_path):
    text = (
        "[problem]\nname = table1\n[topology]\nname = ring\nnodes = 12\n"
        "[params]\nmode = derived\nkappa = 1.0\nbeta = 0.3\nc1 = 0.3\n"
        "c2 = 0.3\nrho0 = 1.5\n"
        "[run]\nhorizon_periods = 1\n"
        "x0 = -9, 4, -9, -9, 0, -8, 6, 6, 4, -7, 3, 0\n"
    )
    assert cli.main(["validate", _write(tmp_path, text)]) == 1


def test_cli_bandwidth_report(tmp_path):
    text = (
        "[problem]\nkind = quadratic\ncosts = 1, 1; 1, -1\n"
        "[topology]\nedges = 0-1\nnodes = 2\n"
        "[params]\nmode = derived\nkappa = 0.02\nbeta = 0.3\nc1 = 0.3\n"
        "c2 = 0.3\nrho0 = 1.5\n"
        "[run]\nhorizon_periods = 1\nx0 = 1, -1\n"
    )
    assert cli.main(["bandwidth-report", _write(tmp_path, text)]) == 0
