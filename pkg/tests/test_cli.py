import json

import numpy as np
import pytest

from pdflow import ConvexQuadraticProgram
from pdflow.cli import RunConfig, ConfigError, config_from_args, build_parser, main


@pytest.fixture
def tiny_file(tmp_path):
    path = tmp_path / "tiny.json"
    ConvexQuadraticProgram(H=[[2.0]], c=[0.0], A=[[1.0]], b=[-1.0]).save(path)
    return str(path)


def test_solve_custom_file(tiny_file, tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["solve", "--experiment", "custom-file", "--program", tiny_file, "--mode", "metric",
                 "--out", str(out), "--full-state"])
    assert code == 0
    summary = json.loads((out / "custom-file_file_metric_1_summary.json").read_text())
    assert summary["status"] == "converged" and summary["iterations"] == 450
    assert summary["certificate"]["passed"] and summary["alpha_admissible"]
    assert abs(summary["x"][0] + 1) < 1e-8 and summary["x_gap_inf"] < 1e-8
    header = (out / "custom-file_file_metric_1.csv").read_text().splitlines()[0]
    assert header == "iter,t,residual,err_euclid,err_r,lyapunov,x_0,lambda_0"
    assert json.loads(capsys.readouterr().out)["status"] == "converged"


def test_solve_euclidean_random_qp(tmp_path):
    code = main(["solve", "--seed", "1", "--n", "10", "--m", "5", "--mode", "euclidean", "--alpha", "1",
                 "--step", "0.01", "--out", str(tmp_path)])
    assert code == 0
    summary = json.loads((tmp_path / "random_qp_1_euclidean_none_summary.json").read_text())
    assert summary["final_kkt"]["total"] < 1e-7 and "certificate" not in summary


def test_missing_seed_is_a_config_error(capsys):
    assert main(["solve"]) == 1
    err = capsys.readouterr().err
    assert "--seed" in err and "usage" in err


@pytest.mark.parametrize("argv", [
    ["solve", "--seed", "1", "--alpha", "fast"],
    ["solve", "--seed", "1", "--beta", "0"],
    ["solve", "--seed", "1", "--k-mult", "0.5"],
    ["solve", "--experiment", "custom-file"],
    ["solve", "--experiment", "custom-file", "--program", "/nonexistent.json"],
    ["solve", "--seed", "1", "--n", "2", "--m", "3"],
    ["solve", "--seed", "1", "--mode", "riemann"],
    ["frobnicate"],
])
def test_config_errors_exit_1(argv, tmp_path):
    assert main(argv + ["--out", str(tmp_path)] if argv[0] == "solve" else argv) == 1


def test_nonconvergence_exits_2(tmp_path):
    assert main(["solve", "--seed", "1", "--max-iters", "100", "--out", str(tmp_path)]) == 2


def test_divergence_exits_2(tmp_path, capsys, caplog):
    code = main(["solve", "--seed", "1", "--mode", "euclidean", "--alpha", "1", "--step", "1",
                 "--out", str(tmp_path)])
    assert code == 2
    assert json.loads(capsys.readouterr().out)["status"] == "diverged"
    assert "diverged" in caplog.text


def test_certify_metric(capsys):
    assert main(["certify", "--seed", "1"]) == 0
    cert = json.loads(capsys.readouterr().out)
    assert cert["passed"] and cert["nu"] > 0 and cert["k"] > cert["rho"]


def test_certify_rejects_small_k(capsys):
    assert main(["certify", "--seed", "1", "--k-abs", "1.0"]) == 2
    assert "metric not positive definite" in capsys.readouterr().err


def test_certify_euclidean(capsys, tmp_path):
    assert main(["certify", "--seed", "3", "--mode", "euclidean", "--out", str(tmp_path)]) == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["nu"] == 0.0 and rep["zero_eigenvalues"] == 5
    assert json.loads((tmp_path / "certificate.json").read_text()) == rep


def test_config_precedence(tmp_path):
    cfg_file = tmp_path / "c.json"
    cfg_file.write_text(json.dumps({"seed": 4, "n": 6, "m": 3, "beta": 0.5}))
    parser = build_parser()
    cfg = config_from_args(parser.parse_args(["solve", "--config", str(cfg_file), "--n", "8"]))
    assert (cfg.seed, cfg.n, cfg.m, cfg.beta, cfg.step) == (4, 8, 3, 0.5, 1.0)
    cfg_file.write_text(json.dumps({"sed": 4}))
    with pytest.raises(ConfigError, match="unknown config keys"):
        config_from_args(parser.parse_args(["solve", "--config", str(cfg_file)]))


def test_output_directory_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("PDFLOW_OUT", str(tmp_path / "env"))
    assert RunConfig(seed=1).out_dir == tmp_path / "env"
    assert RunConfig(seed=1, out=str(tmp_path / "flag")).out_dir == tmp_path / "flag"


def test_run_config_defaults():
    cfg = RunConfig(seed=1, experiment="l2ls")
    assert (cfg.n, cfg.m, cfg.theta) == (50, 30, 1.0)
    assert RunConfig(seed=1).alpha == "auto"
    assert RunConfig(seed=1, alpha="0.5").alpha == 0.5


def test_reproduce_fig3(tmp_path):
    assert main(["reproduce", "fig3", "--out", str(tmp_path)]) == 0
    table = (tmp_path / "fig3" / "solution_table.csv").read_text().splitlines()
    assert table[0] == "index,x_dynamics,x_oracle,abs_gap" and len(table) == 11
    gaps = np.array([float(r.split(",")[3]) for r in table[1:]])
    assert gaps.max() <= 1e-6
    manifest = json.loads((tmp_path / "fig3" / "manifest.json").read_text())
    assert manifest["curves"][0]["max_abs_gap"] == gaps.max()
