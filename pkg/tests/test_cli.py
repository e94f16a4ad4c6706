"""CLI: validation, exit codes, overrides, reproducibility, manifests."""
import json

import numpy as np
import pytest

from rbmsim.cli import main
from rbmsim.io import read_matrix_csv, write_matrix_csv


def write_config(tmp_path, body, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(body)
    return str(p)


def sets(*pairs):
    out = []
    for s in pairs:
        out += ["--set", s]
    return out


FIG1_SMALL = sets("params.n_particles=200", "params.dt=0.02",
                  "params.alphas=[0.0, 1.5]")


def test_validate_ok_is_silent(tmp_path, capsys):
    cfg = write_config(tmp_path, 'experiment = "fig1_trajectories"\n')
    assert main(["validate", cfg]) == 0
    captured = capsys.readouterr()
    assert captured.out == "" and captured.err == ""


def test_validate_negative_alpha(tmp_path, capsys):
    cfg = write_config(tmp_path, """
experiment = "poc_rate"
[params]
alpha = -0.5
""")
    assert main(["validate", cfg]) == 2
    assert "alpha must be nonnegative" in capsys.readouterr().err


def test_validate_unknown_keys(tmp_path, capsys):
    cfg = write_config(tmp_path, 'experiment = "fig1_trajectories"\ncolour = 1\n')
    assert main(["validate", cfg]) == 2
    assert "colour" in capsys.readouterr().err
    cfg2 = write_config(tmp_path, """
experiment = "fig1_trajectories"
[params]
n_prticles = 10
""", name="c2.toml")
    assert main(["validate", cfg2]) == 2
    assert "n_prticles" in capsys.readouterr().err


def test_validate_unknown_experiment_and_parse_error(tmp_path, capsys):
    cfg = write_config(tmp_path, 'experiment = "frobnicate"\n')
    assert main(["validate", cfg]) == 2
    assert "frobnicate" in capsys.readouterr().err
    broken = write_config(tmp_path, 'experiment = "fig1\n', name="broken.toml")
    assert main(["validate", broken]) == 2
    assert main(["validate", str(tmp_path / "missing.toml")]) == 2


def test_validate_regime_too_large(tmp_path, capsys):
    mat = tmp_path / "big.csv"
    write_matrix_csv(mat, np.zeros((17, 17)))
    cfg = write_config(tmp_path, f"""
experiment = "regime_classify"
[params]
matrix = "{mat}"
""")
    assert main(["validate", cfg]) == 2
    err = capsys.readouterr().err
    assert "TooLarge" in err


def test_run_writes_consistent_manifest(tmp_path):
    cfg = write_config(tmp_path, 'experiment = "fig1_trajectories"\nbase_seed = 3\n')
    out = tmp_path / "out"
    assert main(["run", cfg, "--output-dir", str(out)] + FIG1_SMALL) == 0
    manifest = json.loads((out / "run_manifest.json").read_text())
    assert manifest["experiment"] == "fig1_trajectories"
    assert manifest["config"]["params"]["n_particles"] == 200
    assert manifest["seeds"] == [3, 4]
    assert "base_seed + i" in manifest["seed_rule"]
    names = set(manifest["artifacts"])
    assert names == {"fig1_alpha_0.csv", "fig1_alpha_1.5.csv",
                     "fig1_alpha_1.5_breakdown.json"}
    for a in names:
        assert (out / a).exists()
    on_disk = {p.name for p in out.iterdir()} - {"run_manifest.json"}
    assert on_disk == names


def test_run_byte_identical_reruns(tmp_path):
    cfg = write_config(tmp_path, 'experiment = "fig1_trajectories"\nbase_seed = 11\n')
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    assert main(["run", cfg, "--output-dir", str(out1)] + FIG1_SMALL) == 0
    assert main(["run", cfg, "--output-dir", str(out2)] + FIG1_SMALL) == 0
    for name in ("fig1_alpha_0.csv", "fig1_alpha_1.5.csv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_run_numerical_failure_exit_3(tmp_path, capsys):
    cfg = write_config(tmp_path, """
experiment = "poc_rate"
[params]
n_values = [10]
reference_samples = 500
dt = 0.01
picard_max_iters = 1
""")
    out = tmp_path / "fail"
    assert main(["run", cfg, "--output-dir", str(out)]) == 3
    diag = json.loads((out / "failure.json").read_text())
    assert diag["error_type"] == "NoConvergence"
    assert "NoConvergence" in capsys.readouterr().err


def test_set_overrides_file_values(tmp_path):
    cfg = write_config(tmp_path, """
experiment = "fig1_trajectories"
[params]
n_particles = 50
dt = 0.02
alphas = [0.0]
""")
    out = tmp_path / "o"
    rc = main(["run", cfg, "--output-dir", str(out),
               "--set", "params.n_particles=120",
               "--set", "params.initial.kind=dirac",
               "--set", "params.initial.x0=2.0"])
    assert rc == 0
    manifest = json.loads((out / "run_manifest.json").read_text())
    assert manifest["config"]["params"]["n_particles"] == 120
    assert manifest["config"]["params"]["initial"] == {"kind": "dirac", "x0": 2.0}


def test_output_root_env(tmp_path, monkeypatch):
    monkeypatch.setenv("RBMSIM_OUTPUT_ROOT", str(tmp_path / "root"))
    monkeypatch.chdir(tmp_path)
    cfg = write_config(tmp_path, 'experiment = "regime_classify"\n')
    mat = tmp_path / "q.csv"
    write_matrix_csv(mat, np.array([[0.0, 0.5], [0.5, 0.0]]))
    rc = main(["run", cfg, "--set", f'params.matrix="{mat}"'])
    assert rc == 0
    target = tmp_path / "root" / "regime_classify" / "regime_report.json"
    assert target.exists()
    report = json.loads(target.read_text())
    assert report["regime"] == "Subcritical"


def test_list_experiments(capsys):
    assert main(["list-experiments"]) == 0
    out = capsys.readouterr().out
    for name in ("fig1_trajectories", "fig2_density", "regime_classify",
                 "poc_rate", "pde_crosscheck", "convergence", "system_run"):
        assert name in out


def test_system_run_trajectory_columns(tmp_path):
    mat = tmp_path / "q.csv"
    write_matrix_csv(mat, np.array([[0.0, 1.0], [1.0, 0.0]]))
    cfg = write_config(tmp_path, f"""
experiment = "system_run"
base_seed = 5
[params]
matrix = "{mat}"
record_paths = true
dt = 0.01
horizon = 0.2
initial_values = [1.0, 2.0]
""")
    out = tmp_path / "sys"
    assert main(["run", cfg, "--output-dir", str(out)]) == 0
    header = (out / "trajectory.csv").read_text().splitlines()[0]
    assert header == "t,X_1,X_2,L_1,L_2,zero_count,rho_active"
    event = json.loads((out / "breakdown.json").read_text())
    assert set(event) == {"occurred", "tau", "trigger", "zero_set", "rho"}
