import csv
import json
import subprocess
import sys

import pytest

from wgscatter.cli import ConfigError, load_config_text, main, resolve_config

FAST_TLS = ["--set", "sweep.areas_over_pi=[1, 2]", "--set", "grid.horizon=10",
            "--set", "grid.dt=0.02"]


def _read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_tls_run_writes_tables(tmp_path):
    out = tmp_path / "tls"
    assert main(["tls", *FAST_TLS, "--out", str(out)]) == 0
    rows = _read_csv(out / "photocounts.csv")
    assert [float(r["area_over_pi"]) for r in rows] == [1.0, 2.0]
    assert float(rows[0]["P1"]) > 0.9
    assert float(rows[0]["P0"]) == pytest.approx(float(rows[0]["P0_closed_form"]), rel=1e-9)
    with open(out / "flux.csv") as fh:
        assert fh.readline().startswith("t[1/gamma],")
    summary = json.loads((out / "summary.json").read_text())
    assert summary["truncation_ok"] is True
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["sweep"]["areas_over_pi"] == [1.0, 2.0]
    assert manifest["resolved_grid"]["n_bins"] == 500


def test_rerun_is_byte_identical(tmp_path):
    out = tmp_path / "run"
    args = ["tls", *FAST_TLS, "--set", "outputs.g2=true", "--out", str(out)]
    assert main(args) == 0
    first = {p.name: p.read_bytes() for p in out.iterdir()}
    assert "g2_000.csv" in first
    assert main(args) == 0
    assert first == {p.name: p.read_bytes() for p in out.iterdir()}


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("experiment: tls\nmodel:\n  t_pulse: 0.4\nsweep:\n  areas_over_pi: [1]\n"
                   "grid:\n  dt: 0.05\n  horizon: 6\n")
    out = tmp_path / "o"
    code = main(["tls", "--config", str(cfg), "--set", "truncation.deficit_threshold=0.5",
                 "--out", str(out)])
    assert code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["model"]["t_pulse"] == 0.4
    assert manifest["config"]["truncation"]["deficit_threshold"] == 0.5


def test_unknown_key_is_line_anchored(tmp_path, capsys):
    cfg = tmp_path / "bad.yaml"
    cfg.write_text("model:\n  gamma: 1\n  gama: 2\n")
    assert main(["tls", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    err = capsys.readouterr().err
    assert f"{cfg}:3" in err and "model.gama" in err


@pytest.mark.parametrize("override", ["model.gamma=-1", "grid.dt=0", "model.initial=middle",
                                      "sweep.areas_over_pi=[]", "seed=1.5", "nonsense",
                                      "outputs.flux=maybe"])
def test_invalid_overrides(tmp_path, override, capsys):
    assert main(["tls", "--set", override, "--out", str(tmp_path / "o")]) == 2
    assert "config error" in capsys.readouterr().err


def test_invalid_yaml_and_missing_file(tmp_path):
    cfg = tmp_path / "broken.yaml"
    cfg.write_text("model: [1, 2\n")
    assert main(["tls", "--config", str(cfg)]) == 2
    assert main(["tls", "--config", str(tmp_path / "absent.yaml")]) == 2


def test_experiment_mismatch(tmp_path):
    cfg = tmp_path / "c.yaml"
    cfg.write_text("experiment: pair\n")
    assert main(["tls", "--config", str(cfg)]) == 2


def test_horizon_shorter_than_pulse(tmp_path):
    assert main(["tls", "--set", "grid.horizon=0.1", "--out", str(tmp_path / "o")]) == 2


def test_truncation_exit_status(tmp_path, capsys):
    out = tmp_path / "o"
    code = main(["tls", "--set", "sweep.areas_over_pi=[1]", "--set", "truncation.n_max_photons=1",
                 "--set", "grid.horizon=8", "--set", "grid.dt=0.02", "--out", str(out)])
    assert code == 3
    assert "truncation deficit" in capsys.readouterr().err
    assert json.loads((out / "summary.json").read_text())["truncation_ok"] is False


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    assert main(["tls", *FAST_TLS, "--out", str(blocker / "sub")]) == 1


def test_pair_sweep(tmp_path):
    out = tmp_path / "pair"
    code = main(["pair", "--set", "sweep.sigmas=[0.1, 0.3]", "--set", "model.n_max=4",
                 "--set", "grid.tail=6", "--out", str(out)])
    assert code == 0
    rows = _read_csv(out / "pair_sweep.csv")
    assert len(rows) == 2
    assert float(rows[0]["P1"]) == 0
    assert float(rows[0]["purity"]) > float(rows[1]["purity"])
    assert float(rows[1]["schmidt_number"]) >= float(rows[0]["schmidt_number"]) >= 1


def test_trajectories_run(tmp_path):
    out = tmp_path / "traj"
    args = ["trajectories", "--set", "run.n_traj=2000", "--set", "run.horizon=10",
            "--set", "outputs.records=true", "--seed", "5", "--out", str(out)]
    assert main(args) == 0
    rows = _read_csv(out / "counts.csv")
    assert sum(int(r["count"]) for r in rows) == 2000
    summary = json.loads((out / "summary.json").read_text())
    assert summary["seed"] == 5 and 0 <= summary["chi_square_pvalue"] <= 1
    first = (out / "records.csv").read_bytes()
    assert main(args) == 0
    assert (out / "records.csv").read_bytes() == first


def test_convergence_run(tmp_path):
    out = tmp_path / "conv"
    assert main(["convergence", "--set", "grid.rk_substeps=[2, 4, 8]",
                 "--out", str(out)]) == 0
    rows = _read_csv(out / "convergence.csv")
    errs = [float(r["max_amplitude_error"]) for r in rows]
    assert errs[0] > errs[1] > errs[2] > 0
    assert main(["convergence", "--set", "grid.rk_substeps=[3]", "--out", str(out)]) == 2


def test_resolve_config_defaults():
    cfg = resolve_config("pair")
    assert cfg["experiment"] == "pair" and cfg["model"]["n_max"] == 6
    with pytest.raises(ConfigError):
        resolve_config("pair", {"grid": 3})


def test_load_config_lines():
    data, lines = load_config_text("a: 1\nb:\n  c: 2\n")
    assert data == {"a": 1, "b": {"c": 2}}
    assert lines == {"a": 1, "b": 2, "b.c": 3}


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "wgscatter.cli", "--help"], capture_output=True,
                         text=True, check=True)
    for name in ("tls", "pair", "trajectories", "convergence"):
        assert name in out.stdout
