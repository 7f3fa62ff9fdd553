import csv
import json
import os

import numpy as np
import yaml

from torusdamp.cli import (
    EXIT_ACCEPTANCE,
    EXIT_CONFIG,
    EXIT_NUMERICAL,
    EXIT_OK,
    main,
)


def _cfg(tmp_path, data, name="cfg.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return str(path)


SIMULATE = {
    "kind": "simulate",
    "grid": {"dim": 1, "points_per_axis": 64},
    "damping": {"family": "constant", "a": 0.2},
    "solver": {"dt": 0.01},
    "initial": {"type": "random", "max_mode": 6},
    "t_end": 2.0,
}


def test_list_experiments(capsys):
    assert main(["list-experiments"]) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert "energy-conservation" in out
    assert "shrinking-on-beta-02" in out
    assert out == sorted(out)


def test_simulate_writes_artifacts(tmp_path):
    out = tmp_path / "run"
    code = main(["simulate", "--config", _cfg(tmp_path, SIMULATE),
                 "--out", str(out), "--seed", "1"])
    assert code == EXIT_OK
    trace_path = out / "trace.csv"
    assert trace_path.exists()
    assert (out / "energy.png").exists()
    assert (out / "manifest.json").exists()
    with open(trace_path) as fh:
        rows = list(csv.DictReader(fh))
    energies = [float(r["energy"]) for r in rows]
    assert all(b <= a * (1 + 1e-9) for a, b in zip(energies, energies[1:]))
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["config"]["kind"] == "simulate"
    assert "version" in manifest


def test_simulate_is_deterministic(tmp_path):
    cfg = _cfg(tmp_path, SIMULATE)
    outs = []
    for tag in ("a", "b"):
        out = tmp_path / tag
        assert main(["simulate", "--config", cfg, "--out", str(out),
                     "--seed", "7"]) == EXIT_OK
        outs.append((out / "trace.csv").read_bytes())
    assert outs[0] == outs[1]


def test_config_error_exit(tmp_path):
    bad = dict(SIMULATE)
    bad["gird"] = {"dim": 1}
    assert main(["simulate", "--config", _cfg(tmp_path, bad),
                 "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_kind_mismatch_exit(tmp_path):
    assert main(["sigma", "--config", _cfg(tmp_path, SIMULATE),
                 "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_missing_config_exit(tmp_path):
    assert main(["simulate", "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_numerical_failure_exit(tmp_path):
    unstable = dict(SIMULATE)
    unstable["solver"] = {"dt": 1.0}
    unstable["t_end"] = 10.0
    assert main(["simulate", "--config", _cfg(tmp_path, unstable),
                 "--out", str(tmp_path / "o")]) == EXIT_NUMERICAL


def test_sigma_subcommand(tmp_path):
    cfg = {
        "kind": "sigma",
        "grid": {"dim": 1, "points_per_axis": 64},
        "damping": {"family": "constant", "a": 0.3},
        "sampling": {"n_points": 2, "quadrature_step": 0.05},
        "t_end": 5.0,
    }
    out = tmp_path / "sig"
    assert main(["sigma", "--config", _cfg(tmp_path, cfg),
                 "--out", str(out)]) == EXIT_OK
    with open(out / "sigma.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert float(rows[-1]["sigma"]) == np.float64(rows[-1]["sigma"])
    assert abs(float(rows[-1]["sigma"]) - 0.3 * 5.0) < 1e-6


def test_tgcc_subcommand(tmp_path):
    cfg = {
        "kind": "tgcc",
        "grid": {"dim": 2, "points_per_axis": 16},
        "damping": {"family": "space_bump", "w0": 1.0,
                    "center": [np.pi, np.pi], "radius": 1.0},
        "sampling": {"n_points": 2, "n_directions": 2, "n_start_times": 2,
                     "quadrature_step": 0.05, "t0_max": 2.0},
        "observe": {"duration": 1.0},
    }
    out = tmp_path / "tgcc"
    assert main(["tgcc", "--config", _cfg(tmp_path, cfg),
                 "--out", str(out)]) == EXIT_OK
    report = json.loads((out / "tgcc.json").read_text())
    assert report["satisfied"] is False


def test_fit_subcommand(tmp_path):
    cfg = dict(SIMULATE)
    cfg["kind"] = "fit"
    cfg["t_end"] = 20.0
    cfg["fit"] = {"model": "stretched"}
    out = tmp_path / "fit"
    assert main(["fit", "--config", _cfg(tmp_path, cfg),
                 "--out", str(out)]) == EXIT_OK
    assert (out / "fit.csv").exists()


def test_sweep_subcommand(tmp_path):
    cfg = dict(SIMULATE)
    cfg["sweep"] = {"parameter": "damping.a", "values": [0.1, 0.3]}
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", _cfg(tmp_path, cfg),
                 "--out", str(out), "--threads", "1"]) == EXIT_OK
    with open(out / "sweep_summary.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2
    assert all(r["status"] == "ok" for r in rows)
    assert (out / "damping_a_0.1" / "trace.csv").exists()


def test_sweep_needs_parameter(tmp_path):
    cfg = dict(SIMULATE)
    cfg["sweep"] = {"values": [0.1]}
    assert main(["sweep", "--config", _cfg(tmp_path, cfg),
                 "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_reproduce_unknown_name(tmp_path):
    assert main(["reproduce", "does-not-exist",
                 "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert main(["reproduce", "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_reproduce_runs_experiment(tmp_path, capsys):
    out = tmp_path / "rep"
    code = main(["reproduce", "short-time-observability",
                 "--out", str(out)])
    assert code == EXIT_OK
    printed = capsys.readouterr().out
    assert "experiment short-time-observability: PASS" in printed
    exp_dir = out / "short-time-observability"
    assert (exp_dir / "manifest.json").exists()
    assert any(p.endswith(".csv") for p in os.listdir(exp_dir))
