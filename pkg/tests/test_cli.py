import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from mbelab import cli
from mbelab.cli import CSV_SCHEMA, TRAJECTORY_COLUMNS, ConfigError, load_config, main, verify_dir


def _write(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps({"schema_version": 1, **cfg}))
    return str(path)


def _rows(path):
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.reader(lines)
    header = next(reader)
    return header, list(reader)


def test_simulate_writes_csv_and_sidecar(tmp_path, capsys):
    out = tmp_path / "o"
    assert main(["simulate", "--out", str(out)]) == 0
    header, rows = _rows(out / "trajectory.csv")
    assert header == TRAJECTORY_COLUMNS
    first = (out / "trajectory.csv").read_text().splitlines()[:2]
    assert first[0].startswith("# config_hash: ") and first[1] == f"# csv_schema: {CSV_SCHEMA}"
    side = json.loads((out / "trajectory.json").read_text())
    assert side["config_hash"] == first[0].split(": ")[1]
    data = np.array(rows, dtype=float)
    assert np.all(data[:, 9] == 0.0)  # trace check
    assert np.max(np.abs(data[:, 8] - 1.0)) < 1e-9
    assert main(["verify", "--out", str(out)]) == 0
    assert "PASS" in capsys.readouterr().out


def test_free_field_traces_circle(tmp_path):
    cfg = _write(tmp_path, {"params": {"p": 0.0, "gamma": 0.0}, "simulate": {"initial": {"M": [0.7, 0.1], "S": [0, 0, 1]}}})
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 0
    _, rows = _rows(tmp_path / "trajectory.csv")
    data = np.array(rows, dtype=float)
    radius = np.hypot(data[:, 3], data[:, 4])
    assert np.max(np.abs(radius - radius[0])) < 1e-10


def test_full_and_interaction_agree_after_frame_change(tmp_path, capsys):
    for kind in ("full", "interaction"):
        cfg = _write(tmp_path, {"params": {"p": 1e-2}, "simulate": {"kind": kind, "frame": "lab"}}, f"{kind}.json")
        assert main(["simulate", "--config", cfg, "--out", str(tmp_path / kind)]) == 0
    a, b = (str(tmp_path / k / "trajectory.csv") for k in ("full", "interaction"))
    assert main(["verify", "--compare", a, b]) == 0
    assert "PASS" in capsys.readouterr().out


def test_exit_codes(tmp_path, capsys, monkeypatch):
    bad = _write(tmp_path, {"params": {"omega1": 1.0, "omega2": 0.5}})
    assert main(["simulate", "--config", bad, "--out", str(tmp_path)]) == 2
    assert "omega2 > omega1" in capsys.readouterr().err
    unknown = _write(tmp_path, {"params": {"nope": 1}}, "u.json")
    assert main(["simulate", "--config", unknown, "--out", str(tmp_path)]) == 2
    empty = _write(tmp_path, {"params": {"r": 0.5}}, "e.json")
    assert main(["equilibria", "--config", empty, "--out", str(tmp_path)]) == 4
    assert "c*r > |Ae|" in capsys.readouterr().err
    blow = _write(tmp_path, {"simulate": {"t_end": 1e6}}, "b.json")
    # a step budget this small cannot reach t_end
    orig = cli.integrate
    monkeypatch.setattr(cli, "integrate", lambda *a, **k: orig(*a, **{**k, "max_steps": 5}))
    assert main(["simulate", "--config", blow, "--out", str(tmp_path)]) == 3
    assert "t =" in capsys.readouterr().err


def test_schema_version_required(tmp_path, capsys):
    path = tmp_path / "v.json"
    path.write_text('{"schema_version": 7}')
    assert main(["simulate", "--config", str(path), "--out", str(tmp_path)]) == 2
    assert "schema_version" in capsys.readouterr().err
    with pytest.raises(ConfigError):
        load_config(str(path))


def test_gamma_and_r_exclusive(tmp_path, capsys):
    cfg = _write(tmp_path, {"params": {"gamma": 1e-3, "r": 2.0}})
    assert main(["simulate", "--config", cfg, "--out", str(tmp_path)]) == 2
    assert "either gamma or r" in capsys.readouterr().err


def test_equilibria_table(tmp_path):
    assert main(["equilibria", "--out", str(tmp_path)]) == 0
    header, rows = _rows(tmp_path / "equilibria.csv")
    col = {h: i for i, h in enumerate(header)}
    z2 = [r for r in rows if r[0] == "Z2"]
    assert all(float(r[col["Re M"]]) == -1.0 and float(r[col["Im M"]]) == 0.0 for r in z2)
    assert max(float(r[col["residual"]]) for r in rows) < 1e-12
    assert max(float(r[col["spectrum_distance"]]) for r in rows) < 1e-9
    for r in z2:
        s3, stable = float(r[col["S3"]]), r[col["stable_numeric"]] == "true"
        if s3 != 0.0:
            assert stable == (s3 > 0)


def test_experiment_rerun_is_byte_identical(tmp_path):
    cfg = _write(tmp_path, {"experiment": {"name": "stable", "p_list": [1e-2], "r_list": [2.0], "samples": 3, "d_halvings": 0}, "seed": 5})
    for w, sub in ((1, "a"), (2, "b"), (2, "c")):
        assert main(["experiment", "--config", cfg, "--out", str(tmp_path / sub), "--workers", str(w)]) == 0
    ref = (tmp_path / "a" / "stable_report.json").read_bytes()
    for sub in ("b", "c"):
        assert (tmp_path / sub / "stable_report.json").read_bytes() == ref
        assert (tmp_path / sub / "stable_curves.csv").read_bytes() == (tmp_path / "a" / "stable_curves.csv").read_bytes()
    assert verify_dir(tmp_path / "a") == []


def test_kbm_experiment_reports_three_decades(tmp_path):
    assert main(["experiment", "kbm", "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "kbm_report.json").read_text())
    assert [row["p"] for row in doc["report"]["rows"]] == [1e-2, 1e-3, 1e-4]
    assert doc["report"]["passed"]


def test_verify_detects_tampering(tmp_path):
    assert main(["experiment", "kbm", "--out", str(tmp_path)]) == 0
    path = tmp_path / "kbm_curves.csv"
    path.write_text(path.read_text().replace("0.1", "0.2", 1) + "\n")
    assert verify_dir(tmp_path)
    assert main(["verify", "--out", str(tmp_path)]) == 4


def test_output_dir_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv("MBELAB_OUT", str(tmp_path / "env"))
    assert main(["equilibria", "--config", _write(tmp_path, {"equilibria": {"branch": "Z2", "points": 5}})]) == 0
    assert (tmp_path / "env" / "equilibria.csv").exists()


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "mbelab", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "simulate" in res.stdout
