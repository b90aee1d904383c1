import csv
import json
import subprocess
import sys

import pytest

from hdsopt.cli import main
from hdsopt.harness import CSV_COLUMNS


def write_cfg(path, **kw):
    cfg = {"benchmark": "gp", "method": "hds_gpt", "D": 16, "trials": 2, "theta1": 5, "theta0": -5}
    cfg.update(kw)
    path.write_text(json.dumps(cfg))
    return str(path)


def test_select_writes_csv(tmp_path, capsys):
    out = tmp_path / "r.csv"
    assert main(["select", "--config", write_cfg(tmp_path / "c.json"), "--seed", "3", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == 2 and rows[0]["seed"] == "3"
    assert tuple(rows[0])[: len(CSV_COLUMNS)] == CSV_COLUMNS
    assert "accuracy=" in capsys.readouterr().out


def test_optimize_records_regret(tmp_path):
    out = tmp_path / "r.csv"
    cfg = write_cfg(tmp_path / "c.json", benchmark="branin", D=4)
    assert main(["optimize", "--config", cfg, "--horizon", "8", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert all(r["optimization_samples"] == "8" for r in rows)
    assert all(float(r["avg_regret_final"]) >= 0 for r in rows)


def test_bench_sweep_and_tune(tmp_path, capsys):
    assert main(["bench", "--suite", "quad", "--method", "cws", "--trials", "2", "--D", "10"]) == 0
    out = tmp_path / "s.csv"
    assert main(["sweep", "--param", "D", "--values", "8,16", "--trials", "2", "--out", str(out)]) == 0
    assert len(list(csv.DictReader(out.open()))) == 2
    cfg = write_cfg(tmp_path / "c.json", method="hds_fdt", trials=1, D=8)
    assert main(["tune-thresholds", "--config", cfg]) == 0
    assert "best theta1=" in capsys.readouterr().out


@pytest.mark.parametrize("cfg", [
    {"benchmark": "gp", "method": "nope"},
    {"benchmark": "gp"},
    {"benchmark": "gp", "method": "cws", "extra_key": 1},
])
def test_config_errors_exit_2(tmp_path, capsys, cfg):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    assert main(["select", "--config", str(p)]) == 2
    err = capsys.readouterr().err
    assert "config error" in err


def test_missing_file_and_bad_values_exit_2(tmp_path):
    assert main(["select", "--config", str(tmp_path / "missing.json")]) == 2
    assert main(["sweep", "--param", "D", "--values", "a,b"]) == 2


def test_runtime_error_exit_3(tmp_path, monkeypatch):
    import hdsopt.cli as cli

    def boom(*a, **k):
        raise RuntimeError("numerical trouble")

    monkeypatch.setattr(cli, "run_experiment", boom)
    assert main(["select", "--config", write_cfg(tmp_path / "c.json")]) == 3


def test_failed_trials_exit_3(tmp_path, monkeypatch):
    import hdsopt.harness as harness

    def boom(*a, **k):
        raise FloatingPointError("posterior broke")

    monkeypatch.setattr(harness, "hds_run", boom)
    out = tmp_path / "r.csv"
    assert main(["select", "--config", write_cfg(tmp_path / "c.json"), "--out", str(out)]) == 3
    assert len(list(csv.DictReader(out.open()))) == 2


def test_module_entry_point(tmp_path):
    cfg = write_cfg(tmp_path / "c.json", trials=1, D=8)
    proc = subprocess.run([sys.executable, "-m", "hdsopt", "select", "--config", cfg],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    proc = subprocess.run([sys.executable, "-m", "hdsopt", "select"], capture_output=True, text=True)
    assert proc.returncode == 2
