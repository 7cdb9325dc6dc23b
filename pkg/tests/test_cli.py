import json
import subprocess
import sys

import pytest

from lapdict import io as lio
from lapdict.cli import main

# 200 signals in total
TOY1 = {"experiment": "exp1", "n_normal": 100, "n_anomaly": 100, "n_nodes": 12, "modules": 3,
        "ws_nodes": 5, "ws_k": 2, "n": 8, "s": 4, "am_iters": 1, "bcgd_iters": 300,
        "n1": 10, "n2": 10, "sep_iters": 1, "dl_iters": 1}
TOY2 = {"experiment": "exp2", "n_normal": 100, "n_anomaly": 100, "n_nodes": 12, "modules": 3,
        "ws_nodes": 5, "ws_k": 2, "L_target": 3, "parallel_batch": 2, "rounds": 2,
        "sweep_L": [3], "sweep_nu": [0.3]}


@pytest.fixture
def config(tmp_path):
    def write(d, name="c.json"):
        p = tmp_path / name
        p.write_text(json.dumps(d))
        return str(p)
    return write


@pytest.mark.parametrize("toy", [TOY1, TOY2])
def test_gen_train_classify_round_trip(tmp_path, config, toy):
    cfg = config(toy)
    out = str(tmp_path / "run")
    assert main(["gen", "--config", cfg, "--out", out]) == 0
    train = lio.read_dataset(tmp_path / "run" / "train.lds")
    test = lio.read_dataset(tmp_path / "run" / "test.lds")
    assert len(train) + len(test) == 200
    assert main(["train", "--config", cfg, "--out", out]) == 0
    assert main(["classify", "--config", cfg, "--out", out]) == 0
    payload = json.loads((tmp_path / "run" / "report.json").read_text())
    assert sorted(payload["methods"]) == sorted({"exp1": ["lapdl", "sepdl", "src"], "exp2": ["sbo", "src"]}[toy["experiment"]])
    assert (tmp_path / "run" / "report.csv").read_text().startswith("method,class,accuracy")


def test_single_method_and_data_dir(tmp_path, config):
    cfg = config(TOY2)
    data, out = str(tmp_path / "data"), str(tmp_path / "out")
    assert main(["gen", "--config", cfg, "--out", data, "--csv"]) == 0
    assert (tmp_path / "data" / "laplacian_class1.ldm").exists()
    assert (tmp_path / "data" / "train.csv").exists()
    assert main(["train", "--config", cfg, "--data", data, "--out", out, "--method", "sbo"]) == 0
    assert main(["classify", "--config", cfg, "--data", data, "--out", out, "--method", "sbo"]) == 0
    assert list(json.loads((tmp_path / "out" / "report.json").read_text())["methods"]) == ["sbo"]


def test_bench_writes_reports_and_sweep(tmp_path, config, capsys):
    out = tmp_path / "bench"
    assert main(["bench", "--config", config(TOY2), "--out", str(out), "--seed", "4"]) == 0
    for name in ("report.json", "report.csv", "sweep.csv", "timings.json"):
        assert (out / name).exists()
    assert json.loads((out / "report.json").read_text())["config"]["seed"] == 4
    assert "exp2 sbo: accuracy" in capsys.readouterr().out


def test_malformed_magic_exits_3(tmp_path, config):
    cfg = config(TOY1)
    out = tmp_path / "run"
    assert main(["gen", "--config", cfg, "--out", str(out)]) == 0
    raw = (out / "train.lds").read_bytes()
    (out / "train.lds").write_bytes(b"JUNK" + raw[4:])
    assert main(["train", "--config", cfg, "--out", str(out)]) == 3


def test_missing_files_exit_3(tmp_path, config):
    assert main(["classify", "--config", config(TOY1), "--out", str(tmp_path / "nothing")]) == 3
    assert main(["gen", "--config", str(tmp_path / "absent.json")]) == 3


def test_invalid_config_exits_2(config):
    assert main(["gen", "--config", config({"experiment": "exp9"})]) == 2
    assert main(["gen", "--config", config({"experiment": "exp1", "scale": 2.0})]) == 2
    assert main(["train", "--config", config(TOY1), "--method", "sbo"]) == 2


def test_missing_required_flag_exits_2_with_usage():
    proc = subprocess.run([sys.executable, "-m", "lapdict.cli", "gen"], capture_output=True, text=True)
    assert proc.returncode == 2
    assert "usage:" in proc.stderr and "--config" in proc.stderr
