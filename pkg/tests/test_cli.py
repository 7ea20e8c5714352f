import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from isingqc.cli import config_hash, main, parse_float_list, parse_int_list, read_config


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows_of(text):
    body = "".join(line + "\n" for line in text.splitlines() if not line.startswith("#"))
    return list(csv.DictReader(io.StringIO(body)))


def test_parse_lists():
    assert parse_int_list("3..5") == [3, 4, 5] and parse_int_list("2,7") == [2, 7]
    assert parse_float_list("geom:1:100:3") == pytest.approx([1, 10, 100])
    assert parse_float_list("0.1,0.2") == [0.1, 0.2]


def test_compile_reports(capsys):
    code, out, _ = run(capsys, "compile", "--algo", "iqft", "--n", "10", "--k", "1024", "--a", "1000")
    assert code == 0 and "pulses: 44541" in out.splitlines()
    code, out, _ = run(capsys, "compile", "--algo", "qft", "--n", "4", "--k", "128", "--a", "100")
    assert code == 0 and "gates: 11, q-pulses: 543" in out


def test_compile_schedule_out(capsys, tmp_path):
    dest = tmp_path / "s.json"
    code, _, _ = run(capsys, "compile", "--n", "3", "--k", "16", "--a", "200", "--schedule-out", str(dest))
    assert code == 0 and len(json.loads(dest.read_text())["pulses"]) == 18 * 27 - 16 * 9 - 49 * 3 + 57


def test_usage_errors(capsys):
    with pytest.raises(SystemExit) as e:
        main(["compile", "--n", "1"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["compile", "--n", "3..5"])
    assert e.value.code == 2
    with pytest.raises(SystemExit) as e:
        main(["simulate", "--n", "9", "--delta", "0.01"])
    assert e.value.code == 2
    capsys.readouterr()


def test_scan_deterministic_and_headed(capsys, tmp_path):
    args = ["scan", "--algo", "qft,iqft", "--n", "3", "--k", "64", "--a", "500", "--delta", "0.01",
            "--realizations", "3", "--states", "4", "--seed", "5"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    text = a.read_text()
    assert text.startswith("# isingqc ") and "# config_hash " in text and "# seeds [[" in text
    rows = rows_of(text)
    assert [r["algo"] for r in rows] == ["qft", "iqft"]
    assert all(0.9 < float(r["F_mean"]) <= 1 and r["F_pred"] for r in rows)


def test_scan_intrinsic_huge_ka(capsys):
    code, out, _ = run(capsys, "scan", "--n", "3", "--k", "4096", "--a", "4000", "--delta", "0")
    (r,) = rows_of(out)
    assert code == 0 and float(r["one_minus_F"]) < 1e-6 and r["regime"] == "intrinsic"


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# experiment\nalgo = iqft\nn = 4\nk = 64  # small\na = 500\n")
    assert read_config(str(cfg))["algo"] == "iqft"
    code, out, _ = run(capsys, "compile", "--config", str(cfg))
    assert "gates: 17" in out
    code, out, _ = run(capsys, "compile", "--config", str(cfg), "--algo", "qft")
    assert "gates: 11" in out
    assert config_hash({"a": 1}) == config_hash({"a": 1}) != config_hash({"a": 2})


def test_simulate_json(capsys):
    code, out, _ = run(capsys, "simulate", "--n", "3", "--k", "64", "--a", "500", "--delta", "0.02",
                       "--realizations", "2", "--states", "3")
    doc = json.loads(out)
    assert code == 0 and doc["result"]["realizations"] == 2 and len(doc["seeds"]) == 2
    assert doc["config"]["delta"] == "0.02" and len(doc["config_hash"]) == 16


def test_corr(capsys):
    code, out, _ = run(capsys, "corr", "--n", "2", "--k", "16", "--a", "200")
    doc = json.loads(out)
    C = np.array(doc["C"])
    assert code == 0 and C.shape == (doc["size"],) * 2 and np.allclose(C, C.T)
    assert doc["running_sum"][-1] == pytest.approx(doc["total"])
    assert doc["gate_spans"][-1]["qstop"] == doc["size"]
    code, out, _ = run(capsys, "corr", "--n", "3", "--empty")
    doc = json.loads(out)
    assert code == 0 and doc["size"] == 0 and doc["C"] == []


def test_contour(capsys):
    code, out, err = run(capsys, "contour", "--n", "5", "--levels", "0.9", "--ka", "geom:1e4:1e6:21")
    rows = rows_of(out)
    assert code == 0 and {r["best"] for r in rows} == {"qft", "iqft"}
    for r in rows:
        # the better algorithm flips exactly where delta crosses delta_crit
        assert (r["best"] == "iqft") == (float(r["delta"]) > float(r["delta_crit"]))
    code, out, err = run(capsys, "contour", "--n", "5", "--levels", "0.9", "--ka", "1e5", "--report-max-n")
    assert len(rows_of(out)) == 1
    assert "delta=0: 12 (qft)" in err


def test_predict(capsys):
    code, out, _ = run(capsys, "predict", "--algo", "qft", "--regime", "gue_int", "--n", "5", "--delta", "0.04")
    (r,) = rows_of(out)
    assert code == 0 and float(r["F"]) == pytest.approx(0.925, abs=1e-3)
    with pytest.raises(SystemExit):
        main(["predict", "--regime", "intrinsic"])
    capsys.readouterr()


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "isingqc.cli", "compile", "--n", "2"],
                         capture_output=True, text=True, check=True).stdout
    assert "pulses: 39" in out
