import csv
import io

import numpy as np
import pytest

from thpsim.experiments.cli import main
from thpsim.quantizer import load_codebook


def _csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_validate_cdf_check_passes(tmp_path, capsys):
    out = tmp_path / "ks.csv"
    code = main(["validate-cdf", "--law", "first-sinr", "--samples", "50000", "--out", str(out), "--check"])
    assert code == 0
    rows = _csv(out)
    assert rows[0]["law"] == "first-sinr" and float(rows[0]["statistic"]) < 0.015
    assert "PASS ks first-sinr" in capsys.readouterr().err


def test_check_mode_exits_nonzero_on_failure(tmp_path, capsys):
    # The cell-interference law under RVQ measures the cell approximation itself and exceeds the threshold.
    code = main(["validate-cdf", "--law", "cell-interference", "--samples", "20000", "--backend", "rvq",
                 "--out", str(tmp_path / "x.csv"), "--check"])
    assert code == 1
    assert "FAIL" in capsys.readouterr().err


def test_fig1_stdout_csv(capsys):
    code = main(["fig1", "--trials", "10", "--set", "grid=0,10", "--set", "B_list=4", "--set", "K=20"])
    assert code == 0
    rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert rows[0][0] == "P_dB" and len(rows) == 3


def test_config_file_and_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("K=30\ngrid=100,200\nB=6\n")
    assert main(["scaling", "--config", str(cfg), "--trials", "5", "--out", str(tmp_path / "s.csv")]) == 0
    assert [r["K"] for r in _csv(tmp_path / "s.csv")] == ["100", "200"]
    cfg.write_text("K=30\nwidth=3\n")
    assert main(["scaling", "--config", str(cfg)]) == 2
    assert "unknown key" in capsys.readouterr().err


def test_codebook_export_import(tmp_path):
    path = tmp_path / "cb.txt"
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    args = ["link-level", "--trials", "1", "--set", "symbols=2000", "--set", "K=20"]
    assert main(args + ["--export-codebook", str(path), "--out", str(out1)]) == 0
    cb = load_codebook(path)
    assert cb.vectors.shape == (256, 4)
    assert main(args + ["--codebook", str(path), "--out", str(out2)]) == 0
    a, b = _csv(out1), _csv(out2)
    assert [r["predicted_sinr"] for r in a] == [r["predicted_sinr"] for r in b]
    assert list(a[0]) == ["trial", "position", "user", "predicted_sinr", "measured_sinr",
                          "rel_error", "ser", "tx_power"]


def test_seed_changes_output(tmp_path):
    outs = []
    for seed in (1, 2, 1):
        path = tmp_path / f"s{len(outs)}.csv"
        main(["scaling", "--trials", "5", "--seed", str(seed), "--set", "grid=100", "--out", str(path)])
        outs.append(path.read_text())
    assert outs[0] == outs[2] and outs[0] != outs[1]


def test_bad_backend_rejected():
    with pytest.raises(SystemExit):
        main(["fig1", "--backend", "exact"])
