import csv
import json
import shutil
from pathlib import Path

import numpy as np
import pytest

from clutterem import io
from clutterem.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def write_config(path, doc):
    path.write_text(json.dumps(doc))
    return path


def read_label_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_simulate_then_fit_ar1_case2(tmp_path):
    sim = tmp_path / "sim"
    assert main(["simulate", "--config", str(CONFIGS / "ar1_case2.json"), "--out", str(sim)]) == 0
    x = io.load_range_profile(sim / "snapshots.csv")
    assert x.shape == (96, 16)
    assert io.load_labels(sim / "truth.csv").tolist() == [0] * 32 + [1] * 32 + [2] * 32

    fit = tmp_path / "fit"
    status = main(["fit", "--config", str(CONFIGS / "ar1_case2.json"), "--data", str(sim / "snapshots.csv"),
                   "--truth", str(sim / "truth.csv"), "--out", str(fit)])
    assert status == 0
    rows = read_label_rows(fit / "labels.csv")
    assert len(rows) == 96
    assert sum(r["true_label"] != r["estimated_label"] for r in rows) <= 2
    result = json.loads((fit / "fit_result.json").read_text())
    assert len(result["ll_trace"]) == 11
    assert set(result["labels"]) <= {1, 2, 3}
    assert result["classification_error"] <= 2
    assert not (fit / "error.json").exists()


def test_fit_single_class_labels_all_one(tmp_path):
    cfg = write_config(tmp_path / "c.json", {
        "scenario": {"N": 4, "class_sizes": [30], "model_kind": "ScaledAR1", "clutter_powers_db": [10],
                     "rho": 0.5}, "fit": {"model_kind": "General"}})
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    assert main(["fit", "--config", str(cfg), "--data", str(tmp_path / "snapshots.csv"),
                 "--out", str(tmp_path / "f")]) == 0
    rows = read_label_rows(tmp_path / "f" / "labels.csv")
    assert {r["estimated_label"] for r in rows} == {"1"}
    assert {r["true_label"] for r in rows} == {""}


def test_benchmark_report_is_byte_identical(tmp_path):
    cfg = write_config(tmp_path / "c.json", {
        "scenario": {"N": 8, "class_sizes": [12, 12, 24], "model_kind": "ScaledAR1",
                     "clutter_powers_db": [10, 15, 20], "rho": 0.9},
        "fit": {"model_kind": "ScaledCommon"}})
    for name, jobs in (("a", "1"), ("b", "2")):
        assert main(["benchmark", "--config", str(cfg), "--trials", "4", "--seed", "99", "--n-jobs", jobs,
                     "--out", str(tmp_path / name)]) == 0
    a = (tmp_path / "a" / "report.json").read_bytes()
    assert a == (tmp_path / "b" / "report.json").read_bytes()
    report = json.loads(a)
    assert report["trials"] == 4 and report["master_seed"] == 99
    assert "mean_runtime_ms" not in report
    hist = read_label_rows(tmp_path / "a" / "histogram.csv")
    assert sum(int(r["frequency"]) for r in hist) == 4


def test_tables_grid(tmp_path):
    cfg = json.loads((CONFIGS / "ar1_power_cases.json").read_text())
    cfg["tables"]["scenarios"] = cfg["tables"]["scenarios"][2:]
    path = write_config(tmp_path / "t.json", cfg)
    assert main(["tables", "--config", str(path), "--trials", "2", "--out", str(tmp_path / "o")]) == 0
    grid = json.loads((tmp_path / "o" / "tables.json").read_text())
    assert set(grid["rmsce"]["case3"]) == {"general", "scaled"}
    lines = (tmp_path / "o" / "tables.csv").read_text().splitlines()
    assert lines[0].startswith("scenario,method,rmsce") and len(lines) == 3


def test_config_error_exit_code_and_record(tmp_path, capsys):
    cfg = write_config(tmp_path / "c.json", {"scenario": {"N": 4, "class_sizes": [3, 3],
                                                          "model_kind": "ScaledAR1",
                                                          "clutter_powers_db": [1], "rho": 0.5}})
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    err = json.loads((tmp_path / "o" / "error.json").read_text())
    assert err["key"] == "scenario.clutter_powers_db" and err["command"] == "simulate"
    assert json.loads(capsys.readouterr().err)["error"] == "config"


def test_missing_section_and_bad_data(tmp_path):
    cfg = write_config(tmp_path / "c.json", {"fit": {"model_kind": "General", "L": 2}})
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text('{"n_channels": 2, "n_bins": 1, "layout": "csv-interleaved"}\n1,2,3\n')
    assert main(["fit", "--config", str(cfg), "--data", str(bad), "--out", str(tmp_path / "f")]) == 1
    assert "row 1" in json.loads((tmp_path / "f" / "error.json").read_text())["message"]


def test_success_clears_stale_error(tmp_path):
    out = tmp_path / "o"
    out.mkdir()
    (out / "error.json").write_text("{}")
    assert main(["simulate", "--config", str(CONFIGS / "ar1_24_24_48.json"), "--out", str(out)]) == 0
    assert not (out / "error.json").exists()


def test_flagged_failure_exit_code(tmp_path, monkeypatch):
    import clutterem.evaluation as ev
    from clutterem.em import ClassCollapseError

    def always_collapse(x, config, init):
        raise ClassCollapseError(0, 1)

    monkeypatch.setattr(ev, "run_em", always_collapse)
    status = main(["benchmark", "--config", str(CONFIGS / "ar1_24_24_48.json"), "--trials", "2",
                   "--out", str(tmp_path)])
    assert status == 3
    assert json.loads((tmp_path / "error.json").read_text())["error"] == "flagged_failure"
    assert json.loads((tmp_path / "report.json").read_text())["failed_trials"] == [0, 1]


def test_seed_override_changes_simulation(tmp_path):
    main(["simulate", "--config", str(CONFIGS / "ar1_24_24_48.json"), "--out", str(tmp_path / "a")])
    main(["simulate", "--config", str(CONFIGS / "ar1_24_24_48.json"), "--seed", "5", "--out", str(tmp_path / "b")])
    a = io.load_range_profile(tmp_path / "a" / "snapshots.csv")
    b = io.load_range_profile(tmp_path / "b" / "snapshots.csv")
    assert not np.array_equal(a, b)
    assert json.loads((tmp_path / "b" / "scenario.json").read_text())["seed"] == 5


def test_console_script_installed():
    assert shutil.which("clutterem") is not None
