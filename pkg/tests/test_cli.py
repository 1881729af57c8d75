from __future__ import annotations

import json

import pytest

from vcmlab.cli import main

RUN_DOC = {
    "session": {"treatment": "group", "seed": 0},
    "roster": [
        {"kind": "free_rider", "count": 3},
        {"kind": "tobit_latent", "count": 9, "coefficients": "us_group"},
    ],
    "replications": 2,
    "seed": 42,
    "label": "cli",
}


@pytest.fixture()
def run_config(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps(RUN_DOC))
    return path


def test_simulate_writes_logs_and_summary(run_config, tmp_path, capsys):
    out = tmp_path / "logs"
    code = main(["simulate", "--config", str(run_config), "--out", str(out)])
    assert code == 0
    files = sorted(p.name for p in out.glob("*.jsonl"))
    assert files == ["cli-r000.jsonl", "cli-r001.jsonl"]
    assert (out / "cli-summary.csv").exists()
    stdout = capsys.readouterr().out
    assert "wrote 2 session logs" in stdout


def test_simulate_overrides(run_config, tmp_path):
    out = tmp_path / "logs3"
    main(["simulate", "--config", str(run_config), "--out", str(out),
          "--replications", "3", "--seed", "7"])
    assert len(list(out.glob("*.jsonl"))) == 3


def test_estimate_flat_file_and_csv(run_config, tmp_path, capsys):
    out = tmp_path / "logs"
    main(["simulate", "--config", str(run_config), "--out", str(out),
          "--replications", "3"])
    fit_file = tmp_path / "fit.txt"
    code = main(["estimate", "--logs", str(out / "*.jsonl"),
                 "--cell", "cli_cell", "--out", str(fit_file)])
    assert code == 0
    text = fit_file.read_text()
    assert text.startswith("cell: cli_cell\n")
    values = dict(line.split(": ", 1) for line in text.strip().splitlines())
    assert "own_lag1" in values
    assert float(values["own_lag1_se"]) > 0
    assert int(values["n_obs"]) == 3 * 12 * 78
    table = (tmp_path / "fit.csv").read_text().splitlines()
    assert table[0] == "coefficient,estimate,clustered_se"
    assert table[-1].startswith("sigma,")
    # repr round-trip: the table holds the exact fitted value
    est = float(table[1].split(",")[1])
    assert f"{est!r}" == table[1].split(",")[1]


def test_analyze_report_directory(run_config, tmp_path):
    out = tmp_path / "logs"
    main(["simulate", "--config", str(run_config), "--out", str(out),
          "--replications", "4"])
    report_dir = tmp_path / "report"
    code = main([
        "analyze", "--logs", str(out / "*.jsonl"),
        "--cells", "first=cli-r00[01].jsonl;second=cli-r00[23].jsonl",
        "--compare", "first:second",
        "--out", str(report_dir),
    ])
    assert code == 0
    assert (report_dir / "trajectories.csv").exists()
    comparisons = (report_dir / "comparisons.txt").read_text()
    assert "first" in comparisons and "second" in comparisons
    doc = json.loads((report_dir / "report.json").read_text())
    assert set(doc["cells"]) == {"first", "second"}


def test_analyze_rounds_window(run_config, tmp_path):
    out = tmp_path / "logs"
    main(["simulate", "--config", str(run_config), "--out", str(out)])
    report_dir = tmp_path / "windowed"
    code = main([
        "analyze", "--logs", str(out / "*.jsonl"),
        "--cells", "all=*.jsonl", "--rounds", "41..80",
        "--out", str(report_dir),
    ])
    assert code == 0
    doc = json.loads((report_dir / "report.json").read_text())
    assert doc["rounds_window"] == [41, 80]


class TestErrorPaths:
    def test_missing_logs_glob(self, tmp_path, capsys):
        code = main(["estimate", "--logs", str(tmp_path / "nope-*.jsonl"),
                     "--cell", "x", "--out", str(tmp_path / "f.txt")])
        assert code == 2
        assert "error:" in capsys.readouterr().err

    def test_bad_cells_spec(self, run_config, tmp_path, capsys):
        out = tmp_path / "logs"
        main(["simulate", "--config", str(run_config), "--out", str(out)])
        code = main(["analyze", "--logs", str(out / "*.jsonl"),
                     "--cells", "justalabel", "--out", str(tmp_path / "r")])
        assert code == 2

    def test_bad_rounds_spec(self, run_config, tmp_path):
        out = tmp_path / "logs"
        main(["simulate", "--config", str(run_config), "--out", str(out)])
        code = main(["analyze", "--logs", str(out / "*.jsonl"),
                     "--cells", "all=*.jsonl", "--rounds", "40-80",
                     "--out", str(tmp_path / "r")])
        assert code == 2

    def test_unmatched_cell_pattern(self, run_config, tmp_path):
        out = tmp_path / "logs"
        main(["simulate", "--config", str(run_config), "--out", str(out)])
        code = main(["analyze", "--logs", str(out / "*.jsonl"),
                     "--cells", "ghost=zzz-*.jsonl", "--out", str(tmp_path / "r")])
        assert code == 2
