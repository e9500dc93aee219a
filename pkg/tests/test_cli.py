import json
import logging

import pandas as pd
import pytest

from src.cli.main import EXIT_DATA, EXIT_IO, EXIT_OK, EXIT_USAGE, main
from src.core.logger import set_level
from src.flows.reader import write_flows_csv
from src.sim.export import TIMESERIES_COLUMNS


@pytest.fixture
def short_scenario(tmp_path):
    path = tmp_path / "short.scn"
    path.write_text("ticks = 30\nthreats = 10\nresponse_rate = 4\n", encoding="utf-8")
    return path


def test_missing_required_flag_is_usage_error(tmp_path, capsys):
    assert main(["sim", "run", "--scenario", "s1"]) == EXIT_USAGE
    assert "--out" in capsys.readouterr().err


def test_unknown_scenario_is_usage_error(tmp_path):
    assert main(["sim", "run", "--scenario", "s9", "--out", str(tmp_path)]) == EXIT_USAGE


def test_variant_out_of_range_is_usage_error(tmp_path):
    assert main(["sim", "run", "--scenario", "s4", "--variant", "5", "--out", str(tmp_path)]) == EXIT_USAGE


def test_sim_run_writes_series_and_summary(short_scenario, tmp_path, capsys):
    out = tmp_path / "results"
    assert main(["sim", "run", "--scenario", str(short_scenario), "--seed", "3", "--out", str(out)]) == EXIT_OK

    frame = pd.read_csv(out / "short_seed3.csv")
    assert list(frame.columns) == TIMESERIES_COLUMNS
    assert len(frame) == 30
    summary = json.loads((out / "short_seed3.summary.json").read_text(encoding="utf-8"))
    printed = [line for line in capsys.readouterr().out.splitlines() if line.startswith("{")]
    assert json.loads(printed[-1]) == summary


def test_sim_sweep_writes_one_row_per_run(short_scenario, tmp_path, capsys):
    out = tmp_path / "results"
    assert main(["sim", "sweep", "--scenario", str(short_scenario), "--seeds", "3", "--out", str(out)]) == EXIT_OK

    frame = pd.read_csv(out / "short_sweep.csv")
    assert len(frame) == 3
    assert "Записано" in capsys.readouterr().out


def test_sweep_needs_a_seed(short_scenario, tmp_path):
    assert main(["sim", "sweep", "--scenario", str(short_scenario), "--seeds", "0", "--out", str(tmp_path)]) == EXIT_USAGE


def test_bad_scenario_file_is_data_error(tmp_path, capsys):
    path = tmp_path / "broken.scn"
    path.write_text("threats = many\n", encoding="utf-8")
    assert main(["sim", "run", "--scenario", str(path), "--out", str(tmp_path)]) == EXIT_DATA
    assert "threats" in capsys.readouterr().err


def test_detect_pipeline(tmp_path, capsys):
    data = tmp_path / "synth.csv"
    model = tmp_path / "model.crdm"
    predictions = tmp_path / "predictions.csv"
    report = tmp_path / "report.json"

    assert main(["detect", "synth", "--rows", "2000", "--seed", "1", "--out", str(data)]) == EXIT_OK
    assert main(["detect", "train", "--data", str(data), "--model", str(model)]) == EXIT_OK
    assert "Версия:" in capsys.readouterr().out

    assert main(["detect", "eval", "--data", str(data), "--model", str(model), "--report", str(report)]) == EXIT_OK
    document = json.loads(report.read_text(encoding="utf-8"))
    assert document["f1_micro"] > 0.9

    assert main(["detect", "predict", "--data", str(data), "--model", str(model), "--out", str(predictions)]) == EXIT_OK
    assert "Total Items: 2,000" in capsys.readouterr().out
    assert len(pd.read_csv(predictions)) == 2000


def test_corrupt_model_is_data_error(small_dataset, tmp_path):
    data = write_flows_csv(small_dataset.subset(range(20)), tmp_path / "flows.csv")
    model = tmp_path / "model.crdm"
    model.write_bytes(b"CRDM\x00\x01" + b"\x00" * 40)
    assert main(["detect", "predict", "--data", str(data), "--model", str(model), "--out", str(tmp_path / "o.csv")]) == EXIT_DATA


def test_missing_data_file_is_io_error(tmp_path):
    args = ["detect", "train", "--data", str(tmp_path / "absent.csv"), "--model", str(tmp_path / "m.crdm")]
    assert main(args) == EXIT_IO


def test_serve_without_api_key_is_usage_error(model_path, monkeypatch):
    monkeypatch.delenv("CRDM_API_KEY", raising=False)
    assert main(["serve", "--model", str(model_path)]) == EXIT_USAGE


def test_quiet_flag_keeps_command_output(short_scenario, tmp_path, capsys):
    try:
        assert main(["-q", "sim", "run", "--scenario", str(short_scenario), "--out", str(tmp_path)]) == EXIT_OK
    finally:
        set_level(logging.INFO)
    out = capsys.readouterr().out
    assert " - INFO - " not in out
    assert json.loads(out.strip().splitlines()[-1])["ticks"] == 30


def test_holdout_eval_counts_its_share_of_rejected_rows(tmp_path):
    data = tmp_path / "synth.csv"
    model = tmp_path / "model.crdm"
    report = tmp_path / "report.json"
    assert main(["detect", "synth", "--rows", "600", "--seed", "2", "--out", str(data)]) == EXIT_OK
    assert main(["detect", "train", "--data", str(data), "--model", str(model)]) == EXIT_OK

    lines = data.read_text(encoding="utf-8").splitlines()
    for i in range(1, 11):
        fields = lines[i].split(",")
        fields[7] = "broken"
        lines[i] = ",".join(fields)
    data.write_text("\n".join(lines) + "\n", encoding="utf-8")

    args = ["detect", "eval", "--data", str(data), "--model", str(model), "--holdout", "0.2", "--report", str(report)]
    assert main(args) == EXIT_OK
    document = json.loads(report.read_text(encoding="utf-8"))
    assert sum(document["confusion"]["dropped"]) == 2
