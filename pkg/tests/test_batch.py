import numpy as np
import pandas as pd
import pytest

from src.detect.batch import batch_predict, output_columns
from src.flows.reader import write_flows_csv


@pytest.fixture
def flows_csv(small_dataset, tmp_path):
    return write_flows_csv(small_dataset.subset(range(10)), tmp_path / "flows.csv")


def test_clean_file_predicts_every_row(trained_model, small_dataset, flows_csv, tmp_path):
    out = tmp_path / "out" / "predictions.csv"
    report = batch_predict(trained_model, flows_csv, out, chunksize=3)

    assert (report.total_items, report.succeeded, report.failed) == (10, 10, 0)
    assert "Total Items: 10" in report.summary()

    frame = pd.read_csv(out, keep_default_na=False)
    assert list(frame.columns) == output_columns(trained_model.class_order)
    assert list(frame["predicted"]) == small_dataset.labels[:10]
    assert list(frame["flow_id"]) == list(small_dataset.frame["Flow ID"][:10])
    scores = frame[[f"score_{c}" for c in trained_model.class_order]].to_numpy(dtype=float)
    np.testing.assert_allclose(scores.sum(axis=1), 1.0)
    assert (frame["error"] == "").all()


def test_malformed_row_is_reported_in_place(trained_model, flows_csv, tmp_path):
    lines = flows_csv.read_text(encoding="utf-8").splitlines()
    fields = lines[5].split(",")
    fields[7] = "oops"
    lines[5] = ",".join(fields)
    flows_csv.write_text("\n".join(lines) + "\n", encoding="utf-8")

    out = tmp_path / "predictions.csv"
    report = batch_predict(trained_model, flows_csv, out, chunksize=4)

    assert (report.succeeded, report.failed) == (9, 1)
    frame = pd.read_csv(out, keep_default_na=False)
    assert len(frame) == 10
    failures = frame[frame["error"] != ""]
    assert list(failures.index) == [4]
    assert failures["error"].iloc[0].startswith("строка 6:")
    assert failures["predicted"].iloc[0] == ""


def test_missing_feature_fails_rows_with_reason(trained_model, small_dataset, tmp_path):
    path = tmp_path / "narrow.csv"
    small_dataset.frame.iloc[:5].drop(columns=["Flow Duration"]).to_csv(path, index=False)

    report = batch_predict(trained_model, path, tmp_path / "out.csv")

    assert (report.succeeded, report.failed) == (0, 5)
    frame = pd.read_csv(tmp_path / "out.csv", keep_default_na=False)
    assert frame["error"].str.contains("Flow Duration").all()


def test_header_only_input_gives_header_only_output(trained_model, small_dataset, tmp_path):
    path = write_flows_csv(small_dataset.subset([]), tmp_path / "empty.csv")
    out = tmp_path / "out.csv"
    report = batch_predict(trained_model, path, out)

    assert report.to_dict()["total_items"] == 0
    assert (report.succeeded, report.failed) == (0, 0)
    assert out.read_text(encoding="utf-8").strip() == ",".join(output_columns(trained_model.class_order))


def test_unreadable_input_writes_nothing(trained_model, tmp_path):
    out = tmp_path / "out.csv"
    with pytest.raises(OSError):
        batch_predict(trained_model, tmp_path / "absent.csv", out)
    assert not out.exists()


def _rewrite_line(path, index, edit):
    lines = path.read_text(encoding="utf-8").splitlines()
    lines[index] = edit(lines[index])
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def test_row_with_extra_field_is_one_failure(trained_model, flows_csv, tmp_path):
    _rewrite_line(flows_csv, 3, lambda line: line + ",extra")

    out = tmp_path / "predictions.csv"
    report = batch_predict(trained_model, flows_csv, out, chunksize=4)

    assert (report.succeeded, report.failed) == (9, 1)
    frame = pd.read_csv(out, keep_default_na=False)
    assert len(frame) == 10
    failures = frame[frame["error"] != ""]
    assert list(failures.index) == [2]
    assert "лишние поля" in failures["error"].iloc[0]


def test_truncated_row_is_one_failure(trained_model, flows_csv, tmp_path):
    _rewrite_line(flows_csv, 8, lambda line: ",".join(line.split(",")[:5]))

    out = tmp_path / "predictions.csv"
    report = batch_predict(trained_model, flows_csv, out)

    assert (report.succeeded, report.failed) == (9, 1)
    frame = pd.read_csv(out, keep_default_na=False)
    failures = frame[frame["error"] != ""]
    assert list(failures.index) == [7]
    assert failures["error"].iloc[0].startswith("строка 9: неполная строка")
