import pandas as pd
import pytest

from src.core.errors import ConfigError, DataFormatError
from src.flows.schema import CICIDS2017_FEATURES, DESTINATION_PORT, LABEL, RejectedRow
from src.flows.split import split, stratified_quotas
from src.flows.synth import Separability, SynthSpec, class_counts, synth_dataset


TUESDAY = {"BENIGN": 43166 / 44489, "FTP-Patator": 786 / 44489, "SSH-Patator": 537 / 44489}


def _synth(rows, proportions, seed=0, **kwargs):
    return synth_dataset(SynthSpec(row_count=rows, proportions=proportions, seed=seed, **kwargs))


def test_tuesday_proportions_reproduce_confusion_totals():
    assert class_counts(44489, TUESDAY) == {"BENIGN": 43166, "FTP-Patator": 786, "SSH-Patator": 537}


def test_default_proportions_are_close_to_tuesday():
    counts = synth_dataset(SynthSpec(row_count=44489, seed=1)).class_counts()
    assert counts == {"BENIGN": 43154, "FTP-Patator": 801, "SSH-Patator": 534}


def test_synth_schema_and_ports():
    ds = _synth(300, {"BENIGN": 0.5, "FTP-Patator": 0.25, "SSH-Patator": 0.25}, seed=3)
    assert ds.feature_names == CICIDS2017_FEATURES
    assert ds.labeled
    ports = ds.frame.groupby(LABEL)[DESTINATION_PORT].unique()
    assert list(ports["FTP-Patator"]) == [21.0]
    assert list(ports["SSH-Patator"]) == [22.0]


def test_synth_is_deterministic():
    spec = SynthSpec(row_count=500, separability=Separability.NOISY, noise_rate=0.1, seed=9)
    pd.testing.assert_frame_equal(synth_dataset(spec).frame, synth_dataset(spec).frame)


def test_synth_zero_rows():
    ds = synth_dataset(SynthSpec(row_count=0))
    assert len(ds) == 0
    assert ds.class_names == []


def test_synth_rejects_bad_proportions():
    with pytest.raises(ConfigError):
        synth_dataset(SynthSpec(row_count=10, proportions={"BENIGN": 0.5}))
    with pytest.raises(ConfigError):
        synth_dataset(SynthSpec(row_count=10, noise_rate=2.0))


def test_stratified_split_preserves_ratios():
    ds = _synth(1000, {"BENIGN": 0.7, "FTP-Patator": 0.2, "SSH-Patator": 0.1}, seed=4)
    train, test = split(ds, 0.2, seed=11)

    assert (len(train), len(test)) == (800, 200)
    assert test.class_counts() == {"BENIGN": 140, "FTP-Patator": 40, "SSH-Patator": 20}


def test_split_partitions_rows_without_overlap():
    ds = _synth(200, {"BENIGN": 0.5, "SSH-Patator": 0.5}, seed=2)
    train, test = split(ds, 0.25, seed=5)
    merged = pd.concat([train.frame, test.frame]).sort_values(list(ds.frame.columns[:7])).reset_index(drop=True)
    expected = ds.frame.sort_values(list(ds.frame.columns[:7])).reset_index(drop=True)
    pd.testing.assert_frame_equal(merged, expected)


def test_smallest_stratified_split():
    ds = _synth(2, {"BENIGN": 1.0})
    train, test = split(ds, 0.5, seed=0)
    assert (len(train), len(test)) == (1, 1)


def test_split_is_deterministic():
    ds = _synth(400, {"BENIGN": 0.9, "FTP-Patator": 0.1}, seed=8)
    first = split(ds, 0.3, seed=21)
    second = split(ds, 0.3, seed=21)
    pd.testing.assert_frame_equal(first[1].frame, second[1].frame)
    other = split(ds, 0.3, seed=22)
    assert not first[1].frame.equals(other[1].frame)


def test_starved_class_is_named():
    ds = _synth(100, {"BENIGN": 0.99, "FTP-Patator": 0.01})
    with pytest.raises(DataFormatError) as exc:
        split(ds, 0.2, seed=0)
    assert exc.value.field == "FTP-Patator"


def test_unstratified_split_size():
    ds = _synth(101, {"BENIGN": 0.99, "FTP-Patator": 0.01})
    train, test = split(ds, 0.2, seed=0, stratified=False)
    assert (len(train), len(test)) == (81, 20)


def test_fraction_out_of_range():
    ds = _synth(10, {"BENIGN": 1.0})
    for fraction in (0.0, 1.0, -0.1):
        with pytest.raises(ConfigError):
            split(ds, fraction, seed=0)


def test_quotas_keep_one_row_on_each_side():
    assert stratified_quotas({"a": 2, "b": 98}, 0.01) == {"a": 1, "b": 1}
    assert stratified_quotas({"a": 3, "b": 3}, 0.9) == {"a": 2, "b": 2}


def test_rejected_rows_follow_split_fraction():
    ds = _synth(200, {"BENIGN": 0.5, "SSH-Patator": 0.5}, seed=6)
    ds.rejected = [RejectedRow(line=line, label="BENIGN", reason="поле 'Flow Duration' не число") for line in range(2, 12)]
    train, test = split(ds, 0.2, seed=3)

    assert (len(train.rejected), len(test.rejected)) == (8, 2)
    assert sorted(r.line for r in train.rejected + test.rejected) == list(range(2, 12))
    assert [r.line for r in test.rejected] == sorted(r.line for r in test.rejected)
