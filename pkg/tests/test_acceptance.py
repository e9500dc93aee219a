import os

import numpy as np
import pytest

from src.detect.batch import batch_predict
from src.detect.classifiers import best_split
from src.detect.model import train
from src.evaluation.importance import permutation_importance
from src.evaluation.metrics import binary_roc_auc
from src.evaluation.report import evaluate
from src.flows.reader import read_flows_csv, record_from_mapping, write_flows_csv
from src.flows.schema import Dataset
from src.flows.split import split
from src.flows.synth import SynthSpec, synth_dataset
from src.sim.engine import run
from src.sim.export import export_timeseries
from src.sim.models import MAX_DEFENSE
from src.sim.scenario import builtin_scenario, sweep, with_adaptation_disabled
from tests.test_classifiers import _exhaustive_splits


pytestmark = pytest.mark.acceptance

SEEDS = list(range(1, 51))


def _sweep(scenario_id):
    return sweep(builtin_scenario(scenario_id), SEEDS)


def test_full_response_keeps_network_clean():
    result = _sweep("s2")
    strong = result.records[2]
    clean = sum(1 for record in strong if record.summary.final_infected == 0)
    assert clean >= 0.9 * len(strong)
    assert result.aggregates[2].mean_peak_fraction <= 0.02


def test_weak_response_has_limited_effect():
    result = _sweep("s2")
    weak, strong = result.aggregates[0], result.aggregates[2]
    assert weak.mean_final_fraction - strong.mean_final_fraction >= 0.10

    infected = sum(1 for record in result.records[0] if record.summary.peak_infected > 0)
    assert infected > len(SEEDS) / 2


def test_more_threats_overwhelm_defences():
    finals = [agg.mean_final_fraction for agg in _sweep("s1").aggregates]
    assert finals[0] < finals[1] < finals[2]
    assert finals[2] - finals[0] >= 0.15


def test_strong_defences_end_with_fewer_infections():
    finals = [agg.mean_final_fraction for agg in _sweep("s3").aggregates]
    assert finals[0] > finals[1] > finals[2]
    assert finals[2] <= 0.05


def test_adaptive_defences_rise_after_health_drops():
    spec = builtin_scenario("s4")[0]
    policy = spec.adaptation
    dropped = raised = 0
    adaptive_health, control_health = [], []
    for seed in SEEDS:
        series = run(spec, seed).series
        control = run(with_adaptation_disabled(spec), seed).series
        adaptive_health.append(np.mean([m.health for m in series[50:100]]))
        control_health.append(np.mean([m.health for m in control[50:100]]))

        drop = next((m.tick for m in series if m.health < policy.raise_threshold), None)
        if drop is None or drop + policy.adapt_interval >= len(series):
            continue
        dropped += 1
        before = series[drop].mean_defense
        window = series[drop + 1: drop + policy.adapt_interval + 1]
        if before == MAX_DEFENSE or any(m.mean_defense > before for m in window):
            raised += 1

    assert dropped > 0
    assert raised >= 0.95 * dropped
    assert np.mean(adaptive_health) >= np.mean(control_health)


def test_runs_export_identical_files(tmp_path):
    specs = builtin_scenario("s1") + builtin_scenario("s4")
    for seed in range(20):
        spec = specs[seed % len(specs)]
        first = export_timeseries(run(spec, seed), tmp_path / f"a{seed}.csv")
        second = export_timeseries(run(spec, seed), tmp_path / f"b{seed}.csv")
        assert first.read_bytes() == second.read_bytes()


def test_separable_tuesday_mix_is_detected_perfectly():
    dataset = synth_dataset(SynthSpec(row_count=44489, seed=0))
    train_part, test_part = split(dataset, 0.2, seed=0, stratified=True)
    model = train(train_part, seed=0)
    report = evaluate(model, test_part, with_importance=False)

    assert report.f1_micro == 1.0
    assert report.f1_macro == 1.0
    assert report.roc_auc_macro_ovr == pytest.approx(1.0)
    assert report.pr_auc_macro_ovr == pytest.approx(1.0)
    assert report.log_loss <= 0.01
    counts = report.confusion.counts
    assert counts.sum() == np.trace(counts)
    assert not report.confusion.dropped.any()


def test_batch_reconciles_at_desk_scale(trained_model, tmp_path):
    path = write_flows_csv(synth_dataset(SynthSpec(row_count=10000, seed=3)), tmp_path / "flows.csv")
    report = batch_predict(trained_model, path, tmp_path / "out.csv")
    assert (report.succeeded, report.failed) == (10000, 0)

    lines = path.read_text(encoding="utf-8").splitlines()
    fields = lines[500].split(",")
    fields[7] = "broken"
    lines[500] = ",".join(fields)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    report = batch_predict(trained_model, path, tmp_path / "out.csv")
    assert (report.succeeded, report.failed) == (9999, 1)
    assert report.succeeded + report.failed == report.total_items


def test_auc_matches_pair_counting_on_random_instances():
    rng = np.random.default_rng(2024)
    for _ in range(200):
        n = int(rng.integers(2, 13))
        scores = rng.integers(0, 4, size=n) / 3
        positive = rng.random(n) < 0.5
        positive[0], positive[-1] = True, False
        pairs = [
            1.0 if p > q else 0.5 if p == q else 0.0
            for p in scores[positive]
            for q in scores[~positive]
        ]
        assert binary_roc_auc(scores, positive) == pytest.approx(sum(pairs) / len(pairs), rel=1e-12)


def test_root_split_matches_exhaustive_search():
    rng = np.random.default_rng(77)
    for _ in range(50):
        n = int(rng.integers(4, 16))
        X = rng.integers(0, 5, size=(n, 3)).astype(float)
        y = rng.integers(0, 3, size=n)
        splits = _exhaustive_splits(X, y, 3, 1)
        found = best_split(X, y, 3, 1)
        if not splits:
            assert found is None
            continue
        assert found[2] == pytest.approx(min(splits.values()), abs=1e-12)


def test_single_informative_feature_ranks_first():
    for seed in range(10):
        rng = np.random.default_rng(seed)
        ports = {"BENIGN": 443, "FTP-Patator": 21, "SSH-Patator": 22}
        records = [
            record_from_mapping({
                "Source IP": "172.16.0.1",
                "Source Port": 50000,
                "Destination IP": "192.168.10.50",
                "Destination Port": ports[label],
                "Protocol": 6,
                "Timestamp": "4/7/2017 10:00:00",
                "Flow Duration": float(rng.normal(1000, 50)),
                "Flow IAT Mean": 12.0,
                "Label": label,
            })
            for label in list(ports) * 30
        ]
        dataset = Dataset.from_records(records, source=f"seed{seed}")
        model = train(dataset, seed=seed)
        ranking = permutation_importance(model, dataset, repeats=2, seed=seed)
        assert ranking[0][0] == "Destination Port"


@pytest.mark.skipif(not os.getenv("CICIDS2017_TUESDAY_CSV"), reason="нужен локальный CSV CICIDS2017 (вторник)")
def test_tuesday_capture_is_detected_well():
    dataset = read_flows_csv(os.environ["CICIDS2017_TUESDAY_CSV"], strict=False)
    train_part, test_part = split(dataset, 0.2, seed=0, stratified=True)
    model = train(train_part, seed=0)
    report = evaluate(model, test_part, with_importance=False)

    counts = report.confusion.counts
    totals = report.confusion.class_totals()
    assert np.trace(counts) / totals.sum() >= 0.99
    assert np.all(np.diag(counts) / totals >= 0.98)
