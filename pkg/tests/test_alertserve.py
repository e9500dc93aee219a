import asyncio
import json
import math

import httpx
import numpy as np
import pytest
from aiohttp.test_utils import TestServer

from src.alertserve.app import API_KEY_HEADER, AlertService, serve
from src.alertserve.client import AlertClient
from src.alertserve.feedback import evaluate_feedback
from src.alertserve.notifier import AlertNotifier, TelegramNotifier, format_alert, notifier_from_config
from src.alertserve.severity import categorize
from src.alertserve.store import Alert, AlertStore, FeedbackEntry, FeedbackStore, record_feedback
from src.core.config import ServeConfig
from src.core.errors import ConfigError, UnknownAlertError
from src.detect.model import PredictionResult


API_KEY = "test-key-0123456789"
CLASSES = ["BENIGN", "FTP-Patator", "SSH-Patator"]


class RecordingNotifier(AlertNotifier):
    def __init__(self, min_severity="low"):
        super().__init__(min_severity)
        self.sent = []
        self.closed = False

    async def notify(self, alert):
        self.sent.append(alert)

    async def close(self):
        self.closed = True


def _config(tmp_path, **overrides):
    values = {"api_key": API_KEY, "log_dir": str(tmp_path / "logs"), "port": 0}
    values.update(overrides)
    return ServeConfig(**values)


def _flow(dataset, label):
    index = next(i for i, value in enumerate(dataset.labels) if value == label)
    row = dataset.record(index).to_row()
    return {key: value for key, value in row.items() if not (isinstance(value, float) and math.isnan(value))}


def _run(service, scenario):
    """Поднимает приложение на свободном порту и выполняет сценарий клиента"""

    async def main():
        server = TestServer(service.app)
        await server.start_server()
        base_url = str(server.make_url("/"))
        try:
            async with AlertClient(base_url, API_KEY) as client:
                return await scenario(client, base_url)
        finally:
            await server.close()

    return asyncio.run(main())


def _prediction(scores, classes=CLASSES):
    return PredictionResult.from_scores(classes, np.array(scores, dtype=float))


@pytest.mark.parametrize(
    "scores, expected",
    [
        ([0.97, 0.02, 0.01], ("none", None)),
        ([0.02, 0.95, 0.03], ("high", "SOP-ESCALATE-03")),
        ([0.10, 0.20, 0.70], ("medium", "SOP-CONTAIN-02")),
        ([0.30, 0.45, 0.25], ("low", "SOP-OBSERVE-01")),
        ([0.05, 0.90, 0.05], ("high", "SOP-ESCALATE-03")),
    ],
)
def test_categorize(scores, expected, tmp_path):
    assert categorize(_prediction(scores), _config(tmp_path)) == expected


def test_health_is_public_and_reports_model(trained_model, tmp_path):
    service = AlertService(trained_model, _config(tmp_path))

    async def scenario(client, base_url):
        async with httpx.AsyncClient(base_url=base_url) as anonymous:
            response = await anonymous.get("/v1/health")
        return response.status_code, response.json()

    status, body = _run(service, scenario)
    assert status == 200
    assert body["model_version"] == trained_model.version
    assert body["classes"] == CLASSES


def test_missing_or_wrong_key_is_rejected(trained_model, small_dataset, tmp_path):
    service = AlertService(trained_model, _config(tmp_path))
    flow = _flow(small_dataset, "FTP-Patator")

    async def scenario(client, base_url):
        async with httpx.AsyncClient(base_url=base_url) as anonymous:
            missing = await anonymous.post("/v1/predict", json=flow)
            wrong = await anonymous.post("/v1/predict", json=flow, headers={API_KEY_HEADER: "nope"})
            drift = await anonymous.get("/v1/drift")
        return missing.status_code, wrong.status_code, drift.status_code

    assert _run(service, scenario) == (401, 401, 401)
    assert len(service.alerts) == 0
    assert not (tmp_path / "logs" / "alerts.ndjson").exists()


def test_predict_issues_alert_and_notifies(trained_model, small_dataset, tmp_path):
    notifier = RecordingNotifier(min_severity="low")
    service = AlertService(trained_model, _config(tmp_path), notifier)

    async def scenario(client, base_url):
        attack = await client.predict(_flow(small_dataset, "FTP-Patator"))
        benign = await client.predict(_flow(small_dataset, "BENIGN"))
        return attack, benign

    attack, benign = _run(service, scenario)

    assert attack["alert_id"] == 1 and benign["alert_id"] == 2
    assert attack["predicted"] == "FTP-Patator"
    assert attack["severity"] == "high"
    assert attack["sop_id"] == "SOP-ESCALATE-03"
    assert sum(attack["scores"]) == pytest.approx(1.0, abs=1e-9)
    assert benign["severity"] == "none" and benign["sop_id"] is None
    assert [alert.alert_id for alert in notifier.sent] == [1]
    assert notifier.closed

    lines = (tmp_path / "logs" / "alerts.ndjson").read_text(encoding="utf-8").splitlines()
    assert [json.loads(line)["alert_id"] for line in lines] == [1, 2]


def test_concurrent_predictions_get_unique_ids(trained_model, small_dataset, tmp_path):
    service = AlertService(trained_model, _config(tmp_path))
    flows = [small_dataset.record(i).to_row() for i in range(100)]

    async def scenario(client, base_url):
        return await asyncio.gather(*(client.predict(flow) for flow in flows))

    responses = _run(service, scenario)
    assert sorted(r["alert_id"] for r in responses) == list(range(1, 101))
    assert len(service.alerts) == 100


def test_malformed_bodies_are_bad_requests(trained_model, tmp_path):
    service = AlertService(trained_model, _config(tmp_path))

    async def scenario(client, base_url):
        raw = client.client
        not_json = await raw.post("/v1/predict", content=b"{oops", headers={"Content-Type": "application/json"})
        not_object = await raw.post("/v1/predict", json=[1, 2, 3])
        bad_number = await raw.post("/v1/predict", json={"Flow Duration": "fast"})
        missing = await raw.post("/v1/predict", json={"Destination Port": 21})
        return not_json, not_object, bad_number, missing

    not_json, not_object, bad_number, missing = _run(service, scenario)
    assert [r.status_code for r in (not_json, not_object, bad_number, missing)] == [400, 400, 400, 400]
    assert bad_number.json()["field"] == "Flow Duration"
    assert "error" in missing.json()
    assert len(service.alerts) == 0


def test_oversized_body_is_rejected(trained_model, tmp_path):
    service = AlertService(trained_model, _config(tmp_path, max_body_bytes=1024))

    async def scenario(client, base_url):
        return await client.client.post("/v1/predict", json={"Flow Duration": 1, "padding": "x" * 4096})

    assert _run(service, scenario).status_code == 413
    assert len(service.alerts) == 0


def test_feedback_is_idempotent(trained_model, small_dataset, tmp_path):
    service = AlertService(trained_model, _config(tmp_path))

    async def scenario(client, base_url):
        alert = await client.predict(_flow(small_dataset, "SSH-Patator"))
        first = await client.client.post("/v1/feedback", json={"alert_id": alert["alert_id"], "actual_label": "SSH-Patator"})
        again = await client.client.post("/v1/feedback", json={"alert_id": alert["alert_id"], "actual_label": "SSH-Patator"})
        unknown = await client.client.post("/v1/feedback", json={"alert_id": 999, "actual_label": "BENIGN"})
        bad = await client.client.post("/v1/feedback", json={"alert_id": True, "actual_label": "BENIGN"})
        drift = await client.drift()
        return first, again, unknown, bad, drift

    first, again, unknown, bad, drift = _run(service, scenario)
    assert (first.status_code, again.status_code) == (201, 200)
    assert first.json()["recorded"] is True and again.json()["recorded"] is False
    assert unknown.status_code == 404
    assert bad.status_code == 400 and bad.json()["field"] == "alert_id"
    assert (drift["pairs"], drift["correct"], drift["accuracy"]) == (1, 1, 1.0)
    assert drift["low_sample"] is True
    assert len((tmp_path / "logs" / "feedback.ndjson").read_text(encoding="utf-8").splitlines()) == 1


def test_client_raises_on_error_status(trained_model, tmp_path):
    service = AlertService(trained_model, _config(tmp_path))

    async def scenario(client, base_url):
        with pytest.raises(httpx.HTTPStatusError):
            await client.feedback(42, "BENIGN")
        return await client.health()

    assert _run(service, scenario)["status"] == "ok"


def _alerts(count, predicted="FTP-Patator"):
    prediction = _prediction([0.02, 0.95, 0.03])
    assert prediction.predicted == predicted
    return {
        i: Alert(alert_id=i, received_at="", prediction=prediction, severity="high", sop_id="SOP-ESCALATE-03", model_version="v")
        for i in range(1, count + 1)
    }


def test_drift_within_floor():
    alerts = _alerts(500)
    feedback = [FeedbackEntry(i, "FTP-Patator" if i > 10 else "BENIGN") for i in alerts]
    report = evaluate_feedback(alerts, feedback, ServeConfig(feedback_window=500, accuracy_floor=0.95))
    assert (report.pairs, report.correct) == (500, 490)
    assert report.accuracy == pytest.approx(0.98)
    assert not report.retrain_recommended
    assert not report.low_sample


def test_drift_below_floor_recommends_retraining():
    alerts = _alerts(500)
    feedback = [FeedbackEntry(i, "FTP-Patator" if i > 100 else "SSH-Patator") for i in alerts]
    report = evaluate_feedback(alerts, feedback, ServeConfig(feedback_window=500, accuracy_floor=0.95))
    assert report.accuracy == pytest.approx(0.8)
    assert report.retrain_recommended


def test_drift_window_and_relabels():
    alerts = _alerts(600)
    feedback = [FeedbackEntry(i, "BENIGN" if i <= 100 else "FTP-Patator") for i in alerts]
    cfg = ServeConfig(feedback_window=500, accuracy_floor=0.95)
    assert evaluate_feedback(alerts, feedback, cfg).accuracy == 1.0

    # исправленная метка старого алерта возвращает его в окно
    feedback.append(FeedbackEntry(1, "SSH-Patator"))
    report = evaluate_feedback(alerts, feedback, cfg)
    assert (report.pairs, report.correct) == (500, 499)

    empty = evaluate_feedback(alerts, [], cfg)
    assert empty.accuracy is None and not empty.retrain_recommended and empty.low_sample


def test_stores_resume_from_logs(tmp_path):
    alerts = AlertStore(tmp_path / "alerts.ndjson")
    prediction = _prediction([0.1, 0.1, 0.8])
    alerts.issue(prediction, "medium", "SOP-CONTAIN-02", "v1")
    alerts.issue(prediction, "medium", "SOP-CONTAIN-02", "v1", flow_id="f-2")
    feedback = FeedbackStore(tmp_path / "feedback.ndjson", alerts)
    record_feedback(feedback, FeedbackEntry(2, "BENIGN"))
    with pytest.raises(UnknownAlertError):
        feedback.record(FeedbackEntry(7, "BENIGN"))

    reopened = AlertStore(tmp_path / "alerts.ndjson")
    assert reopened.get(2) == alerts.get(2)
    assert reopened.issue(prediction, "low", "SOP-OBSERVE-01", "v1").alert_id == 3
    reloaded = FeedbackStore(tmp_path / "feedback.ndjson", reopened)
    assert [(e.alert_id, e.actual_label) for e in reloaded.entries()] == [(2, "BENIGN")]
    assert reloaded.record(FeedbackEntry(2, "BENIGN"))[1] is False


def test_format_alert_escapes_html():
    alert = _alerts(1)[1]
    text = format_alert(Alert(**{**alert.__dict__, "flow_id": "<a&b>"}))
    assert text.startswith("<b>Алерт #1</b>: FTP-Patator")
    assert "&lt;a&amp;b&gt;" in text


def test_notifier_threshold():
    alert = _alerts(1)[1]
    assert AlertNotifier("high").should_notify(alert)
    medium = Alert(**{**alert.__dict__, "severity": "medium"})
    assert not AlertNotifier("high").should_notify(medium)
    assert AlertNotifier("low").should_notify(medium)
    assert not AlertNotifier("low").should_notify(Alert(**{**alert.__dict__, "severity": "none"}))



def test_base_notifier_delivers_nothing():
    notifier = AlertNotifier("low")
    assert asyncio.run(notifier.notify(_alerts(1)[1])) is None
    asyncio.run(notifier.close())


def test_notifier_from_config():
    assert notifier_from_config(ServeConfig()) is None
    notifier = notifier_from_config(
        ServeConfig(telegram_bot_token="123456:ABCdefGHI", telegram_alert_chat_id="-100200", notify_severity="medium")
    )
    assert isinstance(notifier, TelegramNotifier)
    assert notifier.min_severity == "medium"
    asyncio.run(notifier.close())


def test_serve_validates_and_listens(trained_model, tmp_path):
    with pytest.raises(ConfigError):
        asyncio.run(serve(trained_model, _config(tmp_path, api_key="")))

    async def main():
        service = await serve(trained_model, _config(tmp_path))
        await service.stop()
        return service.runner

    assert asyncio.run(main()) is None
