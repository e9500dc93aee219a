"""
Журналы алертов и обратной связи (NDJSON, одна запись на строку)

alerts.ndjson:   {"alert_id", "received_at", "flow_id", "classes", "scores",
                  "predicted", "severity", "sop_id", "model_version"}
feedback.ndjson: {"alert_id", "actual_label", "recorded_at"}
"""
import json
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Optional, Set, Tuple, Union

from src.core.errors import DataFormatError, UnknownAlertError
from src.core.logger import setup_logger
from src.detect.model import PredictionResult


logger = setup_logger(__name__)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass(frozen=True)
class Alert:
    alert_id: int
    received_at: str
    prediction: PredictionResult
    severity: str
    sop_id: Optional[str]
    model_version: str
    flow_id: Optional[str] = None
    
    def to_dict(self) -> Dict[str, Any]:
        return {
            "alert_id": self.alert_id,
            "received_at": self.received_at,
            "flow_id": self.flow_id,
            "classes": self.prediction.classes,
            "scores": self.prediction.scores,
            "predicted": self.prediction.predicted,
            "severity": self.severity,
            "sop_id": self.sop_id,
            "model_version": self.model_version,
        }
    
    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Alert":
        return cls(
            alert_id=int(data["alert_id"]),
            received_at=str(data["received_at"]),
            prediction=PredictionResult(
                classes=list(data["classes"]),
                scores=[float(s) for s in data["scores"]],
                predicted=str(data["predicted"]),
            ),
            severity=str(data["severity"]),
            sop_id=data.get("sop_id"),
            model_version=str(data["model_version"]),
            flow_id=data.get("flow_id"),
        )


@dataclass(frozen=True)
class FeedbackEntry:
    alert_id: int
    actual_label: str
    recorded_at: str = ""
    
    def to_dict(self) -> Dict[str, Any]:
        return {"alert_id": self.alert_id, "actual_label": self.actual_label, "recorded_at": self.recorded_at}


def _read_ndjson(path: Path) -> List[Dict[str, Any]]:
    if not path.exists():
        return []
    records = []
    try:
        with open(path, "r", encoding="utf-8") as handle:
            for number, line in enumerate(handle, start=1):
                if not line.strip():
                    continue
                try:
                    records.append(json.loads(line))
                except json.JSONDecodeError as e:
                    raise DataFormatError(f"{path}: строка {number} не JSON: {e}", row=number) from e
    except OSError as e:
        raise OSError(f"не удалось прочитать журнал {path}: {e}") from e
    return records


def _append_ndjson(path: Path, record: Dict[str, Any]) -> None:
    try:
        with open(path, "a", encoding="utf-8") as handle:
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")
    except OSError as e:
        raise OSError(f"не удалось записать журнал {path}: {e}") from e


class AlertStore:
    """Журнал алертов с монотонными идентификаторами; запись через один замок"""
    
    def __init__(self, path: Union[str, Path]):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._alerts: Dict[int, Alert] = {}
        for data in _read_ndjson(self.path):
            alert = Alert.from_dict(data)
            self._alerts[alert.alert_id] = alert
        self._last_id = max(self._alerts, default=0)
        if self._alerts:
            logger.info(f"Журнал алертов {self.path}: {len(self._alerts)} записей, последний id {self._last_id}")
    
    def issue(
        self,
        prediction: PredictionResult,
        severity: str,
        sop_id: Optional[str],
        model_version: str,
        flow_id: Optional[str] = None,
    ) -> Alert:
        """Присваивает следующий id и дописывает алерт в журнал"""
        with self._lock:
            alert = Alert(
                alert_id=self._last_id + 1,
                received_at=_now(),
                prediction=prediction,
                severity=severity,
                sop_id=sop_id,
                model_version=model_version,
                flow_id=flow_id,
            )
            _append_ndjson(self.path, alert.to_dict())
            self._last_id = alert.alert_id
            self._alerts[alert.alert_id] = alert
        return alert
    
    def get(self, alert_id: int) -> Optional[Alert]:
        return self._alerts.get(alert_id)
    
    def __contains__(self, alert_id: int) -> bool:
        return alert_id in self._alerts
    
    def __len__(self) -> int:
        return len(self._alerts)
    
    def snapshot(self) -> Dict[int, Alert]:
        with self._lock:
            return dict(self._alerts)


class FeedbackStore:
    """Журнал подтверждённых меток; повтор той же пары не дописывается"""
    
    def __init__(self, path: Union[str, Path], alerts: AlertStore):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self.alerts = alerts
        self._lock = threading.Lock()
        self._entries: List[FeedbackEntry] = [
            FeedbackEntry(int(d["alert_id"]), str(d["actual_label"]), str(d.get("recorded_at", "")))
            for d in _read_ndjson(self.path)
        ]
        self._seen: Set[Tuple[int, str]] = {(e.alert_id, e.actual_label) for e in self._entries}
    
    def record(self, entry: FeedbackEntry) -> Tuple[FeedbackEntry, bool]:
        """
        Дописывает обратную связь
        
        Returns:
            (запись, True если строка добавлена; False для повтора)
        """
        if entry.alert_id not in self.alerts:
            raise UnknownAlertError(f"алерт {entry.alert_id} не выдавался")
        with self._lock:
            key = (entry.alert_id, entry.actual_label)
            if key in self._seen:
                existing = next(e for e in self._entries if (e.alert_id, e.actual_label) == key)
                return existing, False
            stored = FeedbackEntry(entry.alert_id, entry.actual_label, entry.recorded_at or _now())
            _append_ndjson(self.path, stored.to_dict())
            self._entries.append(stored)
            self._seen.add(key)
        logger.info(f"Обратная связь: алерт {stored.alert_id} -> {stored.actual_label}")
        return stored, True
    
    def entries(self) -> List[FeedbackEntry]:
        with self._lock:
            return list(self._entries)
    
    def __len__(self) -> int:
        return len(self._entries)


def record_feedback(store: FeedbackStore, entry: FeedbackEntry) -> FeedbackStore:
    """
    Добавляет запись обратной связи ровно один раз
    
    Args:
        store: Журнал обратной связи
        entry: Ссылка на выданный алерт и подтверждённая метка
    
    Returns:
        Тот же журнал
    """
    store.record(entry)
    return store
