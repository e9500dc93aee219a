"""Оценка точности по обратной связи и рекомендация переобучения"""
from dataclasses import dataclass
from typing import Any, Dict, Mapping, Optional, Sequence

from src.alertserve.store import Alert, FeedbackEntry
from src.core.config import ServeConfig
from src.core.logger import setup_logger


logger = setup_logger(__name__)


@dataclass(frozen=True)
class DriftReport:
    window: int
    pairs: int
    correct: int
    accuracy: Optional[float]
    low_sample: bool
    retrain_recommended: bool
    accuracy_floor: float
    
    def to_dict(self) -> Dict[str, Any]:
        return {
            "window": self.window,
            "pairs": self.pairs,
            "correct": self.correct,
            "accuracy": self.accuracy,
            "low_sample": self.low_sample,
            "retrain_recommended": self.retrain_recommended,
            "accuracy_floor": self.accuracy_floor,
        }


def evaluate_feedback(
    alerts: Mapping[int, Alert],
    feedback: Sequence[FeedbackEntry],
    cfg: ServeConfig,
) -> DriftReport:
    """
    Точность модели на последних подтверждённых алертах
    
    Для алерта берётся последняя по времени обратная связь; в окно попадают
    cfg.feedback_window самых свежих пар.
    
    Args:
        alerts: Алерты по идентификатору
        feedback: Записи обратной связи в порядке поступления
        cfg: Окно и нижняя граница точности
    
    Returns:
        Отчёт о дрейфе
    """
    latest: Dict[int, FeedbackEntry] = {}
    for entry in feedback:
        if entry.alert_id in alerts:
            # Повторная метка переносит пару в конец очереди
            latest.pop(entry.alert_id, None)
            latest[entry.alert_id] = entry
    
    window = list(latest.values())[-cfg.feedback_window:]
    correct = sum(1 for e in window if alerts[e.alert_id].prediction.predicted == e.actual_label)
    accuracy = correct / len(window) if window else None
    report = DriftReport(
        window=cfg.feedback_window,
        pairs=len(window),
        correct=correct,
        accuracy=accuracy,
        low_sample=len(window) < cfg.feedback_window,
        retrain_recommended=accuracy is not None and accuracy < cfg.accuracy_floor,
        accuracy_floor=cfg.accuracy_floor,
    )
    logger.info(
        f"Дрейф: {report.pairs} пар, точность {accuracy}, "
        f"переобучение {'рекомендовано' if report.retrain_recommended else 'не требуется'}"
    )
    return report
