"""Категоризация алертов по важности и выбор SOP"""
from typing import Optional, Tuple

from src.core.config import SEVERITY_LEVELS, ServeConfig
from src.detect.model import PredictionResult


def categorize(pred: PredictionResult, cfg: ServeConfig) -> Tuple[str, Optional[str]]:
    """
    Важность алерта по максимальному скору предсказанного атакующего класса
    
    Args:
        pred: Нормированное предсказание
        cfg: Конфигурация с порогами и таблицей SOP
    
    Returns:
        (важность, идентификатор SOP или None)
    """
    if pred.predicted == cfg.benign_label:
        return "none", None
    top = pred.score_of(pred.predicted)
    if top >= cfg.severity_high:
        severity = "high"
    elif top >= cfg.severity_medium:
        severity = "medium"
    else:
        severity = "low"
    return severity, cfg.sop_table[severity]


def severity_rank(severity: str) -> int:
    return SEVERITY_LEVELS.index(severity)
