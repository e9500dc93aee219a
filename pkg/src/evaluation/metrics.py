"""Многоклассовые метрики: матрица ошибок, F1, ROC AUC, PR AUC, log loss"""
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from src.core.errors import DataFormatError, UndefinedMetricError


LOG_LOSS_EPS = 1e-15


@dataclass
class ConfusionMatrix:
    """Матрица ошибок (истинный × предсказанный класс) с колонкой Dropped"""
    class_order: List[str]
    counts: np.ndarray
    dropped: np.ndarray
    
    @property
    def total(self) -> int:
        return int(self.counts.sum() + self.dropped.sum())
    
    def class_totals(self) -> np.ndarray:
        return self.counts.sum(axis=1) + self.dropped
    
    def to_dict(self) -> Dict[str, Any]:
        return {
            "class_order": list(self.class_order),
            "counts": self.counts.astype(int).tolist(),
            "dropped": self.dropped.astype(int).tolist(),
        }


def _class_index(class_order: Sequence[str], labels: Sequence[str]) -> np.ndarray:
    positions = {name: i for i, name in enumerate(class_order)}
    indices = np.empty(len(labels), dtype=int)
    for i, label in enumerate(labels):
        if label not in positions:
            raise DataFormatError(f"неизвестная метка класса '{label}'", field=str(label))
        indices[i] = positions[label]
    return indices


def confusion_from_indices(
    true_idx: np.ndarray,
    pred_idx: np.ndarray,
    class_order: Sequence[str],
    dropped_idx: Optional[np.ndarray] = None,
) -> ConfusionMatrix:
    n_classes = len(class_order)
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(counts, (np.asarray(true_idx, dtype=int), np.asarray(pred_idx, dtype=int)), 1)
    dropped = np.zeros(n_classes, dtype=np.int64)
    if dropped_idx is not None and len(dropped_idx):
        np.add.at(dropped, np.asarray(dropped_idx, dtype=int), 1)
    return ConfusionMatrix(class_order=list(class_order), counts=counts, dropped=dropped)


def confusion(
    preds: Sequence[Any],
    truths: Sequence[str],
    dropped_truths: Sequence[str] = (),
    class_order: Optional[Sequence[str]] = None,
) -> ConfusionMatrix:
    """
    Матрица ошибок по предсказаниям
    
    Args:
        preds: Результаты предсказания (поле predicted)
        truths: Истинные метки той же длины
        dropped_truths: Истинные метки записей, не дошедших до предсказания
        class_order: Порядок классов (по умолчанию из предсказаний)
    
    Returns:
        Матрица ошибок
    """
    if len(preds) != len(truths):
        raise DataFormatError(f"длины не совпадают: {len(preds)} предсказаний, {len(truths)} меток")
    if class_order is None:
        if preds:
            class_order = list(preds[0].classes)
        else:
            class_order = sorted(set(truths) | set(dropped_truths))
    true_idx = _class_index(class_order, list(truths))
    pred_idx = _class_index(class_order, [p.predicted for p in preds])
    dropped_idx = _class_index(class_order, list(dropped_truths))
    return confusion_from_indices(true_idx, pred_idx, class_order, dropped_idx)


def _safe_divide(numerator: np.ndarray, denominator: np.ndarray) -> np.ndarray:
    numerator = np.asarray(numerator, dtype=float)
    denominator = np.asarray(denominator, dtype=float)
    result = np.zeros_like(numerator)
    mask = denominator != 0
    result[mask] = numerator[mask] / denominator[mask]
    return result


def per_class_f1(cm: ConfusionMatrix) -> np.ndarray:
    """F1 по классам; класс без предсказаний и без записей получает 0"""
    tp = np.diag(cm.counts).astype(float)
    precision = _safe_divide(tp, cm.counts.sum(axis=0))
    recall = _safe_divide(tp, cm.class_totals())
    return _safe_divide(2 * precision * recall, precision + recall)


def f1(cm: ConfusionMatrix) -> Tuple[float, float]:
    """
    Micro и macro F1
    
    Отброшенные записи входят в знаменатель полноты своего класса.
    
    Returns:
        (micro, macro)
    """
    if cm.total == 0:
        raise UndefinedMetricError("F1 не определён для пустой матрицы ошибок")
    tp = float(np.trace(cm.counts))
    fp = float(cm.counts.sum()) - tp
    fn = float(cm.class_totals().sum()) - tp
    micro = 2 * tp / (2 * tp + fp + fn) if tp + fp + fn > 0 else 0.0
    macro = float(per_class_f1(cm).mean())
    return micro, macro


def _score_matrix(scores: Any, n_records: int, class_order: Sequence[str]) -> np.ndarray:
    matrix = np.asarray(scores, dtype=float)
    if matrix.ndim != 2 or matrix.shape != (n_records, len(class_order)):
        raise DataFormatError(
            f"ожидалась матрица скоров {n_records}×{len(class_order)}, получено {matrix.shape}"
        )
    return matrix


def binary_roc_auc(scores: np.ndarray, positive: np.ndarray) -> float:
    """AUC через ранговую статистику Манна-Уитни; равные скоры дают 1/2"""
    n_pos = int(positive.sum())
    n_neg = len(positive) - n_pos
    ranks = pd.Series(scores).rank(method="average").to_numpy()
    return float((ranks[positive].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def roc_auc(scores: Any, truths: Sequence[str], class_order: Sequence[str]) -> float:
    """
    Macro one-vs-rest ROC AUC
    
    Args:
        scores: Матрица вероятностей (записи × классы)
        truths: Истинные метки
        class_order: Порядок классов в колонках scores
    
    Returns:
        Среднее AUC по классам
    """
    matrix = _score_matrix(scores, len(truths), class_order)
    true_idx = _class_index(class_order, list(truths))
    aucs = []
    for c, name in enumerate(class_order):
        positive = true_idx == c
        if positive.all() or not positive.any():
            raise UndefinedMetricError(
                f"ROC AUC не определён для класса '{name}': нет положительных или отрицательных примеров"
            )
        aucs.append(binary_roc_auc(matrix[:, c], positive))
    return float(np.mean(aucs))


def average_precision(scores: np.ndarray, positive: np.ndarray) -> float:
    """Ступенчатая сумма Σ (прирост полноты × точность) по убывающим порогам"""
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    hits = positive[order].astype(float)
    tp = np.cumsum(hits)
    seen = np.arange(1, len(hits) + 1, dtype=float)
    # Последняя позиция каждого уникального порога
    cut = np.r_[np.flatnonzero(np.diff(sorted_scores) != 0), len(hits) - 1]
    precision = tp[cut] / seen[cut]
    recall = tp[cut] / tp[-1]
    steps = np.diff(np.r_[0.0, recall])
    return float(np.sum(steps * precision))


def pr_auc(scores: Any, truths: Sequence[str], class_order: Sequence[str]) -> float:
    """
    Macro one-vs-rest average precision
    
    Args:
        scores: Матрица вероятностей (записи × классы)
        truths: Истинные метки
        class_order: Порядок классов в колонках scores
    
    Returns:
        Среднее AP по классам
    """
    matrix = _score_matrix(scores, len(truths), class_order)
    true_idx = _class_index(class_order, list(truths))
    values = []
    for c, name in enumerate(class_order):
        positive = true_idx == c
        if not positive.any():
            raise UndefinedMetricError(f"PR AUC не определён для класса '{name}': нет положительных примеров")
        values.append(average_precision(matrix[:, c], positive))
    return float(np.mean(values))


def log_loss(scores: Any, truths: Sequence[str], class_order: Sequence[str]) -> float:
    """
    Средний −ln(скор истинного класса) с обрезкой в [1e-15, 1 − 1e-15]
    
    Args:
        scores: Матрица вероятностей (записи × классы)
        truths: Истинные метки
        class_order: Порядок классов в колонках scores
    
    Returns:
        Неотрицательное значение
    """
    if len(truths) == 0:
        raise UndefinedMetricError("log loss не определён для пустого набора")
    matrix = _score_matrix(scores, len(truths), class_order)
    true_idx = _class_index(class_order, list(truths))
    picked = np.clip(matrix[np.arange(len(truths)), true_idx], LOG_LOSS_EPS, 1 - LOG_LOSS_EPS)
    return float(np.mean(-np.log(picked)))
