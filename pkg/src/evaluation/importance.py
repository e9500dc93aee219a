"""Перестановочная важность признаков"""
from typing import List, Tuple

import numpy as np

from src.core.errors import ConfigError
from src.core.logger import setup_logger
from src.detect.model import TrainedModel, argmax_rows, label_indices
from src.detect.preprocess import LEAKY_IDENTIFIERS, transform_frame
from src.evaluation.metrics import confusion_from_indices, f1
from src.flows.schema import LABEL, Dataset


logger = setup_logger(__name__)


def _macro_f1(model: TrainedModel, X: np.ndarray, y: np.ndarray) -> float:
    proba = model.classifier.predict_proba(X)
    predicted = argmax_rows(proba, model.class_order)
    return f1(confusion_from_indices(y, predicted, model.class_order))[1]


def permutation_importance(
    model: TrainedModel,
    data: Dataset,
    repeats: int = 3,
    seed: int = 0,
    max_rows: int = 2000,
) -> List[Tuple[str, float]]:
    """
    Среднее падение macro-F1 при перемешивании каждого признака
    
    Перемешиваются колонки уже преобразованной матрицы. Идентификаторы,
    исключённые политикой предобработки, получают ровно 0.
    
    Args:
        model: Обученная модель
        data: Размеченный набор
        repeats: Число перемешиваний на признак
        seed: Зерно генератора
        max_rows: Размер детерминированной подвыборки
    
    Returns:
        Пары (признак, падение) по невозрастанию, при равенстве по имени
    """
    if repeats < 1:
        raise ConfigError("repeats должен быть не меньше 1", field="repeats")
    rng = np.random.default_rng(seed)
    frame = data.frame
    if len(frame) > max_rows:
        frame = frame.iloc[np.sort(rng.choice(len(frame), size=max_rows, replace=False))]
    
    X = transform_frame(model.params, frame)
    y = label_indices(frame[LABEL], model.class_order)
    baseline = _macro_f1(model, X, y)
    
    drops = np.zeros(len(model.params.slots))
    for j in range(len(model.params.slots)):
        total = 0.0
        for _ in range(repeats):
            shuffled = X.copy()
            shuffled[:, j] = rng.permutation(shuffled[:, j])
            total += baseline - _macro_f1(model, shuffled, y)
        drops[j] = total / repeats
    
    ranking = [(slot, float(drop)) for slot, drop in zip(model.params.slots, drops)]
    if model.params.exclude_identifiers:
        ranking += [(name, 0.0) for name in sorted(LEAKY_IDENTIFIERS)]
    ranking.sort(key=lambda item: (-item[1], item[0]))
    logger.info(f"Важность признаков: baseline macro-F1 {baseline:.6f}, лидер {ranking[0] if ranking else None}")
    return ranking
