"""Обучение с автоматическим выбором классификатора и предсказание"""
import hashlib
import json
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
import pandas as pd

from src.core.config import TrainConfig
from src.core.errors import DataFormatError
from src.core.logger import setup_logger
from src.detect.classifiers import CLASSIFIERS, DecisionTree, GaussianNaiveBayes, KNearestNeighbors
from src.detect.preprocess import PreprocessParams, preprocess_apply, preprocess_fit, transform_frame
from src.evaluation.metrics import confusion_from_indices, f1
from src.flows.schema import LABEL, Dataset, FlowRecord
from src.flows.split import split


logger = setup_logger(__name__)

Classifier = Union[DecisionTree, GaussianNaiveBayes, KNearestNeighbors]

# Порядок кандидатов задаёт приоритет при равном macro-F1
CANDIDATE_ORDER = [DecisionTree.name, GaussianNaiveBayes.name, KNearestNeighbors.name]


@dataclass(frozen=True)
class PredictionResult:
    """Вероятности классов и итоговый класс"""
    classes: List[str]
    scores: List[float]
    predicted: str
    
    @classmethod
    def from_scores(cls, classes: Sequence[str], scores: np.ndarray) -> "PredictionResult":
        scores = np.asarray(scores, dtype=float)
        scores = scores / scores.sum()
        top = scores.max()
        # При равенстве побеждает лексикографически меньший класс
        predicted = min(name for name, score in zip(classes, scores) if score == top)
        return cls(classes=list(classes), scores=scores.tolist(), predicted=predicted)
    
    def score_of(self, name: str) -> float:
        return self.scores[self.classes.index(name)]
    
    def to_dict(self) -> Dict[str, Any]:
        return {"classes": self.classes, "scores": self.scores, "predicted": self.predicted}


@dataclass(frozen=True)
class CandidateScore:
    name: str
    macro_f1: float


@dataclass
class TrainedModel:
    """Обученная модель: предобработка, выбранный классификатор и отчёт выбора"""
    params: PreprocessParams
    classifier_name: str
    classifier: Classifier
    class_order: List[str]
    selection_report: List[CandidateScore]
    train_seed: int
    version: str = ""
    
    def content(self) -> Dict[str, Any]:
        return {
            "params": self.params.to_dict(),
            "classifier": {"name": self.classifier_name, "state": self.classifier.to_state()},
            "class_order": list(self.class_order),
            "selection_report": [[c.name, c.macro_f1] for c in self.selection_report],
            "train_seed": self.train_seed,
        }
    
    def content_hash(self) -> str:
        canonical = json.dumps(self.content(), sort_keys=True, separators=(",", ":"), allow_nan=False)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
    
    @classmethod
    def from_content(cls, content: Dict[str, Any]) -> "TrainedModel":
        name = content["classifier"]["name"]
        if name not in CLASSIFIERS:
            raise DataFormatError(f"неизвестный классификатор '{name}'", field="classifier")
        model = cls(
            params=PreprocessParams.from_dict(content["params"]),
            classifier_name=name,
            classifier=CLASSIFIERS[name].from_state(content["classifier"]["state"]),
            class_order=list(content["class_order"]),
            selection_report=[CandidateScore(str(n), float(s)) for n, s in content["selection_report"]],
            train_seed=int(content["train_seed"]),
        )
        model.version = model.content_hash()
        return model
    
    @property
    def selected_score(self) -> float:
        return next(c.macro_f1 for c in self.selection_report if c.name == self.classifier_name)


def _build_candidate(name: str, config: TrainConfig) -> Classifier:
    if name == DecisionTree.name:
        return DecisionTree(max_depth=config.max_depth, min_leaf=config.min_leaf)
    if name == GaussianNaiveBayes.name:
        return GaussianNaiveBayes(variance_floor=config.variance_floor)
    return KNearestNeighbors(k=config.knn_k)


def label_indices(labels: pd.Series, class_order: Sequence[str]) -> np.ndarray:
    """Индексы меток в class_order; неизвестная метка даёт ошибку"""
    positions = {name: i for i, name in enumerate(class_order)}
    unknown = sorted({str(v) for v in labels if v not in positions})
    if unknown:
        raise DataFormatError(f"метка '{unknown[0]}' не входит в классы модели {list(class_order)}", field=LABEL)
    return labels.map(positions).to_numpy(dtype=int)


def _check_trainable(dataset: Dataset, config: TrainConfig) -> None:
    if len(dataset) == 0:
        raise DataFormatError("обучающий набор пуст")
    if not dataset.labeled:
        raise DataFormatError("в обучающем наборе есть записи без метки", field=LABEL)
    if len(dataset.class_names) < 2:
        raise DataFormatError(
            f"нужно минимум два класса, найден только {dataset.class_names}: нет границы решения",
            field=LABEL,
        )
    for name, count in dataset.class_counts().items():
        if count < config.min_class_count:
            raise DataFormatError(
                f"в классе '{name}' {count} записей, нужно не меньше {config.min_class_count}",
                field=name,
            )


def train(dataset: Dataset, config: Optional[TrainConfig] = None, seed: int = 0) -> TrainedModel:
    """
    Обучает три классификатора и выбирает лучший по macro-F1 на валидации
    
    Предобработка обучается на обучающей части внутреннего
    стратифицированного разбиения, валидационная часть служит только
    для выбора.
    
    Args:
        dataset: Размеченный набор
        config: Параметры обучения
        seed: Зерно разбиения
    
    Returns:
        Обученная модель
    """
    config = config or TrainConfig()
    config.validate()
    _check_trainable(dataset, config)
    
    class_order = list(dataset.class_names)
    fit_part, validation = split(dataset, config.validation_fraction, seed, stratified=True)
    params = preprocess_fit(fit_part, exclude_identifiers=config.exclude_identifiers)
    
    X_fit = transform_frame(params, fit_part.frame)
    y_fit = label_indices(fit_part.frame[LABEL], class_order)
    X_val = transform_frame(params, validation.frame)
    y_val = label_indices(validation.frame[LABEL], class_order)
    
    report: List[CandidateScore] = []
    fitted: Dict[str, Classifier] = {}
    for name in CANDIDATE_ORDER:
        classifier = _build_candidate(name, config).fit(X_fit, y_fit, len(class_order))
        proba = classifier.predict_proba(X_val)
        predicted = argmax_rows(proba, class_order)
        _, macro = f1(confusion_from_indices(y_val, predicted, class_order))
        report.append(CandidateScore(name=name, macro_f1=macro))
        fitted[name] = classifier
        logger.info(f"Кандидат {name}: macro-F1 на валидации {macro:.6f}")
    
    best = report[0]
    for candidate in report[1:]:
        if candidate.macro_f1 > best.macro_f1:
            best = candidate
    
    model = TrainedModel(
        params=params,
        classifier_name=best.name,
        classifier=fitted[best.name],
        class_order=class_order,
        selection_report=report,
        train_seed=seed,
    )
    model.version = model.content_hash()
    logger.info(
        f"Выбран {best.name} (macro-F1 {best.macro_f1:.6f}), "
        f"классы {class_order}, версия {model.version[:12]}"
    )
    return model


def argmax_rows(proba: np.ndarray, class_order: Sequence[str]) -> np.ndarray:
    """Индекс максимума в каждой строке; при равенстве лексикографически меньший класс"""
    lexical = np.array(sorted(range(len(class_order)), key=lambda i: class_order[i]), dtype=int)
    if len(proba) == 0:
        return np.zeros(0, dtype=int)
    return lexical[np.argmax(proba[:, lexical], axis=1)]


def predict_frame(model: TrainedModel, frame: pd.DataFrame) -> np.ndarray:
    """
    Матрица вероятностей для кадра потоков
    
    Args:
        model: Обученная модель
        frame: Кадр с колонками схемы
    
    Returns:
        Матрица (строки × model.class_order), строки нормированы
    """
    X = transform_frame(model.params, frame)
    if len(X) == 0:
        return np.zeros((0, len(model.class_order)))
    proba = model.classifier.predict_proba(X)
    return proba / proba.sum(axis=1, keepdims=True)


def predicted_labels(model: TrainedModel, proba: np.ndarray) -> List[str]:
    return [model.class_order[i] for i in argmax_rows(proba, model.class_order)]


def predict(model: TrainedModel, record: FlowRecord) -> PredictionResult:
    """
    Предсказание для одной записи
    
    Args:
        model: Обученная модель
        record: Запись потока
    
    Returns:
        Результат с вероятностями по model.class_order
    """
    vector = preprocess_apply(model.params, record)
    proba = model.classifier.predict_proba(vector[None, :])[0]
    return PredictionResult.from_scores(model.class_order, proba)
