"""Предобработка потоков: импутация, нормализация, кодирование категорий"""
from dataclasses import dataclass, field
from typing import Any, Dict, List

import numpy as np
import pandas as pd

from src.core.errors import DataFormatError, SchemaMismatchError
from src.core.logger import setup_logger
from src.flows.schema import (
    DESTINATION_IP,
    DESTINATION_PORT,
    PROTOCOL,
    SOURCE_IP,
    SOURCE_PORT,
    TIMESTAMP,
    Dataset,
    FlowRecord,
    normalize_feature_name,
)


logger = setup_logger(__name__)

# Категориальные идентификаторы кодируются частотой в обучающей выборке
CATEGORICAL_COLUMNS = [SOURCE_IP, DESTINATION_IP]
# При политике exclude эти колонки не попадают в вектор признаков
LEAKY_IDENTIFIERS = {SOURCE_IP, DESTINATION_IP, TIMESTAMP, SOURCE_PORT}

_TIME_PATTERN = r"(\d{1,2}):(\d{2})(?::(\d{2}))?"


@dataclass(frozen=True)
class NumericStats:
    median: float
    mean: float
    std: float


@dataclass(frozen=True)
class PreprocessParams:
    """
    Параметры предобработки, полученные только на обучающей части
    
    slots задаёт порядок компонент вектора признаков.
    """
    slots: List[str]
    numeric: Dict[str, NumericStats]
    frequencies: Dict[str, Dict[str, float]]
    feature_names: List[str]
    exclude_identifiers: bool = False
    timestamp_rule: str = "seconds_of_day"
    
    def to_dict(self) -> Dict[str, Any]:
        return {
            "slots": list(self.slots),
            "numeric": {
                name: [stats.median, stats.mean, stats.std] for name, stats in self.numeric.items()
            },
            "frequencies": {name: dict(table) for name, table in self.frequencies.items()},
            "feature_names": list(self.feature_names),
            "exclude_identifiers": self.exclude_identifiers,
            "timestamp_rule": self.timestamp_rule,
        }
    
    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PreprocessParams":
        return cls(
            slots=list(data["slots"]),
            numeric={
                name: NumericStats(float(v[0]), float(v[1]), float(v[2]))
                for name, v in data["numeric"].items()
            },
            frequencies={
                name: {str(k): float(v) for k, v in table.items()}
                for name, table in data["frequencies"].items()
            },
            feature_names=list(data["feature_names"]),
            exclude_identifiers=bool(data["exclude_identifiers"]),
            timestamp_rule=str(data.get("timestamp_rule", "seconds_of_day")),
        )


def timestamp_seconds(values: pd.Series) -> pd.Series:
    """
    Переводит текстовые метки времени в секунды от начала суток
    
    Понимает "4/7/2017 9:20:01", "2017-07-04 09:20" и суффикс AM/PM;
    нераспознанные значения дают NaN.
    """
    text = values.fillna("").astype(str)
    parts = text.str.extract(_TIME_PATTERN)
    hours = pd.to_numeric(parts[0], errors="coerce")
    minutes = pd.to_numeric(parts[1], errors="coerce")
    seconds = pd.to_numeric(parts[2], errors="coerce").fillna(0.0)
    is_pm = text.str.upper().str.contains(r"\bPM\b", regex=True)
    is_am = text.str.upper().str.contains(r"\bAM\b", regex=True)
    hours = hours.where(~(is_pm & (hours < 12)), hours + 12)
    hours = hours.where(~(is_am & (hours == 12)), 0)
    return (hours * 3600 + minutes * 60 + seconds).astype(float)


def identifier_slots(exclude_identifiers: bool) -> List[str]:
    slots = [SOURCE_PORT, DESTINATION_PORT, PROTOCOL, SOURCE_IP, DESTINATION_IP, TIMESTAMP]
    if exclude_identifiers:
        slots = [slot for slot in slots if slot not in LEAKY_IDENTIFIERS]
    return slots


def _column_lookup(frame: pd.DataFrame) -> Dict[str, str]:
    lookup: Dict[str, str] = {}
    for column in frame.columns:
        lookup.setdefault(normalize_feature_name(str(column)), column)
    return lookup


def _raw_slot(frame: pd.DataFrame, lookup: Dict[str, str], slot: str) -> pd.Series:
    column = lookup.get(normalize_feature_name(slot))
    if column is None:
        raise SchemaMismatchError(f"в записи нет признака '{slot}'", field=slot)
    return frame[column]


def _numeric_values(raw: pd.Series, slot: str) -> np.ndarray:
    if slot == TIMESTAMP:
        return timestamp_seconds(raw).to_numpy(dtype=float)
    return pd.to_numeric(raw, errors="coerce").to_numpy(dtype=float)


def preprocess_fit(train: Dataset, exclude_identifiers: bool = False) -> PreprocessParams:
    """
    Считает параметры предобработки по обучающему набору
    
    Args:
        train: Непустой размеченный набор
        exclude_identifiers: Исключить IP, временную метку и порт источника
    
    Returns:
        Параметры предобработки
    """
    if len(train) == 0:
        raise DataFormatError("нельзя обучить предобработку на пустом наборе")
    if not train.labeled:
        raise DataFormatError("в обучающем наборе есть записи без метки", field="Label")
    
    frame = train.frame
    lookup = _column_lookup(frame)
    slots = list(train.feature_names) + identifier_slots(exclude_identifiers)
    numeric: Dict[str, NumericStats] = {}
    frequencies: Dict[str, Dict[str, float]] = {}
    
    for slot in slots:
        raw = _raw_slot(frame, lookup, slot)
        if slot in CATEGORICAL_COLUMNS:
            counts = raw.fillna("").astype(str).str.strip().value_counts(normalize=True, sort=False)
            frequencies[slot] = {str(k): float(v) for k, v in sorted(counts.items())}
            continue
        values = _numeric_values(raw, slot)
        finite = values[np.isfinite(values)]
        if finite.size == 0:
            raise DataFormatError(f"признак '{slot}' не содержит ни одного конечного значения", field=slot)
        median = float(np.median(finite))
        imputed = np.where(np.isfinite(values), values, median)
        if np.ptp(imputed) == 0:
            numeric[slot] = NumericStats(median=median, mean=float(imputed[0]), std=0.0)
        else:
            numeric[slot] = NumericStats(median=median, mean=float(imputed.mean()), std=float(imputed.std()))
    
    params = PreprocessParams(
        slots=slots,
        numeric=numeric,
        frequencies=frequencies,
        feature_names=list(train.feature_names),
        exclude_identifiers=exclude_identifiers,
    )
    logger.debug(f"Предобработка: {len(slots)} компонент, exclude_identifiers={exclude_identifiers}")
    return params


def transform_frame(params: PreprocessParams, frame: pd.DataFrame) -> np.ndarray:
    """
    Векторное применение предобработки к кадру потоков
    
    Args:
        params: Параметры предобработки
        frame: Кадр с колонками схемы (имена сравниваются нормализованно)
    
    Returns:
        Матрица признаков (строки кадра × компоненты params.slots)
    """
    lookup = _column_lookup(frame)
    matrix = np.zeros((len(frame), len(params.slots)), dtype=float)
    for j, slot in enumerate(params.slots):
        raw = _raw_slot(frame, lookup, slot)
        if slot in params.frequencies:
            table = params.frequencies[slot]
            keys = raw.fillna("").astype(str).str.strip()
            matrix[:, j] = keys.map(table).fillna(0.0).to_numpy(dtype=float)
            continue
        stats = params.numeric[slot]
        values = _numeric_values(raw, slot)
        values = np.where(np.isfinite(values), values, stats.median)
        if stats.std > 0:
            matrix[:, j] = (values - stats.mean) / stats.std
    return matrix


def preprocess_apply(params: PreprocessParams, record: FlowRecord) -> np.ndarray:
    """
    Вектор признаков одной записи
    
    Args:
        params: Параметры предобработки
        record: Запись потока
    
    Returns:
        Одномерный вектор в порядке params.slots
    """
    frame = pd.DataFrame([record.to_row()])
    return transform_frame(params, frame)[0]
