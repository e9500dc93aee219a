"""Схема потоков CICIDS2017: записи и наборы данных"""
import math
import re
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, Iterator, List, Optional, Sequence

import numpy as np
import pandas as pd

from src.core.errors import DataFormatError


FLOW_ID = "Flow ID"
SOURCE_IP = "Source IP"
SOURCE_PORT = "Source Port"
DESTINATION_IP = "Destination IP"
DESTINATION_PORT = "Destination Port"
PROTOCOL = "Protocol"
TIMESTAMP = "Timestamp"
LABEL = "Label"

IDENTIFIER_COLUMNS = [FLOW_ID, SOURCE_IP, SOURCE_PORT, DESTINATION_IP, DESTINATION_PORT, PROTOCOL, TIMESTAMP]
TEXT_COLUMNS = [FLOW_ID, SOURCE_IP, DESTINATION_IP, TIMESTAMP]
PORT_COLUMNS = [SOURCE_PORT, DESTINATION_PORT, PROTOCOL]

# Нормализованное имя заголовка -> каноническая колонка
HEADER_ALIASES = {
    "flow_id": FLOW_ID,
    "source_ip": SOURCE_IP,
    "src_ip": SOURCE_IP,
    "source_port": SOURCE_PORT,
    "src_port": SOURCE_PORT,
    "destination_ip": DESTINATION_IP,
    "dst_ip": DESTINATION_IP,
    "destination_port": DESTINATION_PORT,
    "dst_port": DESTINATION_PORT,
    "protocol": PROTOCOL,
    "timestamp": TIMESTAMP,
    "label": LABEL,
}

# Числовые признаки CICIDS2017 (без идентификаторов и дубля Fwd Header Length)
CICIDS2017_FEATURES = [
    "Flow Duration", "Total Fwd Packets", "Total Backward Packets",
    "Total Length of Fwd Packets", "Total Length of Bwd Packets",
    "Fwd Packet Length Max", "Fwd Packet Length Min", "Fwd Packet Length Mean", "Fwd Packet Length Std",
    "Bwd Packet Length Max", "Bwd Packet Length Min", "Bwd Packet Length Mean", "Bwd Packet Length Std",
    "Flow Bytes/s", "Flow Packets/s",
    "Flow IAT Mean", "Flow IAT Std", "Flow IAT Max", "Flow IAT Min",
    "Fwd IAT Total", "Fwd IAT Mean", "Fwd IAT Std", "Fwd IAT Max", "Fwd IAT Min",
    "Bwd IAT Total", "Bwd IAT Mean", "Bwd IAT Std", "Bwd IAT Max", "Bwd IAT Min",
    "Fwd PSH Flags", "Bwd PSH Flags", "Fwd URG Flags", "Bwd URG Flags",
    "Fwd Header Length", "Bwd Header Length", "Fwd Packets/s", "Bwd Packets/s",
    "Min Packet Length", "Max Packet Length", "Packet Length Mean", "Packet Length Std",
    "Packet Length Variance",
    "FIN Flag Count", "SYN Flag Count", "RST Flag Count", "PSH Flag Count",
    "ACK Flag Count", "URG Flag Count", "CWE Flag Count", "ECE Flag Count",
    "Down/Up Ratio", "Average Packet Size", "Avg Fwd Segment Size", "Avg Bwd Segment Size",
    "Fwd Avg Bytes/Bulk", "Fwd Avg Packets/Bulk", "Fwd Avg Bulk Rate",
    "Bwd Avg Bytes/Bulk", "Bwd Avg Packets/Bulk", "Bwd Avg Bulk Rate",
    "Subflow Fwd Packets", "Subflow Fwd Bytes", "Subflow Bwd Packets", "Subflow Bwd Bytes",
    "Init_Win_bytes_forward", "Init_Win_bytes_backward", "act_data_pkt_fwd", "min_seg_size_forward",
    "Active Mean", "Active Std", "Active Max", "Active Min",
    "Idle Mean", "Idle Std", "Idle Max", "Idle Min",
]

_POS_INF = {"inf", "+inf", "infinity", "+infinity"}
_NEG_INF = {"-inf", "-infinity"}
_MISSING = {"", "nan", "na", "null", "none"}


def normalize_feature_name(name: str) -> str:
    """
    Приводит имя колонки к сравнимому виду
    
    "Flow Packets/s" и "Flow_Packets" дают одно и то же имя.
    """
    lowered = name.strip().lower()
    lowered = re.sub(r"/s$", "", lowered)
    return re.sub(r"[\s_/\-.]+", "_", lowered).strip("_")


def parse_numeric_token(token: Any, field_name: str, row: Optional[int] = None) -> float:
    """
    Разбирает числовое значение; Infinity/NaN сохраняются как нефинитные
    
    Args:
        token: Значение из CSV или JSON
        field_name: Имя колонки (для ошибки)
        row: Номер строки файла (для ошибки)
    
    Returns:
        Значение float, возможно inf или nan
    """
    if token is None:
        return math.nan
    if isinstance(token, bool):
        raise DataFormatError(f"поле '{field_name}': логическое значение вместо числа", field=field_name, row=row)
    if isinstance(token, (int, float)):
        return float(token)
    text = str(token).strip().lower()
    if text in _MISSING:
        return math.nan
    if text in _POS_INF:
        return math.inf
    if text in _NEG_INF:
        return -math.inf
    try:
        return float(text)
    except ValueError:
        where = f" (строка {row})" if row is not None else ""
        raise DataFormatError(
            f"поле '{field_name}'{where}: не число '{token}'", field=field_name, row=row
        ) from None


def numeric_series(tokens: pd.Series) -> pd.Series:
    """Векторный аналог parse_numeric_token; нераспознанные значения дают NaN в маске bad"""
    text = tokens.astype(str).str.strip().str.lower()
    values = pd.to_numeric(text, errors="coerce")
    values = values.mask(text.isin(_POS_INF), np.inf).mask(text.isin(_NEG_INF), -np.inf)
    return values.astype(float)


def bad_numeric_mask(tokens: pd.Series, values: pd.Series) -> pd.Series:
    text = tokens.astype(str).str.strip().str.lower()
    return values.isna() & ~text.isin(_MISSING)


def _optional_int(value: float) -> Optional[int]:
    return int(value) if math.isfinite(value) else None


@dataclass(frozen=True)
class FlowRecord:
    """Один поток CICIDS2017"""
    source_ip: str
    destination_ip: str
    timestamp: str
    numeric_features: Dict[str, float]
    flow_id: Optional[str] = None
    source_port: Optional[int] = None
    destination_port: Optional[int] = None
    protocol: Optional[int] = None
    label: Optional[str] = None
    
    def to_row(self) -> Dict[str, Any]:
        row: Dict[str, Any] = {
            FLOW_ID: self.flow_id,
            SOURCE_IP: self.source_ip,
            SOURCE_PORT: math.nan if self.source_port is None else float(self.source_port),
            DESTINATION_IP: self.destination_ip,
            DESTINATION_PORT: math.nan if self.destination_port is None else float(self.destination_port),
            PROTOCOL: math.nan if self.protocol is None else float(self.protocol),
            TIMESTAMP: self.timestamp,
        }
        row.update(self.numeric_features)
        row[LABEL] = self.label
        return row


@dataclass(frozen=True)
class RejectedRow:
    """Строка, не прошедшая разбор (для колонки Dropped)"""
    line: int
    label: Optional[str]
    reason: str


def _empty_label(value: Any) -> Optional[str]:
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return None
    text = str(value).strip()
    return text or None


@dataclass
class Dataset:
    """Неизменяемый набор потоков поверх DataFrame с каноническими колонками"""
    frame: pd.DataFrame
    feature_names: List[str]
    class_names: List[str]
    source: str
    rejected: List[RejectedRow] = field(default_factory=list)
    
    @classmethod
    def from_frame(
        cls,
        frame: pd.DataFrame,
        feature_names: Sequence[str],
        source: str,
        rejected: Iterable[RejectedRow] = (),
    ) -> "Dataset":
        frame = frame.reset_index(drop=True)
        labels = frame[LABEL].map(_empty_label) if LABEL in frame.columns else pd.Series([None] * len(frame))
        frame = frame.assign(**{LABEL: labels.astype(object)})
        class_names = sorted({label for label in labels if label is not None})
        return cls(
            frame=frame,
            feature_names=list(feature_names),
            class_names=class_names,
            source=source,
            rejected=list(rejected),
        )
    
    @classmethod
    def from_records(cls, records: Sequence[FlowRecord], source: str = "records") -> "Dataset":
        if not records:
            return cls.from_frame(empty_frame([]), [], source)
        feature_names = list(records[0].numeric_features)
        for i, record in enumerate(records):
            if list(record.numeric_features) != feature_names:
                raise DataFormatError(f"запись {i}: набор числовых признаков отличается от первой записи")
        frame = pd.DataFrame([record.to_row() for record in records], columns=canonical_columns(feature_names))
        return cls.from_frame(frame, feature_names, source)
    
    def __len__(self) -> int:
        return len(self.frame)
    
    @property
    def labels(self) -> List[Optional[str]]:
        return list(self.frame[LABEL])
    
    @property
    def labeled(self) -> bool:
        return len(self.frame) > 0 and self.frame[LABEL].notna().all()
    
    def class_counts(self) -> Dict[str, int]:
        counts = self.frame[LABEL].value_counts()
        return {name: int(counts.get(name, 0)) for name in self.class_names}
    
    def subset(self, indices: Sequence[int], source: Optional[str] = None) -> "Dataset":
        return Dataset.from_frame(
            self.frame.iloc[list(indices)],
            self.feature_names,
            source or self.source,
        )
    
    def record(self, index: int) -> FlowRecord:
        return _row_to_record(self.frame.iloc[index], self.feature_names)
    
    def records(self) -> Iterator[FlowRecord]:
        for _, row in self.frame.iterrows():
            yield _row_to_record(row, self.feature_names)


def canonical_columns(feature_names: Sequence[str]) -> List[str]:
    return IDENTIFIER_COLUMNS + list(feature_names) + [LABEL]


def empty_frame(feature_names: Sequence[str]) -> pd.DataFrame:
    return pd.DataFrame({column: pd.Series(dtype=object) for column in canonical_columns(feature_names)})


def _row_to_record(row: pd.Series, feature_names: Sequence[str]) -> FlowRecord:
    flow_id = row[FLOW_ID]
    return FlowRecord(
        flow_id=None if flow_id is None or (isinstance(flow_id, float) and math.isnan(flow_id)) else str(flow_id),
        source_ip=str(row[SOURCE_IP]),
        destination_ip=str(row[DESTINATION_IP]),
        timestamp=str(row[TIMESTAMP]),
        source_port=_optional_int(float(row[SOURCE_PORT])),
        destination_port=_optional_int(float(row[DESTINATION_PORT])),
        protocol=_optional_int(float(row[PROTOCOL])),
        numeric_features={name: float(row[name]) for name in feature_names},
        label=_empty_label(row[LABEL]),
    )


def resolve_feature(feature_names: Sequence[str], name: str) -> str:
    """
    Находит колонку по имени в любом написании (Flow_Packets -> Flow Packets/s)
    
    Args:
        feature_names: Имена признаков набора
        name: Искомое имя
    
    Returns:
        Имя колонки в наборе
    """
    wanted = normalize_feature_name(name)
    for candidate in list(feature_names) + IDENTIFIER_COLUMNS:
        if normalize_feature_name(candidate) == wanted:
            return candidate
    raise DataFormatError(f"признак '{name}' не найден", field=name)
