"""Чтение и запись CSV потоков CICIDS2017"""
import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterator, List, Mapping, Optional, Tuple, Union

import numpy as np
import pandas as pd

from src.core.errors import DataFormatError
from src.core.logger import setup_logger
from src.flows.schema import (
    DESTINATION_IP,
    FLOW_ID,
    HEADER_ALIASES,
    LABEL,
    PORT_COLUMNS,
    SOURCE_IP,
    TEXT_COLUMNS,
    TIMESTAMP,
    Dataset,
    FlowRecord,
    RejectedRow,
    bad_numeric_mask,
    canonical_columns,
    empty_frame,
    normalize_feature_name,
    numeric_series,
    parse_numeric_token,
)


logger = setup_logger(__name__)

PathLike = Union[str, Path]


@dataclass(frozen=True)
class ColumnLayout:
    """Соответствие позиций колонок файла канонической схеме"""
    identifiers: Dict[str, int]
    label: Optional[int]
    features: List[Tuple[str, int]]
    
    @property
    def feature_names(self) -> List[str]:
        return [name for name, _ in self.features]


def _layout(header: List[str]) -> ColumnLayout:
    identifiers: Dict[str, int] = {}
    label: Optional[int] = None
    features: List[Tuple[str, int]] = []
    seen: Dict[str, int] = {}
    
    for position, raw_name in enumerate(header):
        name = str(raw_name).strip()
        canonical = HEADER_ALIASES.get(normalize_feature_name(name))
        if canonical == LABEL:
            label = position
        elif canonical is not None and canonical not in identifiers:
            identifiers[canonical] = position
        else:
            # Дубликаты заголовков (Fwd Header Length) получают суффикс как в pandas
            count = seen.get(name, 0)
            seen[name] = count + 1
            features.append((name if count == 0 else f"{name}.{count}", position))
    return ColumnLayout(identifiers=identifiers, label=label, features=features)


@dataclass
class RawChunk:
    """Блок строк файла: значения как текст, номера строк и строки неверной ширины"""
    values: pd.DataFrame
    lines: np.ndarray
    width_issues: Dict[int, str]


def _raw_chunk(rows: List[List[str]], lines: List[int], issues: Dict[int, str]) -> RawChunk:
    return RawChunk(values=pd.DataFrame(rows, dtype=str), lines=np.array(lines, dtype=np.int64), width_issues=issues)


def _open_csv(path: Path, chunksize: int) -> Tuple[List[str], Iterator[RawChunk]]:
    """
    Открывает CSV и читает заголовок. Ширина строки сверяется с заголовком
    построчно: короткие и длинные строки не сдвигают колонки, а отмечаются
    в width_issues на своём месте
    
    Returns:
        (заголовок, итератор блоков данных)
    """
    try:
        handle = path.open(encoding="utf-8-sig", newline="")
    except OSError as e:
        raise OSError(f"не удалось прочитать {path}: {e}") from e
    reader = csv.reader(handle)
    try:
        header = next((row for row in reader if row), None)
    except (csv.Error, UnicodeDecodeError) as e:
        handle.close()
        raise DataFormatError(f"файл {path}: некорректный заголовок ({e})") from e
    if header is None:
        handle.close()
        raise DataFormatError(f"файл {path} пуст: нет строки заголовка")
    if not any(value.strip() for value in header):
        handle.close()
        raise DataFormatError(f"файл {path}: пустая строка заголовка")
    width = len(header)
    
    def chunks() -> Iterator[RawChunk]:
        rows: List[List[str]] = []
        lines: List[int] = []
        issues: Dict[int, str] = {}
        try:
            for row in reader:
                if not row:
                    continue
                if len(row) != width:
                    issues[len(rows)] = (
                        f"неполная строка ({len(row)} полей из {width})"
                        if len(row) < width
                        else f"лишние поля в строке ({len(row)} полей из {width})"
                    )
                    row = [""] * width
                rows.append(row)
                lines.append(reader.line_num)
                if len(rows) == chunksize:
                    yield _raw_chunk(rows, lines, issues)
                    rows, lines, issues = [], [], {}
            if rows:
                yield _raw_chunk(rows, lines, issues)
        except (csv.Error, UnicodeDecodeError) as e:
            raise DataFormatError(f"файл {path}, строка {reader.line_num}: {e}", row=reader.line_num) from e
        finally:
            handle.close()
    
    return header, chunks()


def _convert(
    chunk: RawChunk,
    layout: ColumnLayout,
    strict: bool,
) -> Tuple[pd.DataFrame, List[RejectedRow], np.ndarray]:
    """
    Переводит сырой блок строк в каноническую схему
    
    Returns:
        (кадр принятых строк, отклонённые строки, номера строк файла для принятых)
    """
    raw = chunk.values
    lines = chunk.lines
    size = len(raw)
    reasons: List[Optional[str]] = [None] * size
    fields: List[Optional[str]] = [None] * size
    
    def flag(mask: np.ndarray, reason: str, column: Optional[str]) -> None:
        for i in np.flatnonzero(mask):
            if reasons[i] is None:
                reasons[i] = reason
                fields[i] = column
    
    for i, reason in chunk.width_issues.items():
        reasons[i] = reason
    
    columns: Dict[str, Any] = {}
    for column in TEXT_COLUMNS:
        position = layout.identifiers.get(column)
        if position is None:
            columns[column] = [None] * size if column == FLOW_ID else [""] * size
        else:
            values = raw[position].fillna("").astype(str).str.strip()
            columns[column] = values.where(values != "", None) if column == FLOW_ID else values
    
    for column in PORT_COLUMNS:
        position = layout.identifiers.get(column)
        if position is None:
            columns[column] = np.full(size, np.nan)
            continue
        tokens = raw[position].fillna("")
        values = numeric_series(tokens)
        flag(bad_numeric_mask(tokens, values).to_numpy(), f"поле '{column}' не число", column)
        columns[column] = values.to_numpy()
    
    for name, position in layout.features:
        tokens = raw[position].fillna("")
        values = numeric_series(tokens)
        flag(bad_numeric_mask(tokens, values).to_numpy(), f"поле '{name}' не число", name)
        columns[name] = values.to_numpy()
    
    if layout.label is None:
        columns[LABEL] = [None] * size
    else:
        labels = raw[layout.label].fillna("").astype(str).str.strip()
        columns[LABEL] = labels.where(labels != "", None)
    
    if strict:
        first = next((i for i, reason in enumerate(reasons) if reason is not None), None)
        if first is not None:
            raise DataFormatError(
                f"строка {lines[first]}: {reasons[first]}", field=fields[first], row=int(lines[first])
            )
    
    frame = pd.DataFrame(
        {column: pd.Series(columns[column]).reset_index(drop=True) for column in canonical_columns(layout.feature_names)}
    )
    keep = np.array([reason is None for reason in reasons], dtype=bool)
    rejected = [
        RejectedRow(line=int(lines[i]), label=frame[LABEL].iloc[i], reason=reasons[i])
        for i in np.flatnonzero(~keep)
    ]
    return frame[keep].reset_index(drop=True), rejected, lines[keep]


def iter_flow_chunks(
    path: PathLike,
    chunksize: int = 10000,
) -> Iterator[Tuple[pd.DataFrame, List[RejectedRow], np.ndarray, ColumnLayout]]:
    """
    Потоковое чтение CSV блоками; некорректные строки отдаются как отклонённые.
    Файл открывается и заголовок проверяется сразу при вызове, до первого блока
    
    Args:
        path: Путь к CSV
        chunksize: Размер блока
    
    Returns:
        Итератор (кадр принятых строк, отклонённые строки, номера строк, раскладка колонок)
    """
    path = Path(path)
    header, chunks = _open_csv(path, chunksize)
    layout = _layout(header)
    
    def converted() -> Iterator[Tuple[pd.DataFrame, List[RejectedRow], np.ndarray, ColumnLayout]]:
        for chunk in chunks:
            frame, rejected, lines = _convert(chunk, layout, strict=False)
            yield frame, rejected, lines, layout
    
    return converted()


def read_flows_csv(path: PathLike, strict: bool = True) -> Dataset:
    """
    Читает CSV в схеме CICIDS2017
    
    Args:
        path: Путь к CSV
        strict: Ошибка на первой некорректной строке; иначе строка
            попадает в rejected набора
    
    Returns:
        Набор данных
    """
    path = Path(path)
    header, chunks = _open_csv(path, chunksize=50000)
    layout = _layout(header)
    
    frames: List[pd.DataFrame] = []
    rejected: List[RejectedRow] = []
    for chunk in chunks:
        frame, dropped, _ = _convert(chunk, layout, strict=strict)
        frames.append(frame)
        rejected.extend(dropped)
    
    frame = pd.concat(frames, ignore_index=True) if frames else empty_frame(layout.feature_names)
    dataset = Dataset.from_frame(frame, layout.feature_names, source=str(path), rejected=rejected)
    logger.info(
        f"Прочитано {len(dataset)} потоков из {path}, отклонено {len(rejected)}, "
        f"классы: {dataset.class_names}"
    )
    return dataset


def write_flows_csv(dataset: Dataset, path: PathLike) -> Path:
    """
    Пишет набор в CSV той же схемы
    
    Args:
        dataset: Набор данных
        path: Путь к CSV
    
    Returns:
        Путь к записанному файлу
    """
    path = Path(path)
    frame = dataset.frame.copy()
    for column in PORT_COLUMNS:
        frame[column] = frame[column].astype(float).round().astype("Int64")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, na_rep="", lineterminator="\n")
    except OSError as e:
        raise OSError(f"не удалось записать {path}: {e}") from e
    logger.info(f"Записано {len(frame)} потоков в {path}")
    return path


def record_from_mapping(mapping: Mapping[str, Any]) -> FlowRecord:
    """
    Строит запись из пар поле/значение (тело запроса сервиса)
    
    Args:
        mapping: Имена колонок схемы и их значения
    
    Returns:
        Запись потока; отсутствующие числовые признаки проверяются позже
    """
    identifiers: Dict[str, Any] = {}
    features: Dict[str, float] = {}
    for key, value in mapping.items():
        name = str(key).strip()
        canonical = HEADER_ALIASES.get(normalize_feature_name(name))
        if canonical is not None:
            identifiers[canonical] = value
        else:
            features[name] = parse_numeric_token(value, name)
    
    def port(column: str) -> Optional[int]:
        value = parse_numeric_token(identifiers.get(column), column)
        if not np.isfinite(value):
            return None
        if value != int(value) or value < 0:
            raise DataFormatError(f"поле '{column}': ожидалось неотрицательное целое", field=column)
        return int(value)
    
    def text(column: str) -> str:
        value = identifiers.get(column)
        return "" if value is None else str(value).strip()
    
    flow_id = identifiers.get(FLOW_ID)
    label = identifiers.get(LABEL)
    return FlowRecord(
        flow_id=None if flow_id is None else str(flow_id),
        source_ip=text(SOURCE_IP),
        destination_ip=text(DESTINATION_IP),
        timestamp=text(TIMESTAMP),
        source_port=port(PORT_COLUMNS[0]),
        destination_port=port(PORT_COLUMNS[1]),
        protocol=port(PORT_COLUMNS[2]),
        numeric_features=features,
        label=None if label is None or not str(label).strip() else str(label).strip(),
    )
