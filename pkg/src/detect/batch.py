"""Пакетное предсказание по CSV с построчным учётом ошибок"""
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Union

import numpy as np
import pandas as pd

from src.core.errors import DataFormatError
from src.core.logger import setup_logger
from src.detect.model import TrainedModel, predict_frame, predicted_labels
from src.flows.reader import iter_flow_chunks
from src.flows.schema import DESTINATION_IP, FLOW_ID, SOURCE_IP


logger = setup_logger(__name__)


@dataclass(frozen=True)
class BatchReport:
    """Итоги пакетного предсказания"""
    total_items: int
    predicted_items: int
    succeeded: int
    failed: int
    elapsed_seconds: float
    
    def to_dict(self) -> Dict[str, Any]:
        return {
            "total_items": self.total_items,
            "predicted_items": self.predicted_items,
            "succeeded": self.succeeded,
            "failed": self.failed,
            "elapsed_seconds": self.elapsed_seconds,
        }
    
    def summary(self) -> str:
        return (
            f"Total Items: {self.total_items:,}\n"
            f"Predicted: {self.predicted_items:,}\n"
            f"Succeeded: {self.succeeded:,}, Failed: {self.failed:,}\n"
            f"Elapsed: {self.elapsed_seconds:.2f} s"
        )


def output_columns(class_order: List[str]) -> List[str]:
    return (
        ["flow_id", "source_ip", "destination_ip", "predicted"]
        + [f"score_{name}" for name in class_order]
        + ["error"]
    )


def _success_rows(model: TrainedModel, frame: pd.DataFrame, lines: np.ndarray) -> pd.DataFrame:
    proba = predict_frame(model, frame)
    rows = pd.DataFrame({
        "line": lines,
        "flow_id": frame[FLOW_ID].fillna("").to_numpy(),
        "source_ip": frame[SOURCE_IP].to_numpy(),
        "destination_ip": frame[DESTINATION_IP].to_numpy(),
        "predicted": predicted_labels(model, proba),
    })
    for j, name in enumerate(model.class_order):
        rows[f"score_{name}"] = proba[:, j]
    rows["error"] = ""
    return rows


def _failure_rows(class_order: List[str], lines: List[int], reasons: List[str]) -> pd.DataFrame:
    rows = pd.DataFrame({"line": lines, "flow_id": "", "source_ip": "", "destination_ip": "", "predicted": ""})
    for name in class_order:
        rows[f"score_{name}"] = np.nan
    rows["error"] = reasons
    return rows


def batch_predict(
    model: TrainedModel,
    input_path: Union[str, Path],
    output_path: Union[str, Path],
    chunksize: int = 10000,
) -> BatchReport:
    """
    Потоково предсказывает классы для всех строк CSV
    
    Каждая входная строка даёт одну выходную: идентификаторы, класс и
    вероятности либо строку ошибки с причиной в колонке error.
    
    Args:
        model: Обученная модель
        input_path: Входной CSV в схеме CICIDS2017
        output_path: Выходной CSV
        chunksize: Размер блока чтения
    
    Returns:
        Отчёт с итогами
    """
    started = time.perf_counter()
    output_path = Path(output_path)
    # Ошибка чтения входа возникает здесь, до создания выходного файла
    chunks = iter_flow_chunks(input_path, chunksize=chunksize)
    columns = output_columns(model.class_order)
    
    succeeded = failed = 0
    try:
        output_path.parent.mkdir(parents=True, exist_ok=True)
        with open(output_path, "w", encoding="utf-8", newline="") as handle:
            pd.DataFrame(columns=columns).to_csv(handle, index=False, lineterminator="\n")
            for frame, rejected, lines, _ in chunks:
                parts = []
                if rejected:
                    parts.append(_failure_rows(
                        model.class_order,
                        [r.line for r in rejected],
                        [f"строка {r.line}: {r.reason}" for r in rejected],
                    ))
                    failed += len(rejected)
                if len(frame):
                    try:
                        parts.append(_success_rows(model, frame, lines))
                        succeeded += len(frame)
                    except DataFormatError as e:
                        parts.append(_failure_rows(
                            model.class_order,
                            [int(line) for line in lines],
                            [f"строка {int(line)}: {e}" for line in lines],
                        ))
                        failed += len(frame)
                if parts:
                    block = pd.concat(parts, ignore_index=True).sort_values("line", kind="stable")
                    block[columns].to_csv(handle, header=False, index=False, lineterminator="\n")
    except OSError as e:
        raise OSError(f"не удалось записать результат {output_path}: {e}") from e
    
    report = BatchReport(
        total_items=succeeded + failed,
        predicted_items=succeeded,
        succeeded=succeeded,
        failed=failed,
        elapsed_seconds=time.perf_counter() - started,
    )
    logger.info(
        f"Пакетное предсказание {input_path}: всего {report.total_items}, "
        f"успешно {report.succeeded}, ошибок {report.failed}, {report.elapsed_seconds:.2f} с"
    )
    return report
