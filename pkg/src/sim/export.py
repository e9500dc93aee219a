"""Экспорт временных рядов и серий в CSV"""
import os
from pathlib import Path
from typing import List, Union

import pandas as pd

from src.core.errors import DataFormatError
from src.core.logger import setup_logger
from src.sim.models import SimResult, TickMetrics
from src.sim.scenario import SweepResult


logger = setup_logger(__name__)

TIMESERIES_COLUMNS = ["tick", "infected", "healthy", "active_threats", "mean_defense", "health"]
SWEEP_COLUMNS = [
    "scenario", "axis_value", "seed", "peak_infected",
    "final_infected", "mean_health", "time_to_containment",
]


def _write_frame(frame: pd.DataFrame, path: Union[str, Path]) -> Path:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        # repr-формат float гарантирует точный обратный разбор
        frame.to_csv(tmp, index=False, lineterminator="\n")
        os.replace(tmp, path)
    except OSError as e:
        raise OSError(f"не удалось записать {path}: {e}") from e
    return path


def export_timeseries(result: SimResult, path: Union[str, Path]) -> Path:
    """
    Пишет временной ряд прогона
    
    Args:
        result: Результат прогона
        path: Путь к CSV
    
    Returns:
        Путь к записанному файлу
    """
    frame = pd.DataFrame(
        [
            [m.tick, m.infected_count, m.healthy_count, m.active_threats, m.mean_defense, m.health]
            for m in result.series
        ],
        columns=TIMESERIES_COLUMNS,
    )
    written = _write_frame(frame, path)
    logger.info(f"Временной ряд {result.scenario} (seed={result.seed}): {len(frame)} строк -> {written}")
    return written


def read_timeseries(path: Union[str, Path]) -> List[TickMetrics]:
    """Читает временной ряд, записанный export_timeseries"""
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except OSError as e:
        raise OSError(f"не удалось прочитать {path}: {e}") from e
    if list(frame.columns) != TIMESERIES_COLUMNS:
        raise DataFormatError(f"неожиданный заголовок временного ряда: {list(frame.columns)}")
    return [
        TickMetrics(
            tick=int(row.tick),
            infected_count=int(row.infected),
            healthy_count=int(row.healthy),
            active_threats=int(row.active_threats),
            mean_defense=float(row.mean_defense),
            health=float(row.health),
        )
        for row in frame.itertuples(index=False)
    ]


def export_sweep(result: SweepResult, path: Union[str, Path]) -> Path:
    """
    Пишет сводки серии, по строке на пару (вариант, seed)
    
    Args:
        result: Результат серии
        path: Путь к CSV
    
    Returns:
        Путь к записанному файлу
    """
    rows = [
        [
            record.scenario,
            record.axis_value,
            record.seed,
            record.summary.peak_infected,
            record.summary.final_infected,
            record.summary.mean_health,
            record.summary.time_to_containment,
        ]
        for record in result.records_flat()
    ]
    frame = pd.DataFrame(rows, columns=SWEEP_COLUMNS)
    frame["time_to_containment"] = frame["time_to_containment"].astype("Int64")
    written = _write_frame(frame, path)
    logger.info(f"Серия по оси '{result.axis}': {len(frame)} строк -> {written}")
    return written
