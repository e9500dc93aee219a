"""Синтетический генератор потоков в схеме CICIDS2017"""
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List

import numpy as np
import pandas as pd

from src.core.errors import ConfigError
from src.core.logger import setup_logger
from src.flows.schema import (
    CICIDS2017_FEATURES,
    DESTINATION_IP,
    DESTINATION_PORT,
    FLOW_ID,
    LABEL,
    PROTOCOL,
    SOURCE_IP,
    SOURCE_PORT,
    TIMESTAMP,
    Dataset,
    canonical_columns,
)


logger = setup_logger(__name__)

# Доли классов по матрице ошибок вторника: 43166 / 786 / 537
DEFAULT_PROPORTIONS = {
    "BENIGN": 0.970,
    "FTP-Patator": 0.018,
    "SSH-Patator": 0.012,
}

# Профили классов: пулы адресов, порты и окно времени суток (часы)
_CLASS_PROFILES = {
    "BENIGN": {
        "sources": [f"192.168.10.{i}" for i in range(3, 26)],
        "destinations": ["8.8.8.8", "104.16.207.165", "192.168.10.3", "23.15.4.24", "172.217.10.98"],
        "ports": [53, 80, 443, 123, 137, 8080],
        "protocols": [6, 17],
        "hours": (8.0, 17.0),
    },
    "FTP-Patator": {
        "sources": ["172.16.0.1", "172.16.0.11"],
        "destinations": ["192.168.10.50"],
        "ports": [21],
        "protocols": [6],
        "hours": (9.33, 10.33),
    },
    "SSH-Patator": {
        "sources": ["172.16.0.21", "172.16.0.31"],
        "destinations": ["192.168.10.50"],
        "ports": [22],
        "protocols": [6],
        "hours": (14.0, 15.0),
    },
}


class Separability(str, Enum):
    PERFECT = "perfect"
    NOISY = "noisy"


@dataclass(frozen=True)
class SynthSpec:
    """Параметры синтетического набора"""
    row_count: int
    proportions: Dict[str, float] = field(default_factory=lambda: dict(DEFAULT_PROPORTIONS))
    separability: Separability = Separability.PERFECT
    noise_rate: float = 0.0
    seed: int = 0
    
    def validate(self) -> "SynthSpec":
        if self.row_count < 0:
            raise ConfigError("row_count не может быть отрицательным", field="row_count")
        if not self.proportions:
            raise ConfigError("не заданы доли классов", field="proportions")
        if any(p < 0 for p in self.proportions.values()):
            raise ConfigError("доли классов не могут быть отрицательными", field="proportions")
        if abs(math.fsum(self.proportions.values()) - 1.0) > 1e-9:
            raise ConfigError("доли классов должны давать в сумме 1", field="proportions")
        if not 0 <= self.noise_rate <= 1:
            raise ConfigError("noise_rate вне [0, 1]", field="noise_rate")
        return self


def class_counts(row_count: int, proportions: Dict[str, float]) -> Dict[str, int]:
    """
    Количество строк на класс методом наибольшего остатка
    
    Args:
        row_count: Всего строк
        proportions: Доли классов
    
    Returns:
        Целые количества, в сумме row_count
    """
    names = sorted(proportions)
    exact = [proportions[name] * row_count for name in names]
    counts = [int(math.floor(value)) for value in exact]
    leftover = row_count - sum(counts)
    # Остаток раздаётся по убыванию дробной части, при равенстве по имени
    order = sorted(range(len(names)), key=lambda i: (-(exact[i] - counts[i]), names[i]))
    for i in order[:leftover]:
        counts[i] += 1
    return dict(zip(names, counts))


def _profile(name: str, index: int) -> Dict:
    if name in _CLASS_PROFILES:
        return _CLASS_PROFILES[name]
    return {
        "sources": [f"10.{index}.0.{i}" for i in range(1, 5)],
        "destinations": [f"10.{index}.1.1"],
        "ports": [1000 + index],
        "protocols": [6],
        "hours": (0.0, 24.0),
    }


def _timestamps(rng: np.random.Generator, size: int, hours) -> List[str]:
    low, high = hours
    seconds = rng.integers(int(low * 3600), int(high * 3600), size=size)
    return [f"4/7/2017 {s // 3600}:{(s % 3600) // 60:02d}:{s % 60:02d}" for s in seconds]


def synth_dataset(spec: SynthSpec) -> Dataset:
    """
    Генерирует набор потоков, совместимый по схеме с CICIDS2017
    
    Args:
        spec: Параметры генерации
    
    Returns:
        Детерминированный по seed набор данных
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    counts = class_counts(spec.row_count, spec.proportions)
    names = sorted(counts)
    n_features = len(CICIDS2017_FEATURES)
    
    if spec.separability is Separability.PERFECT:
        spacing, spread = 100.0, 1.0
    else:
        spacing, spread = 1.0, 1.0
    feature_offsets = np.arange(n_features, dtype=float)
    
    blocks: List[pd.DataFrame] = []
    for index, name in enumerate(names):
        size = counts[name]
        if size == 0:
            continue
        profile = _profile(name, index)
        # В шумном режиме часть строк получает признаки другого класса
        source_class = np.full(size, index)
        if spec.separability is Separability.NOISY and len(names) > 1:
            swap = rng.random(size) < spec.noise_rate
            shifts = rng.integers(1, len(names), size=size)
            source_class = np.where(swap, (index + shifts) % len(names), index)
        
        means = (source_class[:, None] + 1) * spacing + feature_offsets[None, :]
        values = rng.normal(means, spread)
        
        sources = rng.choice(profile["sources"], size=size)
        destinations = rng.choice(profile["destinations"], size=size)
        source_ports = rng.integers(1024, 65536, size=size)
        destination_ports = rng.choice(profile["ports"], size=size)
        protocols = rng.choice(profile["protocols"], size=size)
        
        block = pd.DataFrame(values, columns=CICIDS2017_FEATURES)
        block.insert(0, FLOW_ID, [
            f"{d}-{s}-{dp}-{sp}-{p}"
            for s, d, sp, dp, p in zip(sources, destinations, source_ports, destination_ports, protocols)
        ])
        block.insert(1, SOURCE_IP, sources)
        block.insert(2, SOURCE_PORT, source_ports.astype(float))
        block.insert(3, DESTINATION_IP, destinations)
        block.insert(4, DESTINATION_PORT, destination_ports.astype(float))
        block.insert(5, PROTOCOL, protocols.astype(float))
        block.insert(6, TIMESTAMP, _timestamps(rng, size, profile["hours"]))
        block[LABEL] = name
        blocks.append(block)
    
    if blocks:
        frame = pd.concat(blocks, ignore_index=True)
        frame = frame.iloc[rng.permutation(len(frame))].reset_index(drop=True)
    else:
        frame = pd.DataFrame(columns=canonical_columns(CICIDS2017_FEATURES))
    frame = frame[canonical_columns(CICIDS2017_FEATURES)]
    
    dataset = Dataset.from_frame(frame, CICIDS2017_FEATURES, source=f"synth(seed={spec.seed})")
    logger.info(f"Сгенерировано {len(dataset)} потоков: {counts}")
    return dataset
