"""Детерминированное разбиение набора потоков на обучающую и тестовую части"""
import math
from typing import Dict, List, Tuple

import numpy as np

from src.core.errors import ConfigError, DataFormatError
from src.core.logger import setup_logger
from src.flows.schema import LABEL, Dataset


logger = setup_logger(__name__)


def _round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


def stratified_quotas(counts: Dict[str, int], test_fraction: float) -> Dict[str, int]:
    """
    Размер тестовой части по классам
    
    Сумма квот равна round(n * test_fraction), остаток раздаётся методом
    наибольшего остатка; каждый класс оставляет хотя бы по одной записи
    в обеих частях.
    
    Args:
        counts: Количество записей по классам
        test_fraction: Доля тестовой части
    
    Returns:
        Количество тестовых записей по классам
    """
    names = sorted(counts)
    total = sum(counts.values())
    target = _round_half_up(total * test_fraction)
    exact = [counts[name] * test_fraction for name in names]
    quotas = [int(math.floor(value)) for value in exact]
    leftover = max(0, target - sum(quotas))
    order = sorted(range(len(names)), key=lambda i: (-(exact[i] - quotas[i]), names[i]))
    for i in order[:leftover]:
        quotas[i] += 1
    return {
        name: min(max(quota, 1), counts[name] - 1)
        for name, quota in zip(names, quotas)
    }


def split(
    ds: Dataset,
    test_fraction: float,
    seed: int,
    stratified: bool = True,
) -> Tuple[Dataset, Dataset]:
    """
    Делит набор на непересекающиеся обучающую и тестовую части
    
    Args:
        ds: Исходный набор
        test_fraction: Доля тестовой части, строго между 0 и 1
        seed: Зерно генератора
        stratified: Сохранять пропорции классов
    
    Returns:
        (обучающая часть, тестовая часть); порядок строк исходный,
        отклонённые при чтении строки делятся в той же доле
    """
    if not 0 < test_fraction < 1:
        raise ConfigError(f"test_fraction должен быть в (0, 1), получено {test_fraction}", field="test_fraction")
    
    rng = np.random.default_rng(seed)
    n = len(ds)
    
    if stratified:
        labels = ds.frame[LABEL]
        if labels.isna().any():
            raise DataFormatError("стратификация невозможна: есть записи без метки", field=LABEL)
        counts = ds.class_counts()
        for name in sorted(counts):
            if counts[name] < 2:
                raise DataFormatError(
                    f"стратификация невозможна: в классе '{name}' меньше двух записей",
                    field=name,
                )
        quotas = stratified_quotas(counts, test_fraction)
        test_parts: List[np.ndarray] = []
        for name in sorted(counts):
            members = np.flatnonzero((labels == name).to_numpy())
            test_parts.append(rng.permutation(members)[: quotas[name]])
        test_idx = np.sort(np.concatenate(test_parts)) if test_parts else np.array([], dtype=int)
    else:
        test_size = _round_half_up(n * test_fraction)
        test_idx = np.sort(rng.permutation(n)[:test_size])
    
    mask = np.zeros(n, dtype=bool)
    mask[test_idx] = True
    train_idx = np.flatnonzero(~mask)
    
    train = ds.subset(train_idx.tolist(), source=f"{ds.source} [train]")
    test = ds.subset(test_idx.tolist(), source=f"{ds.source} [test]")
    # Отклонённые при чтении строки делятся в той же пропорции
    dropped_test = np.zeros(len(ds.rejected), dtype=bool)
    dropped_test[rng.permutation(len(ds.rejected))[: _round_half_up(len(ds.rejected) * test_fraction)]] = True
    train.rejected = [row for row, in_test in zip(ds.rejected, dropped_test) if not in_test]
    test.rejected = [row for row, in_test in zip(ds.rejected, dropped_test) if in_test]
    logger.info(
        f"Разбиение {ds.source}: train={len(train)}, test={len(test)}, "
        f"отклонённых в test {len(test.rejected)} из {len(ds.rejected)} "
        f"(доля {test_fraction}, стратификация={stratified}, seed={seed})"
    )
    return train, test
