"""
Логирование пакета

Один хендлер stdout висит на корневом логгере пакета, модули получают
дочерние логгеры и наследуют его уровень. Процессы серии прогонов
настраивают его заново при импорте.
"""
import logging
import os
import sys
from typing import Optional, Union


ROOT_LOGGER = "src"
DEFAULT_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"


def _level_from_env() -> int:
    level = logging.getLevelName(os.getenv("LOG_LEVEL", "INFO").upper())
    return level if isinstance(level, int) else logging.INFO


def _package_root(format_string: Optional[str]) -> logging.Logger:
    root = logging.getLogger(ROOT_LOGGER)
    if root.handlers and format_string is None:
        return root

    root.handlers.clear()
    handler = logging.StreamHandler(sys.stdout)
    handler.setFormatter(logging.Formatter(format_string or DEFAULT_FORMAT))
    root.addHandler(handler)
    root.setLevel(_level_from_env())
    root.propagate = False
    return root


def setup_logger(
    name: str,
    level: Optional[int] = None,
    format_string: Optional[str] = None
) -> logging.Logger:
    """
    Возвращает логгер модуля внутри иерархии пакета

    Args:
        name: Имя логгера (обычно __name__; "__main__" тоже попадает в пакет)
        level: Собственный уровень модуля (по умолчанию наследуется)
        format_string: Формат логов (пересоздаёт общий хендлер)

    Returns:
        Настроенный логгер
    """
    _package_root(format_string)

    if name != ROOT_LOGGER and not name.startswith(f"{ROOT_LOGGER}."):
        name = f"{ROOT_LOGGER}.{name}"
    logger = logging.getLogger(name)
    if level is not None:
        logger.setLevel(level)
    return logger


def set_level(level: Union[int, str]) -> None:
    """Меняет уровень всех логгеров пакета, не задавших свой"""
    if isinstance(level, str):
        level = logging.getLevelName(level.upper())
    _package_root(None).setLevel(level)
