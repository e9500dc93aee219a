"""
Файл модели

Формат: b"CRDM", версия формата (uint16 big-endian), SHA-256 полезной
нагрузки (32 байта), затем JSON в UTF-8:
{"format": 1, "version": <хеш содержимого>, "model": <TrainedModel.content()>}
"""
import hashlib
import json
import os
import struct
from pathlib import Path
from typing import Union

from src.core.errors import ModelFormatError, UnsupportedModelVersionError
from src.core.logger import setup_logger
from src.detect.model import TrainedModel


logger = setup_logger(__name__)

MAGIC = b"CRDM"
FORMAT_VERSION = 1
_VERSION = struct.Struct(">H")
_HEADER_SIZE = len(MAGIC) + _VERSION.size + 32


def save_model(model: TrainedModel, path: Union[str, Path]) -> Path:
    """
    Сохраняет модель атомарной заменой файла
    
    Args:
        model: Обученная модель
        path: Путь к файлу
    
    Returns:
        Путь к записанному файлу
    """
    path = Path(path)
    payload = json.dumps(
        {"format": FORMAT_VERSION, "version": model.version, "model": model.content()},
        sort_keys=True,
        separators=(",", ":"),
        allow_nan=False,
    ).encode("utf-8")
    blob = MAGIC + _VERSION.pack(FORMAT_VERSION) + hashlib.sha256(payload).digest() + payload
    
    tmp = path.with_name(path.name + ".tmp")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp.write_bytes(blob)
        os.replace(tmp, path)
    except OSError as e:
        raise OSError(f"не удалось записать модель {path}: {e}") from e
    logger.info(f"Модель {model.classifier_name} версии {model.version[:12]} сохранена в {path}")
    return path


def load_model(path: Union[str, Path]) -> TrainedModel:
    """
    Загружает модель с проверкой формата, контрольной суммы и версии
    
    Args:
        path: Путь к файлу
    
    Returns:
        Модель с тем же хешем версии
    """
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as e:
        raise OSError(f"не удалось прочитать модель {path}: {e}") from e
    
    if len(blob) < _HEADER_SIZE or not blob.startswith(MAGIC):
        raise ModelFormatError(f"{path} не является файлом модели или обрезан", field="magic")
    (format_version,) = _VERSION.unpack_from(blob, len(MAGIC))
    if format_version != FORMAT_VERSION:
        raise UnsupportedModelVersionError(
            f"{path}: версия формата {format_version} не поддерживается (ожидалась {FORMAT_VERSION})",
            field="format",
        )
    digest = blob[len(MAGIC) + _VERSION.size:_HEADER_SIZE]
    payload = blob[_HEADER_SIZE:]
    if hashlib.sha256(payload).digest() != digest:
        raise ModelFormatError(f"{path}: контрольная сумма не совпадает, файл повреждён", field="checksum")
    
    try:
        document = json.loads(payload.decode("utf-8"))
        model = TrainedModel.from_content(document["model"])
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise ModelFormatError(f"{path}: некорректное содержимое модели: {e}", field="payload") from e
    
    if model.version != document.get("version"):
        raise ModelFormatError(f"{path}: хеш содержимого не совпадает с записанной версией", field="version")
    logger.info(f"Загружена модель {model.classifier_name} версии {model.version[:12]} из {path}")
    return model
