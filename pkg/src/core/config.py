"""Конфигурация приложения через переменные окружения"""
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional

from src.core.errors import ConfigError


SEVERITY_LEVELS = ("none", "low", "medium", "high")

DEFAULT_SOP_TABLE = {
    "low": "SOP-OBSERVE-01",
    "medium": "SOP-CONTAIN-02",
    "high": "SOP-ESCALATE-03",
}


@dataclass(frozen=True)
class TrainConfig:
    """Параметры обучения и автоматического выбора модели"""
    
    min_class_count: int = 5
    max_depth: int = 12
    min_leaf: int = 5
    knn_k: int = 5
    variance_floor: float = 1e-9
    validation_fraction: float = 0.2
    exclude_identifiers: bool = False
    importance_repeats: int = 3
    importance_max_rows: int = 2000
    
    @classmethod
    def from_env(cls) -> "TrainConfig":
        """Загружает конфигурацию обучения из переменных окружения"""
        return cls(
            min_class_count=int(os.getenv("CRDM_MIN_CLASS_COUNT", "5")),
            max_depth=int(os.getenv("CRDM_TREE_MAX_DEPTH", "12")),
            min_leaf=int(os.getenv("CRDM_TREE_MIN_LEAF", "5")),
            knn_k=int(os.getenv("CRDM_KNN_K", "5")),
            exclude_identifiers=os.getenv("CRDM_EXCLUDE_IDENTIFIERS", "0") in ("1", "true", "yes"),
            importance_repeats=int(os.getenv("CRDM_IMPORTANCE_REPEATS", "3")),
        )
    
    def validate(self) -> None:
        """Проверяет диапазоны параметров"""
        if self.min_class_count < 2:
            raise ConfigError("min_class_count должен быть не меньше 2", field="min_class_count")
        if self.max_depth < 1:
            raise ConfigError("max_depth должен быть положительным", field="max_depth")
        if self.min_leaf < 1:
            raise ConfigError("min_leaf должен быть положительным", field="min_leaf")
        if self.knn_k < 1:
            raise ConfigError("knn_k должен быть положительным", field="knn_k")
        if self.variance_floor <= 0:
            raise ConfigError("variance_floor должен быть положительным", field="variance_floor")
        if not 0 < self.validation_fraction < 1:
            raise ConfigError("validation_fraction вне (0, 1)", field="validation_fraction")
        if self.importance_repeats < 1:
            raise ConfigError("importance_repeats должен быть не меньше 1", field="importance_repeats")


@dataclass
class ServeConfig:
    """Конфигурация сервиса предсказаний и алертов"""
    
    api_key: str = ""
    host: str = "127.0.0.1"
    port: int = 8080
    
    # Категоризация по максимальному скору атакующего класса
    severity_high: float = 0.9
    severity_medium: float = 0.6
    sop_table: Dict[str, str] = field(default_factory=lambda: dict(DEFAULT_SOP_TABLE))
    benign_label: str = "BENIGN"
    
    # Обратная связь
    feedback_window: int = 500
    accuracy_floor: float = 0.95
    
    log_dir: str = "logs"
    max_body_bytes: int = 65536
    
    # Telegram уведомления
    telegram_bot_token: str = ""
    telegram_alert_chat_id: Optional[str] = None
    notify_severity: str = "high"
    
    @classmethod
    def from_env(cls) -> "ServeConfig":
        """Загружает конфигурацию из переменных окружения"""
        return cls(
            api_key=os.getenv("CRDM_API_KEY", ""),
            host=os.getenv("CRDM_HOST", "127.0.0.1"),
            port=int(os.getenv("CRDM_PORT", "8080")),
            severity_high=float(os.getenv("CRDM_SEVERITY_HIGH", "0.9")),
            severity_medium=float(os.getenv("CRDM_SEVERITY_MEDIUM", "0.6")),
            benign_label=os.getenv("CRDM_BENIGN_LABEL", "BENIGN"),
            feedback_window=int(os.getenv("CRDM_FEEDBACK_WINDOW", "500")),
            accuracy_floor=float(os.getenv("CRDM_ACCURACY_FLOOR", "0.95")),
            log_dir=os.getenv("CRDM_LOG_DIR", "logs"),
            max_body_bytes=int(os.getenv("CRDM_MAX_BODY_BYTES", "65536")),
            telegram_bot_token=os.getenv("TELEGRAM_BOT_TOKEN", ""),
            telegram_alert_chat_id=os.getenv("TELEGRAM_ALERT_CHAT_ID", None),
            notify_severity=os.getenv("CRDM_NOTIFY_SEVERITY", "high"),
        )
    
    def validate(self) -> None:
        """Проверяет обязательные параметры"""
        if not self.api_key:
            raise ConfigError("API ключ не установлен (CRDM_API_KEY или --api-key-file)", field="api_key")
        if not 0 < self.severity_medium < self.severity_high <= 1:
            raise ConfigError(
                "пороги должны удовлетворять 0 < medium < high <= 1",
                field="severity_medium",
            )
        if self.feedback_window < 1:
            raise ConfigError("окно обратной связи должно быть не меньше 1", field="feedback_window")
        if not 0 <= self.accuracy_floor <= 1:
            raise ConfigError("accuracy_floor вне [0, 1]", field="accuracy_floor")
        if self.notify_severity not in SEVERITY_LEVELS[1:]:
            raise ConfigError(f"неизвестная важность: {self.notify_severity}", field="notify_severity")
        for severity in SEVERITY_LEVELS[1:]:
            if not self.sop_table.get(severity):
                raise ConfigError(f"в таблице SOP нет записи для '{severity}'", field="sop_table")
    
    @property
    def telegram_enabled(self) -> bool:
        return bool(self.telegram_bot_token and self.telegram_alert_chat_id)


def read_api_key(path: str) -> str:
    """
    Читает API ключ из файла
    
    Args:
        path: Путь к файлу с ключом
    
    Returns:
        Ключ без пробельных символов по краям
    """
    try:
        key = Path(path).read_text(encoding="utf-8").strip()
    except OSError as e:
        raise OSError(f"не удалось прочитать файл ключа {path}: {e}") from e
    if not key:
        raise ConfigError(f"файл ключа пуст: {path}", field="api_key")
    return key


def load_sop_table(path: str) -> Dict[str, str]:
    """
    Загружает таблицу SOP (важность → идентификатор плейбука) из JSON
    
    Args:
        path: Путь к JSON файлу
    
    Returns:
        Таблица SOP поверх значений по умолчанию
    """
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise OSError(f"не удалось прочитать таблицу SOP {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"таблица SOP {path} не является JSON: {e}", field="sop_table") from e
    if not isinstance(raw, dict):
        raise ConfigError("таблица SOP должна быть объектом", field="sop_table")
    unknown = set(raw) - set(SEVERITY_LEVELS[1:])
    if unknown:
        raise ConfigError(f"неизвестные уровни в таблице SOP: {sorted(unknown)}", field="sop_table")
    table = dict(DEFAULT_SOP_TABLE)
    table.update({str(k): str(v) for k, v in raw.items()})
    return table
