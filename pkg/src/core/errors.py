"""Иерархия ошибок приложения"""
from typing import Optional


class ConfigError(ValueError):
    """Некорректная конфигурация или параметры сценария"""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field


class ScenarioParseError(ConfigError):
    """Ошибка разбора файла сценария"""

    def __init__(self, message: str, line: int, field: Optional[str] = None):
        super().__init__(f"строка {line}: {message}", field=field)
        self.line = line


class UnknownScenarioError(ConfigError):
    """Неизвестный идентификатор встроенного сценария"""


class DataFormatError(ValueError):
    """Некорректные входные данные"""

    def __init__(
        self,
        message: str,
        field: Optional[str] = None,
        row: Optional[int] = None
    ):
        super().__init__(message)
        self.field = field
        self.row = row


class SchemaMismatchError(DataFormatError):
    """Запись не соответствует схеме признаков модели"""


class ModelFormatError(DataFormatError):
    """Файл модели повреждён или имеет неверный формат"""


class UnsupportedModelVersionError(ModelFormatError):
    """Файл модели записан неподдерживаемой версией формата"""


class UndefinedMetricError(ValueError):
    """Метрика не определена на данных входах"""


class UsageError(RuntimeError):
    """Неверное использование API или командной строки"""


class UnknownAlertError(LookupError):
    """Обратная связь ссылается на несуществующий алерт"""


class SweepRunError(RuntimeError):
    """Ошибка отдельного прогона внутри серии"""

    def __init__(self, scenario: str, seed: int, cause: Exception):
        super().__init__(f"прогон {scenario} (seed={seed}) завершился ошибкой: {cause}")
        self.scenario = scenario
        self.seed = seed
        self.cause = cause
