"""Встроенные сценарии S1-S4, файлы сценариев и серии прогонов"""
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

from src.core.errors import ConfigError, ScenarioParseError, SweepRunError, UnknownScenarioError
from src.core.logger import setup_logger
from src.sim.engine import run
from src.sim.models import ADAPTIVE_BREACH_FACTOR, AdaptationPolicy, DefenseMode, RunSummary, ScenarioSpec


logger = setup_logger(__name__)

BUILTIN_IDS = ("s1", "s2", "s3", "s4")
DEFAULT_SEEDS = list(range(1, 51))


def builtin_scenario(scenario_id: str) -> List[ScenarioSpec]:
    """
    Возвращает варианты встроенного сценария
    
    Args:
        scenario_id: Один из s1, s2, s3, s4
    
    Returns:
        Список провалидированных спеков в порядке вариантов
    """
    key = scenario_id.strip().lower()
    if key == "s1":
        specs = [
            ScenarioSpec(name=f"s1-threats-{n}", threat_count=n, response_rate=5)
            for n in (10, 30, 100)
        ]
    elif key == "s2":
        specs = [
            ScenarioSpec(name=f"s2-response-{r}", threat_count=20, response_rate=r)
            for r in (2, 8, 10)
        ]
    elif key == "s3":
        specs = [
            ScenarioSpec(
                name=f"s3-defense-{d}",
                threat_count=30,
                response_rate=3,
                defense_mode=DefenseMode.FIXED,
                defense_level=d,
            )
            for d in (1, 3, 5)
        ]
    elif key == "s4":
        specs = [
            ScenarioSpec(
                name="s4-adaptive",
                tick_limit=100,
                threat_count=10,
                response_rate=5,
                breach_factor=ADAPTIVE_BREACH_FACTOR,
                defense_mode=DefenseMode.ADAPTIVE,
                adaptation=AdaptationPolicy(),
            )
        ]
    else:
        raise UnknownScenarioError(f"неизвестный сценарий: {scenario_id}", field="scenario")
    return [spec.validate() for spec in specs]


def with_adaptation_disabled(spec: ScenarioSpec) -> ScenarioSpec:
    """Контрольный вариант адаптивного сценария: те же случайные уровни, без подстройки"""
    return replace(spec, name=f"{spec.name}-control", defense_mode=DefenseMode.RANDOM, adaptation=None)


def _parse_defense(value: str) -> Dict[str, Any]:
    lowered = value.lower()
    if lowered == "random":
        return {"defense_mode": DefenseMode.RANDOM, "defense_level": None}
    if lowered == "adaptive":
        return {"defense_mode": DefenseMode.ADAPTIVE, "defense_level": None}
    return {"defense_mode": DefenseMode.FIXED, "defense_level": int(value)}


# ключ файла -> (поле спека или политики, преобразование)
_SPEC_KEYS: Dict[str, Tuple[str, Callable[[str], Any]]] = {
    "name": ("name", str),
    "nodes": ("node_count", int),
    "ticks": ("tick_limit", int),
    "threats": ("threat_count", int),
    "response_rate": ("response_rate", int),
    "breach_factor": ("breach_factor", int),
    "spread_prob": ("spread_prob", float),
    "respawn_delay": ("respawn_delay", int),
}
_POLICY_KEYS: Dict[str, Tuple[str, Callable[[str], Any]]] = {
    "adapt_interval": ("adapt_interval", int),
    "raise_threshold": ("raise_threshold", float),
    "lower_threshold": ("lower_threshold", float),
    "lower_dwell": ("lower_dwell", int),
}


def parse_scenario_text(text: str, default_name: str = "custom") -> ScenarioSpec:
    """
    Разбирает сценарий в формате `key = value` с комментариями `#`
    
    Args:
        text: Содержимое файла
        default_name: Имя, если ключ name не задан
    
    Returns:
        Провалидированный спек
    """
    spec_values: Dict[str, Any] = {"name": default_name}
    policy_values: Dict[str, Any] = {}
    seen: Dict[str, int] = {}
    
    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioParseError(f"ожидалось 'key = value', получено '{raw.strip()}'", line=line_no)
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.lower()
        if key in seen:
            raise ScenarioParseError(f"ключ '{key}' уже задан в строке {seen[key]}", line=line_no, field=key)
        seen[key] = line_no
        if not value:
            raise ScenarioParseError(f"пустое значение ключа '{key}'", line=line_no, field=key)
        
        try:
            if key == "defense":
                spec_values.update(_parse_defense(value))
            elif key in _SPEC_KEYS:
                target, convert = _SPEC_KEYS[key]
                spec_values[target] = convert(value)
            elif key in _POLICY_KEYS:
                target, convert = _POLICY_KEYS[key]
                policy_values[target] = convert(value)
            else:
                raise ScenarioParseError(f"неизвестный ключ '{key}'", line=line_no, field=key)
        except ValueError as e:
            if isinstance(e, ConfigError):
                raise
            raise ScenarioParseError(f"некорректное значение '{value}' для '{key}'", line=line_no, field=key) from e
    
    adaptive = spec_values.get("defense_mode") is DefenseMode.ADAPTIVE
    if policy_values and not adaptive:
        first = min(seen[k] for k in _POLICY_KEYS if k in seen)
        raise ScenarioParseError("ключи адаптации требуют defense = adaptive", line=first, field="defense")
    if adaptive:
        spec_values["adaptation"] = AdaptationPolicy(**policy_values)
    
    return ScenarioSpec(**spec_values).validate()


def load_scenario_file(path: Union[str, Path]) -> ScenarioSpec:
    """
    Загружает сценарий из файла
    
    Args:
        path: Путь к UTF-8 файлу `key = value`
    
    Returns:
        Провалидированный спек
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise OSError(f"не удалось прочитать сценарий {path}: {e}") from e
    spec = parse_scenario_text(text, default_name=path.stem)
    logger.info(f"Загружен сценарий {spec.name} из {path}")
    return spec


def resolve_scenario(scenario: str) -> List[ScenarioSpec]:
    """Встроенный сценарий по id или спек из файла"""
    if scenario.strip().lower() in BUILTIN_IDS:
        return builtin_scenario(scenario)
    if Path(scenario).is_file():
        return [load_scenario_file(scenario)]
    raise UnknownScenarioError(f"неизвестный сценарий: {scenario}", field="scenario")


_AXES: List[Tuple[str, Callable[[ScenarioSpec], Any]]] = [
    ("threats", lambda s: s.threat_count),
    ("response_rate", lambda s: s.response_rate),
    ("defense", lambda s: s.defense_level if s.defense_mode is DefenseMode.FIXED else s.defense_mode.value),
    ("nodes", lambda s: s.node_count),
    ("ticks", lambda s: s.tick_limit),
    ("breach_factor", lambda s: s.breach_factor),
    ("spread_prob", lambda s: s.spread_prob),
    ("respawn_delay", lambda s: s.respawn_delay),
]


def varying_axis(specs: List[ScenarioSpec]) -> Tuple[str, List[Any]]:
    """Первое поле, которое различается между спеками; иначе имя сценария"""
    for axis, getter in _AXES:
        values = [getter(spec) for spec in specs]
        if len(set(values)) > 1:
            return axis, values
    return "scenario", [spec.name for spec in specs]


@dataclass(frozen=True)
class RunRecord:
    scenario: str
    axis_value: Any
    seed: int
    node_count: int
    summary: RunSummary


@dataclass(frozen=True)
class SweepAggregate:
    axis_value: Any
    runs: int
    mean_peak_fraction: float
    min_peak_fraction: float
    max_peak_fraction: float
    mean_final_fraction: float
    min_final_fraction: float
    max_final_fraction: float
    mean_time_to_containment: Optional[float]


@dataclass
class SweepResult:
    """Результат серии: сводки по каждой паре (вариант, seed) и агрегаты"""
    axis: str
    values: List[Any]
    records: List[List[RunRecord]]
    aggregates: List[SweepAggregate]
    
    def records_flat(self) -> List[RunRecord]:
        return [record for group in self.records for record in group]


def aggregate(axis_value: Any, records: List[RunRecord]) -> SweepAggregate:
    """Агрегаты по сводкам одного значения оси (порядок seed не важен)"""
    ordered = sorted(records, key=lambda r: r.seed)
    peaks = [r.summary.peak_infected / r.node_count for r in ordered]
    finals = [r.summary.final_infected / r.node_count for r in ordered]
    contained = [r.summary.time_to_containment for r in ordered if r.summary.time_to_containment is not None]
    return SweepAggregate(
        axis_value=axis_value,
        runs=len(ordered),
        mean_peak_fraction=math.fsum(peaks) / len(peaks),
        min_peak_fraction=min(peaks),
        max_peak_fraction=max(peaks),
        mean_final_fraction=math.fsum(finals) / len(finals),
        min_final_fraction=min(finals),
        max_final_fraction=max(finals),
        mean_time_to_containment=math.fsum(contained) / len(contained) if contained else None,
    )


def _run_pair(job: Tuple[int, ScenarioSpec, int]) -> Tuple[int, int, RunSummary]:
    index, spec, seed = job
    try:
        return index, seed, run(spec, seed).summary
    except Exception as e:
        raise SweepRunError(spec.name, seed, e) from e


def sweep(specs: List[ScenarioSpec], seeds: List[int], workers: int = 1) -> SweepResult:
    """
    Прогоняет все пары (спек, seed) и собирает агрегаты
    
    Args:
        specs: Варианты сценария
        seeds: Зерна генератора
        workers: Количество процессов (1 = в текущем процессе)
    
    Returns:
        Результат серии, независимый от порядка выполнения
    """
    if not specs or not seeds:
        raise ConfigError("серия требует непустых списков спеков и seed", field="seeds")
    axis, values = varying_axis(specs)
    jobs = [(i, spec, seed) for i, spec in enumerate(specs) for seed in seeds]
    logger.info(f"Серия: {len(specs)} вариантов x {len(seeds)} seed по оси '{axis}'")
    
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_pair, jobs))
    else:
        outcomes = [_run_pair(job) for job in jobs]
    
    grouped: Dict[int, List[RunRecord]] = {i: [] for i in range(len(specs))}
    for index, seed, summary in outcomes:
        spec = specs[index]
        grouped[index].append(
            RunRecord(
                scenario=spec.name,
                axis_value=values[index],
                seed=seed,
                node_count=spec.node_count,
                summary=summary,
            )
        )
    records = [sorted(grouped[i], key=lambda r: r.seed) for i in range(len(specs))]
    aggregates = [aggregate(values[i], records[i]) for i in range(len(specs))]
    
    for agg in aggregates:
        logger.info(
            f"{axis}={agg.axis_value}: итоговая доля заражённых {agg.mean_final_fraction:.3f}, "
            f"пиковая {agg.mean_peak_fraction:.3f}"
        )
    return SweepResult(axis=axis, values=values, records=records, aggregates=aggregates)
