"""Типы данных симуляции"""
import json
import math
from dataclasses import dataclass, field, asdict
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from src.core.errors import ConfigError


# Калибровка: одна точка правды для констант механики атак
DEFAULT_BREACH_FACTOR = 6
DEFAULT_SPREAD_PROB = 0.05
DEFAULT_RESPAWN_DELAY = 1
DEFAULT_NEIGHBOR_COUNT = 4
# S4: при исходных уровнях защиты взломов за тик больше, чем центр управления лечит
ADAPTIVE_BREACH_FACTOR = 1

MIN_DEFENSE, MAX_DEFENSE = 1, 5
MIN_THREAT_LEVEL, MAX_THREAT_LEVEL = 1, 3


class NodeState(str, Enum):
    HEALTHY = "healthy"
    INFECTED = "infected"


class ThreatKind(str, Enum):
    MALWARE = "malware"
    PHISHING = "phishing"
    DDOS = "ddos"


THREAT_KINDS = (ThreatKind.MALWARE, ThreatKind.PHISHING, ThreatKind.DDOS)


class DefenseMode(str, Enum):
    RANDOM = "random"
    FIXED = "fixed"
    ADAPTIVE = "adaptive"


@dataclass
class Node:
    """Элемент критической инфраструктуры"""
    id: int
    defense_level: int
    neighbors: List[int] = field(default_factory=list)
    baseline_defense: int = MIN_DEFENSE
    state: NodeState = NodeState.HEALTHY
    infected_since: Optional[int] = None
    infected_by: Optional[ThreatKind] = None
    
    @property
    def healthy(self) -> bool:
        return self.state is NodeState.HEALTHY
    
    def infect(self, tick: int, kind: ThreatKind) -> None:
        self.state = NodeState.INFECTED
        self.infected_since = tick
        self.infected_by = kind
    
    def heal(self) -> None:
        self.state = NodeState.HEALTHY
        self.infected_since = None
        self.infected_by = None


@dataclass
class Threat:
    """Атакующий агент"""
    id: int
    kind: ThreatKind
    level: int
    target: Optional[int] = None
    progress: int = 0
    cooldown: int = 0
    
    @property
    def engaged(self) -> bool:
        return self.cooldown == 0 and self.target is not None
    
    def reset(self, cooldown: int) -> None:
        """Сбрасывает прогресс и уводит угрозу на перезарядку"""
        self.progress = 0
        self.cooldown = cooldown
        self.target = None


@dataclass
class ControlCentre:
    response_rate: int
    actions_spent_this_tick: int = 0
    
    @property
    def budget_left(self) -> int:
        return self.response_rate - self.actions_spent_this_tick


@dataclass(frozen=True)
class AdaptationPolicy:
    """Правила адаптивной подстройки уровней защиты по здоровью сети"""
    adapt_interval: int = 5
    raise_threshold: float = 0.8
    lower_threshold: float = 0.95
    lower_dwell: int = 10
    
    def validate(self) -> None:
        if self.adapt_interval < 1:
            raise ConfigError("adapt_interval должен быть не меньше 1", field="adapt_interval")
        if not 0 <= self.raise_threshold < self.lower_threshold <= 1:
            raise ConfigError(
                "требуется 0 <= raise_threshold < lower_threshold <= 1",
                field="raise_threshold",
            )
        if self.lower_dwell < self.adapt_interval:
            raise ConfigError("lower_dwell должен быть не меньше adapt_interval", field="lower_dwell")


@dataclass(frozen=True)
class ScenarioSpec:
    """Полная параметризация одного прогона"""
    name: str = "custom"
    node_count: int = 50
    tick_limit: int = 200
    threat_count: int = 10
    threat_level_range: Tuple[int, int] = (MIN_THREAT_LEVEL, MAX_THREAT_LEVEL)
    defense_mode: DefenseMode = DefenseMode.RANDOM
    defense_level: Optional[int] = None
    response_rate: int = 5
    breach_factor: int = DEFAULT_BREACH_FACTOR
    spread_prob: float = DEFAULT_SPREAD_PROB
    respawn_delay: int = DEFAULT_RESPAWN_DELAY
    neighbor_count: int = DEFAULT_NEIGHBOR_COUNT
    adaptation: Optional[AdaptationPolicy] = None
    
    @property
    def adaptive(self) -> bool:
        return self.defense_mode is DefenseMode.ADAPTIVE
    
    def validate(self) -> "ScenarioSpec":
        """Проверяет инварианты и возвращает сам спек"""
        if self.node_count < 1:
            raise ConfigError("node_count должен быть положительным", field="node_count")
        if self.tick_limit < 0:
            raise ConfigError("tick_limit не может быть отрицательным", field="tick_limit")
        if self.threat_count < 0:
            raise ConfigError("threat_count не может быть отрицательным", field="threat_count")
        low, high = self.threat_level_range
        if not MIN_THREAT_LEVEL <= low <= high <= MAX_THREAT_LEVEL:
            raise ConfigError("уровни угроз вне [1, 3]", field="threat_level_range")
        if self.response_rate < 0:
            raise ConfigError("response_rate не может быть отрицательным", field="response_rate")
        if self.breach_factor < 1:
            raise ConfigError("breach_factor должен быть положительным", field="breach_factor")
        if not 0 <= self.spread_prob <= 1:
            raise ConfigError("spread_prob вне [0, 1]", field="spread_prob")
        if self.respawn_delay < 1:
            raise ConfigError("respawn_delay должен быть не меньше 1", field="respawn_delay")
        if self.neighbor_count < 1:
            raise ConfigError("neighbor_count должен быть положительным", field="neighbor_count")
        if self.defense_mode is DefenseMode.FIXED:
            if self.defense_level is None or not MIN_DEFENSE <= self.defense_level <= MAX_DEFENSE:
                raise ConfigError("фиксированный уровень защиты вне [1, 5]", field="defense")
        if self.defense_mode is DefenseMode.ADAPTIVE:
            if self.adaptation is None:
                raise ConfigError("адаптивный режим требует AdaptationPolicy", field="adaptation")
            self.adaptation.validate()
        return self


@dataclass(frozen=True)
class TickMetrics:
    tick: int
    infected_count: int
    healthy_count: int
    active_threats: int
    mean_defense: float
    health: float


@dataclass(frozen=True)
class RunSummary:
    peak_infected: int
    final_infected: int
    mean_health: float
    time_to_containment: Optional[int]


@dataclass
class WorldState:
    """Всё изменяемое состояние одного прогона"""
    tick: int
    nodes: List[Node]
    threats: List[Threat]
    control: ControlCentre
    rng: np.random.Generator
    adaptive: bool = False
    health_history: List[float] = field(default_factory=list)
    
    def infected_nodes(self) -> List[Node]:
        return [node for node in self.nodes if not node.healthy]
    
    def healthy_ids(self) -> List[int]:
        return [node.id for node in self.nodes if node.healthy]


@dataclass
class SimResult:
    """Временной ряд метрик и сводка одного прогона"""
    scenario: str
    seed: int
    node_count: int
    series: List[TickMetrics]
    summary: RunSummary
    
    @property
    def final_infected_fraction(self) -> float:
        return self.summary.final_infected / self.node_count
    
    @property
    def peak_infected_fraction(self) -> float:
        return self.summary.peak_infected / self.node_count
    
    def to_json(self) -> str:
        """Сводная запись прогона (без временного ряда)"""
        return json.dumps(
            {
                "scenario": self.scenario,
                "seed": self.seed,
                "node_count": self.node_count,
                "ticks": len(self.series),
                **asdict(self.summary),
            },
            sort_keys=True,
        )


def summarize(series: List[TickMetrics], world: WorldState) -> RunSummary:
    """
    Считает сводные статистики по временному ряду
    
    Args:
        series: Метрики по тикам
        world: Итоговое состояние мира
    
    Returns:
        Сводка прогона
    """
    if not series:
        infected = len(world.infected_nodes())
        return RunSummary(
            peak_infected=infected,
            final_infected=infected,
            mean_health=(len(world.nodes) - infected) / len(world.nodes),
            time_to_containment=0 if infected == 0 else None,
        )
    
    infected = [m.infected_count for m in series]
    containment: Optional[int] = None
    if infected[-1] == 0:
        containment = series[0].tick
        for metrics in reversed(series):
            if metrics.infected_count != 0:
                containment = metrics.tick + 1
                break
    return RunSummary(
        peak_infected=max(infected),
        final_infected=infected[-1],
        mean_health=math.fsum(m.health for m in series) / len(series),
        time_to_containment=containment,
    )
