"""Детерминированный тиковый движок: узлы, угрозы, центр управления"""
import copy
import math
from dataclasses import dataclass
from typing import List

import numpy as np

from src.core.errors import ConfigError, UsageError
from src.core.logger import setup_logger
from src.sim.models import (
    MAX_DEFENSE,
    MIN_DEFENSE,
    THREAT_KINDS,
    AdaptationPolicy,
    ControlCentre,
    DefenseMode,
    Node,
    ScenarioSpec,
    SimResult,
    Threat,
    ThreatKind,
    TickMetrics,
    WorldState,
    summarize,
)
from src.sim.topology import build_topology


logger = setup_logger(__name__)


@dataclass(frozen=True)
class AttackOutcome:
    progress: int
    breached: bool


def init_world(spec: ScenarioSpec, seed: int) -> WorldState:
    """
    Создаёт начальное состояние мира
    
    Порядок выборок из RNG: позиции узлов (топология), уровни защиты узлов,
    уровни угроз, типы угроз.
    
    Args:
        spec: Параметры сценария
        seed: Зерно генератора
    
    Returns:
        Мир на тике 0, все узлы здоровы
    """
    if spec.node_count == 0:
        raise ConfigError("node_count = 0: в сети нет узлов", field="node_count")
    spec.validate()
    
    rng = np.random.default_rng(seed)
    neighbors = build_topology(spec.node_count, spec.neighbor_count, rng)
    
    if spec.defense_mode is DefenseMode.FIXED:
        defenses = [spec.defense_level] * spec.node_count
    else:
        defenses = [int(d) for d in rng.integers(MIN_DEFENSE, MAX_DEFENSE + 1, size=spec.node_count)]
    nodes = [
        Node(id=i, defense_level=defenses[i], neighbors=neighbors[i], baseline_defense=defenses[i])
        for i in range(spec.node_count)
    ]
    
    low, high = spec.threat_level_range
    levels = rng.integers(low, high + 1, size=spec.threat_count)
    kinds = rng.integers(0, len(THREAT_KINDS), size=spec.threat_count)
    threats = [
        Threat(id=i, kind=THREAT_KINDS[int(kinds[i])], level=int(levels[i]))
        for i in range(spec.threat_count)
    ]
    
    return WorldState(
        tick=0,
        nodes=nodes,
        threats=threats,
        control=ControlCentre(response_rate=spec.response_rate),
        rng=rng,
        adaptive=spec.adaptive,
    )


def clone_world(world: WorldState) -> WorldState:
    """Полная копия мира вместе с состоянием RNG"""
    return copy.deepcopy(world)


def overall_health(world: WorldState) -> float:
    """Доля здоровых узлов"""
    healthy = sum(1 for node in world.nodes if node.healthy)
    return healthy / len(world.nodes)


def breach_threshold(threat: Threat, node: Node, spec: ScenarioSpec) -> int:
    # Фишинг обходит половину технической защиты
    if threat.kind is ThreatKind.PHISHING:
        return math.ceil(node.defense_level / 2) * spec.breach_factor
    return node.defense_level * spec.breach_factor


def resolve_attack_step(threat: Threat, node: Node, spec: ScenarioSpec, tick: int) -> AttackOutcome:
    """
    Один тик атаки угрозы на свою цель
    
    Args:
        threat: Атакующая угроза (цель = node, перезарядка 0)
        node: Здоровый узел-цель
        spec: Параметры сценария
        tick: Текущий тик
    
    Returns:
        Новый прогресс и флаг взлома
    """
    threat.progress += threat.level
    if threat.progress < breach_threshold(threat, node, spec):
        return AttackOutcome(progress=threat.progress, breached=False)
    
    node.infect(tick, threat.kind)
    threat.reset(spec.respawn_delay)
    return AttackOutcome(progress=0, breached=True)


def spread_malware(world: WorldState, spec: ScenarioSpec) -> WorldState:
    """
    Боковое распространение вредоноса по соседям
    
    На каждый заражённый вредоносом узел (по возрастанию id) тянется одно
    число из RNG; при успехе ещё одно выбирает здорового соседа.
    """
    sources = [node for node in world.nodes if not node.healthy and node.infected_by is ThreatKind.MALWARE]
    for node in sources:
        if world.rng.random() >= spec.spread_prob:
            continue
        candidates = [j for j in node.neighbors if world.nodes[j].healthy]
        if not candidates:
            continue
        victim = candidates[int(world.rng.integers(len(candidates)))]
        world.nodes[victim].infect(world.tick, ThreatKind.MALWARE)
    return world


def control_centre_act(world: WorldState, spec: ScenarioSpec) -> WorldState:
    """
    Действия центра управления в пределах бюджета response_rate
    
    Сначала лечение (старейшее заражение первым), затем, если заражённых
    не осталось, нейтрализация угроз с наибольшим прогрессом.
    """
    control = world.control
    control.actions_spent_this_tick = 0
    
    infected = sorted(world.infected_nodes(), key=lambda n: (n.infected_since, n.id))
    for node in infected:
        if control.budget_left <= 0:
            break
        node.heal()
        control.actions_spent_this_tick += 1
    
    if any(not node.healthy for node in world.nodes):
        return world
    
    active = sorted((t for t in world.threats if t.engaged), key=lambda t: (-t.progress, t.id))
    for threat in active:
        if control.budget_left <= 0:
            break
        threat.reset(spec.respawn_delay)
        control.actions_spent_this_tick += 1
    return world


def adapt_defenses(world: WorldState, policy: AdaptationPolicy) -> WorldState:
    """
    Адаптивная подстройка защиты по здоровью сети
    
    Повышение: худшее здоровье за последние adapt_interval завершённых тиков
    ниже raise_threshold. Понижение: последние lower_dwell тиков здоровье
    выше lower_threshold; уровень узла не опускается ниже исходного.
    """
    history = world.health_history
    recent = history[-policy.adapt_interval:] or [overall_health(world)]
    if min(recent) < policy.raise_threshold:
        delta = 1
    elif len(history) >= policy.lower_dwell and all(
        h > policy.lower_threshold for h in history[-policy.lower_dwell:]
    ):
        delta = -1
    else:
        return world
    
    for node in world.nodes:
        floor = max(MIN_DEFENSE, node.baseline_defense)
        node.defense_level = min(MAX_DEFENSE, max(floor, node.defense_level + delta))
    logger.debug(f"Тик {world.tick}: уровни защиты изменены на {delta:+d}")
    return world


def _acquire_target(world: WorldState) -> int:
    pool = world.healthy_ids() or [node.id for node in world.nodes]
    return pool[int(world.rng.integers(len(pool)))]


def _measure(world: WorldState) -> TickMetrics:
    node_count = len(world.nodes)
    infected = sum(1 for node in world.nodes if not node.healthy)
    return TickMetrics(
        tick=world.tick,
        infected_count=infected,
        healthy_count=node_count - infected,
        active_threats=sum(1 for t in world.threats if t.engaged),
        mean_defense=math.fsum(node.defense_level for node in world.nodes) / node_count,
        health=(node_count - infected) / node_count,
    )


def step(world: WorldState, spec: ScenarioSpec) -> TickMetrics:
    """
    Один тик симуляции в фиксированном порядке фаз
    
    Args:
        world: Состояние мира (меняется на месте)
        spec: Параметры сценария
    
    Returns:
        Метрики завершённого тика
    """
    if world.tick >= spec.tick_limit:
        raise UsageError(f"прогон завершён: тик {world.tick} из {spec.tick_limit}")
    
    # 1. Перезарядка и выбор целей
    for threat in world.threats:
        if threat.cooldown > 0:
            threat.cooldown -= 1
        if threat.cooldown > 0:
            continue
        if threat.kind is ThreatKind.PHISHING or threat.target is None:
            threat.target = _acquire_target(world)
    
    # 2. Атаки; цель, уже заражённая кем-то другим, простаивает
    for threat in world.threats:
        if not threat.engaged:
            continue
        node = world.nodes[threat.target]
        if node.healthy:
            resolve_attack_step(threat, node, spec, world.tick)
    
    # 3-5
    spread_malware(world, spec)
    control_centre_act(world, spec)
    if world.adaptive and spec.adaptation is not None and world.tick % spec.adaptation.adapt_interval == 0:
        adapt_defenses(world, spec.adaptation)
    
    # 6-7
    metrics = _measure(world)
    world.health_history.append(metrics.health)
    world.tick += 1
    return metrics


def run(spec: ScenarioSpec, seed: int) -> SimResult:
    """
    Полный прогон сценария до tick_limit
    
    Args:
        spec: Параметры сценария
        seed: Зерно генератора
    
    Returns:
        Временной ряд и сводка
    """
    world = init_world(spec, seed)
    series: List[TickMetrics] = [step(world, spec) for _ in range(spec.tick_limit)]
    summary = summarize(series, world)
    logger.debug(
        f"Прогон {spec.name} seed={seed}: пик {summary.peak_infected}, "
        f"итог {summary.final_infected}, среднее здоровье {summary.mean_health:.3f}"
    )
    return SimResult(
        scenario=spec.name,
        seed=seed,
        node_count=spec.node_count,
        series=series,
        summary=summary,
    )
