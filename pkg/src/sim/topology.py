"""Случайная геометрическая топология сети"""
from typing import List

import networkx as nx
import numpy as np


def build_topology(node_count: int, neighbor_count: int, rng: np.random.Generator) -> List[List[int]]:
    """
    Строит связный граф: k ближайших соседей на случайных точках плоскости,
    затем компоненты сшиваются кратчайшими мостами
    
    Args:
        node_count: Количество узлов
        neighbor_count: Количество ближайших соседей на узел
        rng: Генератор случайных чисел мира
    
    Returns:
        Отсортированные списки соседей по id узла
    """
    graph = nx.Graph()
    graph.add_nodes_from(range(node_count))
    if node_count < 2:
        return [[] for _ in range(node_count)]
    
    positions = rng.random((node_count, 2))
    deltas = positions[:, None, :] - positions[None, :, :]
    distances = np.sqrt((deltas ** 2).sum(axis=2))
    
    k = min(neighbor_count, node_count - 1)
    for node_id in range(node_count):
        order = np.argsort(distances[node_id], kind="stable")
        nearest = [int(j) for j in order if j != node_id][:k]
        graph.add_edges_from((node_id, j) for j in nearest)
    
    # Сшиваем компоненты с компонентой узла 0
    while not nx.is_connected(graph):
        anchored = np.zeros(node_count, dtype=bool)
        anchored[list(nx.node_connected_component(graph, 0))] = True
        bridge = np.where(anchored[:, None] & ~anchored[None, :], distances, np.inf)
        a, b = np.unravel_index(int(np.argmin(bridge)), bridge.shape)
        graph.add_edge(int(a), int(b))
    
    return [sorted(int(j) for j in graph.neighbors(node_id)) for node_id in range(node_count)]
