"""Классификаторы на numpy: дерево решений, гауссовский наивный Байес, k-NN"""
from typing import Any, Dict, Optional, Tuple

import numpy as np


def gini_impurity(counts: np.ndarray) -> float:
    """Индекс Джини по вектору количеств классов"""
    total = counts.sum()
    if total == 0:
        return 0.0
    probs = counts / total
    return float(1.0 - np.sum(probs ** 2))


def best_split(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    min_leaf: int = 1,
) -> Optional[Tuple[int, float, float]]:
    """
    Лучшее разбиение по взвешенному индексу Джини
    
    Пороги берутся посередине между соседними различными значениями,
    объект идёт влево при x <= порога. При равенстве выбирается
    признак с меньшим индексом, затем меньший порог.
    
    Args:
        X: Матрица признаков
        y: Индексы классов
        n_classes: Число классов
        min_leaf: Минимум объектов в каждом потомке
    
    Returns:
        (признак, порог, взвешенный Джини) или None, если разбиения нет
    """
    n = len(y)
    best: Optional[Tuple[int, float, float]] = None
    if n < 2 * min_leaf:
        return None
    onehot = np.eye(n_classes)[y]
    left_sizes = np.arange(1, n, dtype=float)
    right_sizes = n - left_sizes
    sizes_ok = (left_sizes >= min_leaf) & (right_sizes >= min_leaf)
    
    for feature in range(X.shape[1]):
        order = np.argsort(X[:, feature], kind="stable")
        xs = X[order, feature]
        cumulative = np.cumsum(onehot[order], axis=0)
        left = cumulative[:-1]
        right = cumulative[-1] - left
        valid = sizes_ok & (xs[:-1] < xs[1:])
        if not valid.any():
            continue
        weighted = (
            n
            - np.sum(left ** 2, axis=1) / left_sizes
            - np.sum(right ** 2, axis=1) / right_sizes
        ) / n
        weighted = np.where(valid, weighted, np.inf)
        # равные с точностью до округления значения считаются равными
        i = int(np.flatnonzero(weighted <= weighted.min() + 1e-12)[0])
        if best is None or weighted[i] < best[2] - 1e-12:
            threshold = xs[i] + (xs[i + 1] - xs[i]) / 2
            if threshold >= xs[i + 1]:
                threshold = xs[i]
            best = (feature, float(threshold), float(weighted[i]))
    return best


class DecisionTree:
    """
    Дерево решений CART с критерием Джини
    
    Узлы хранятся в плоских массивах; скор листа сглажен по Лапласу:
    (count + 1) / (n + C).
    """
    
    name = "decision_tree"
    
    def __init__(self, max_depth: int = 12, min_leaf: int = 5):
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.n_classes = 0
        self.feature = np.zeros(0, dtype=int)
        self.threshold = np.zeros(0, dtype=float)
        self.left = np.zeros(0, dtype=int)
        self.right = np.zeros(0, dtype=int)
        self.counts = np.zeros((0, 0), dtype=float)
    
    def fit(self, X: np.ndarray, y: np.ndarray, n_classes: int) -> "DecisionTree":
        self.n_classes = n_classes
        feature, threshold, left, right, counts = [], [], [], [], []
        
        def add_node(indices: np.ndarray) -> int:
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            counts.append(np.bincount(y[indices], minlength=n_classes).astype(float))
            return len(feature) - 1
        
        root = add_node(np.arange(len(y)))
        stack = [(root, np.arange(len(y)), 0)]
        while stack:
            node, indices, depth = stack.pop()
            node_counts = counts[node]
            if depth >= self.max_depth or np.count_nonzero(node_counts) <= 1:
                continue
            split = best_split(X[indices], y[indices], n_classes, self.min_leaf)
            if split is None:
                continue
            f, t, weighted = split
            if gini_impurity(node_counts) - weighted <= 1e-12:
                continue
            goes_left = X[indices, f] <= t
            feature[node] = f
            threshold[node] = t
            left_node = add_node(indices[goes_left])
            right_node = add_node(indices[~goes_left])
            left[node] = left_node
            right[node] = right_node
            stack.append((right_node, indices[~goes_left], depth + 1))
            stack.append((left_node, indices[goes_left], depth + 1))
        
        self.feature = np.array(feature, dtype=int)
        self.threshold = np.array(threshold, dtype=float)
        self.left = np.array(left, dtype=int)
        self.right = np.array(right, dtype=int)
        self.counts = np.array(counts, dtype=float)
        return self
    
    @property
    def depth(self) -> int:
        depths = np.zeros(len(self.feature), dtype=int)
        for node in range(len(self.feature)):
            if self.feature[node] >= 0:
                depths[self.left[node]] = depths[node] + 1
                depths[self.right[node]] = depths[node] + 1
        return int(depths.max()) if len(depths) else 0
    
    def apply(self, X: np.ndarray) -> np.ndarray:
        """Индексы листьев для каждой строки"""
        nodes = np.zeros(len(X), dtype=int)
        active = self.feature[nodes] >= 0
        while active.any():
            rows = np.flatnonzero(active)
            current = nodes[rows]
            go_left = X[rows, self.feature[current]] <= self.threshold[current]
            nodes[rows] = np.where(go_left, self.left[current], self.right[current])
            active = self.feature[nodes] >= 0
        return nodes
    
    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        leaf_counts = self.counts[self.apply(X)]
        return (leaf_counts + 1.0) / (leaf_counts.sum(axis=1, keepdims=True) + self.n_classes)
    
    def to_state(self) -> Dict[str, Any]:
        return {
            "max_depth": self.max_depth,
            "min_leaf": self.min_leaf,
            "n_classes": self.n_classes,
            "feature": self.feature.tolist(),
            "threshold": self.threshold.tolist(),
            "left": self.left.tolist(),
            "right": self.right.tolist(),
            "counts": self.counts.tolist(),
        }
    
    @classmethod
    def from_state(cls, state: Dict[str, Any]) -> "DecisionTree":
        tree = cls(max_depth=int(state["max_depth"]), min_leaf=int(state["min_leaf"]))
        tree.n_classes = int(state["n_classes"])
        tree.feature = np.array(state["feature"], dtype=int)
        tree.threshold = np.array(state["threshold"], dtype=float)
        tree.left = np.array(state["left"], dtype=int)
        tree.right = np.array(state["right"], dtype=int)
        tree.counts = np.array(state["counts"], dtype=float).reshape(len(tree.feature), tree.n_classes)
        return tree


class GaussianNaiveBayes:
    """Гауссовский наивный Байес с нижней границей дисперсии"""
    
    name = "naive_bayes"
    
    def __init__(self, variance_floor: float = 1e-9):
        self.variance_floor = variance_floor
        self.log_priors = np.zeros(0)
        self.means = np.zeros((0, 0))
        self.variances = np.zeros((0, 0))
    
    def fit(self, X: np.ndarray, y: np.ndarray, n_classes: int) -> "GaussianNaiveBayes":
        counts = np.bincount(y, minlength=n_classes).astype(float)
        self.log_priors = np.log(counts / counts.sum())
        self.means = np.zeros((n_classes, X.shape[1]))
        self.variances = np.zeros((n_classes, X.shape[1]))
        for c in range(n_classes):
            rows = X[y == c]
            self.means[c] = rows.mean(axis=0)
            self.variances[c] = np.maximum(rows.var(axis=0), self.variance_floor)
        return self
    
    def joint_log_likelihood(self, X: np.ndarray) -> np.ndarray:
        log_norm = -0.5 * np.sum(np.log(2.0 * np.pi * self.variances), axis=1)
        jll = np.empty((len(X), len(self.log_priors)))
        for c in range(len(self.log_priors)):
            sq = ((X - self.means[c]) ** 2) / self.variances[c]
            jll[:, c] = self.log_priors[c] + log_norm[c] - 0.5 * sq.sum(axis=1)
        return jll
    
    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        jll = self.joint_log_likelihood(X)
        jll -= jll.max(axis=1, keepdims=True)
        probs = np.exp(jll)
        return probs / probs.sum(axis=1, keepdims=True)
    
    def to_state(self) -> Dict[str, Any]:
        return {
            "variance_floor": self.variance_floor,
            "log_priors": self.log_priors.tolist(),
            "means": self.means.tolist(),
            "variances": self.variances.tolist(),
        }
    
    @classmethod
    def from_state(cls, state: Dict[str, Any]) -> "GaussianNaiveBayes":
        model = cls(variance_floor=float(state["variance_floor"]))
        model.log_priors = np.array(state["log_priors"], dtype=float)
        model.means = np.array(state["means"], dtype=float)
        model.variances = np.array(state["variances"], dtype=float)
        return model


class KNearestNeighbors:
    """k ближайших соседей по евклидову расстоянию; скоры (голоса + 1) / (k + C)"""
    
    name = "knn"
    
    def __init__(self, k: int = 5, chunk_size: int = 256):
        self.k = k
        self.chunk_size = chunk_size
        self.n_classes = 0
        self.X = np.zeros((0, 0))
        self.y = np.zeros(0, dtype=int)
    
    def fit(self, X: np.ndarray, y: np.ndarray, n_classes: int) -> "KNearestNeighbors":
        self.X = np.asarray(X, dtype=float)
        self.y = np.asarray(y, dtype=int)
        self.n_classes = n_classes
        return self
    
    def neighbors(self, X: np.ndarray) -> np.ndarray:
        """Индексы k ближайших обучающих объектов по возрастанию расстояния, затем индекса"""
        k = min(self.k, len(self.X))
        train_sq = np.sum(self.X ** 2, axis=1)
        result = np.empty((len(X), k), dtype=int)
        for start in range(0, len(X), self.chunk_size):
            block = X[start:start + self.chunk_size]
            dist = np.sum(block ** 2, axis=1)[:, None] + train_sq[None, :] - 2.0 * block @ self.X.T
            np.maximum(dist, 0.0, out=dist)
            if k < len(self.X):
                candidates = np.argpartition(dist, k - 1, axis=1)[:, :k]
            else:
                candidates = np.tile(np.arange(len(self.X)), (len(block), 1))
            for row in range(len(block)):
                cand = candidates[row]
                order = np.lexsort((cand, dist[row, cand]))
                result[start + row] = cand[order]
        return result
    
    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        k = min(self.k, len(self.X))
        labels = self.y[self.neighbors(X)]
        votes = np.zeros((len(X), self.n_classes))
        for c in range(self.n_classes):
            votes[:, c] = np.sum(labels == c, axis=1)
        return (votes + 1.0) / (k + self.n_classes)
    
    def to_state(self) -> Dict[str, Any]:
        return {
            "k": self.k,
            "n_classes": self.n_classes,
            "X": self.X.tolist(),
            "y": self.y.tolist(),
        }
    
    @classmethod
    def from_state(cls, state: Dict[str, Any]) -> "KNearestNeighbors":
        model = cls(k=int(state["k"]))
        model.n_classes = int(state["n_classes"])
        model.y = np.array(state["y"], dtype=int)
        model.X = np.array(state["X"], dtype=float) if len(model.y) else np.zeros((0, 0))
        return model


CLASSIFIERS = {
    DecisionTree.name: DecisionTree,
    GaussianNaiveBayes.name: GaussianNaiveBayes,
    KNearestNeighbors.name: KNearestNeighbors,
}
