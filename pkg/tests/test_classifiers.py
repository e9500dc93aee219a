import math

import numpy as np
import pytest

from src.detect.classifiers import (
    DecisionTree,
    GaussianNaiveBayes,
    KNearestNeighbors,
    best_split,
    gini_impurity,
)


def _exhaustive_splits(X, y, n_classes, min_leaf):
    """Все допустимые разбиения: {(признак, порог): взвешенный Джини}"""
    n = len(y)
    result = {}
    for feature in range(X.shape[1]):
        values = sorted(set(X[:, feature]))
        for low, high in zip(values, values[1:]):
            threshold = low + (high - low) / 2
            left = y[X[:, feature] <= threshold]
            right = y[X[:, feature] > threshold]
            if len(left) < min_leaf or len(right) < min_leaf:
                continue
            weighted = sum(
                len(part) * gini_impurity(np.bincount(part, minlength=n_classes).astype(float))
                for part in (left, right)
            ) / n
            result[(feature, threshold)] = weighted
    return result


def test_gini_impurity():
    assert gini_impurity(np.array([5.0, 5.0])) == pytest.approx(0.5)
    assert gini_impurity(np.array([10.0, 0.0])) == 0.0
    assert gini_impurity(np.array([1.0, 1.0, 1.0])) == pytest.approx(2 / 3)
    assert gini_impurity(np.array([0.0, 0.0])) == 0.0


@pytest.mark.parametrize("seed", range(8))
@pytest.mark.parametrize("min_leaf", [1, 3])
def test_best_split_matches_exhaustive_search(seed, min_leaf):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(6, 21))
    X = rng.integers(0, 6, size=(n, 3)).astype(float)
    y = rng.integers(0, 3, size=n)

    splits = _exhaustive_splits(X, y, 3, min_leaf)
    found = best_split(X, y, 3, min_leaf)
    if not splits:
        assert found is None
        return
    best_value = min(splits.values())
    feature, threshold, weighted = found
    assert weighted == pytest.approx(best_value, abs=1e-12)
    assert splits[(feature, threshold)] == pytest.approx(best_value, abs=1e-12)
    # при равенстве побеждает меньший признак, затем меньший порог
    ties = sorted(key for key, value in splits.items() if abs(value - best_value) <= 1e-12)
    assert (feature, threshold) == ties[0]


def test_no_split_on_constant_features():
    X = np.ones((6, 2))
    y = np.array([0, 1, 0, 1, 0, 1])
    assert best_split(X, y, 2) is None


def test_tree_reproduces_single_informative_feature():
    y = np.array([0] * 10 + [1] * 10)
    X = np.column_stack([np.arange(20) % 2, y]).astype(float)

    tree = DecisionTree(max_depth=5, min_leaf=1).fit(X, y, 2)

    assert tree.depth == 1
    assert tree.feature[0] == 1
    assert tree.threshold[0] == 0.5
    np.testing.assert_array_equal(np.argmax(tree.predict_proba(X), axis=1), y)


def test_tree_leaf_scores_are_laplace_smoothed():
    X = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([0, 0, 0, 1])
    tree = DecisionTree(min_leaf=5).fit(X, y, 2)

    assert tree.depth == 0
    np.testing.assert_allclose(tree.predict_proba(X[:1]), [[4 / 6, 2 / 6]])


def test_tree_respects_max_depth():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(200, 4))
    y = rng.integers(0, 3, size=200)
    tree = DecisionTree(max_depth=3, min_leaf=2).fit(X, y, 3)
    assert tree.depth <= 3
    restored = DecisionTree.from_state(tree.to_state())
    np.testing.assert_array_equal(restored.predict_proba(X), tree.predict_proba(X))


def test_naive_bayes_matches_hand_computation():
    X = np.array([[0.0], [2.0], [4.0], [8.0]])
    y = np.array([0, 0, 1, 1])
    model = GaussianNaiveBayes().fit(X, y, 2)

    np.testing.assert_allclose(model.means, [[1.0], [6.0]])
    np.testing.assert_allclose(model.variances, [[1.0], [4.0]])

    a = math.exp(-2.0) / math.sqrt(2 * math.pi)
    b = math.exp(-9.0 / 8.0) / math.sqrt(8 * math.pi)
    proba = model.predict_proba(np.array([[3.0]]))[0]
    assert proba[0] == pytest.approx(a / (a + b), abs=1e-9)
    assert proba.sum() == pytest.approx(1.0, abs=1e-12)


def test_naive_bayes_floors_zero_variance():
    X = np.array([[1.0, 0.0], [1.0, 1.0], [5.0, 0.0], [5.0, 1.0]])
    y = np.array([0, 0, 1, 1])
    model = GaussianNaiveBayes(variance_floor=1e-3).fit(X, y, 2)
    assert model.variances[0, 0] == 1e-3
    proba = model.predict_proba(np.array([[1.0, 0.5], [5.0, 0.5]]))
    assert np.all(np.isfinite(proba))
    np.testing.assert_array_equal(np.argmax(proba, axis=1), [0, 1])


def test_knn_orders_neighbors_by_distance_then_index():
    X = np.array([[0.0], [1.0], [2.0], [10.0], [11.0], [12.0]])
    y = np.array([0, 0, 0, 1, 1, 1])
    model = KNearestNeighbors(k=3, chunk_size=2).fit(X, y, 2)

    np.testing.assert_array_equal(model.neighbors(np.array([[0.5], [11.0]])), [[0, 1, 2], [4, 3, 5]])
    np.testing.assert_allclose(model.predict_proba(np.array([[1.0]])), [[0.8, 0.2]])


def test_knn_with_fewer_points_than_k():
    X = np.array([[0.0], [4.0]])
    y = np.array([0, 1])
    model = KNearestNeighbors(k=5).fit(X, y, 2)
    np.testing.assert_allclose(model.predict_proba(np.array([[1.0]])), [[0.5, 0.5]])
    np.testing.assert_array_equal(model.neighbors(np.array([[3.0]])), [[1, 0]])


def test_all_classifiers_return_distributions():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(60, 3))
    y = np.repeat([0, 1, 2], 20)
    for model in (DecisionTree(min_leaf=2), GaussianNaiveBayes(), KNearestNeighbors()):
        proba = model.fit(X, y, 3).predict_proba(X)
        assert proba.shape == (60, 3)
        np.testing.assert_allclose(proba.sum(axis=1), 1.0)
        assert np.all(proba > 0)


def test_exhaustive_oracle_sanity():
    X = np.array([[0.0], [0.0], [1.0], [1.0]])
    y = np.array([0, 0, 1, 1])
    assert _exhaustive_splits(X, y, 2, 1) == {(0, 0.5): 0.0}
    assert _exhaustive_splits(X, y, 2, 3) == {}
