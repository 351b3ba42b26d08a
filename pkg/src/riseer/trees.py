"""Regression trees and the ensembles built on them.

Trees are grown greedily with exact variance-reduction splits and stored as
flat parallel arrays, which is what the attribution code walks. Everything
is deterministic under a fixed seed: candidate features are scanned in index
order, thresholds left to right, and ties keep the first winner.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, column_or_1d

LEAF = -1

# gains this small are float crumbs from the cumulative sums, not structure
_MIN_GAIN = 1e-12


@dataclass(frozen=True)
class TreeArrays:
    """One fitted tree as parallel node arrays, root at index 0.

    ``feature`` is ``LEAF`` on leaves; ``node_weight`` carries the training
    sample count that reached each node, which downstream attribution uses
    as the background distribution.
    """

    children_left: np.ndarray
    children_right: np.ndarray
    feature: np.ndarray
    threshold: np.ndarray
    value: np.ndarray
    node_weight: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.value)

    def is_leaf(self, node: int) -> bool:
        return self.children_left[node] == LEAF

    def leaf_indices(self, X: np.ndarray) -> np.ndarray:
        idx = np.zeros(len(X), dtype=np.int64)
        while True:
            feat = self.feature[idx]
            live = feat >= 0
            if not live.any():
                return idx
            rows = np.flatnonzero(live)
            go_left = X[rows, feat[live]] <= self.threshold[idx[live]]
            idx[rows] = np.where(
                go_left, self.children_left[idx[live]], self.children_right[idx[live]]
            )

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.leaf_indices(X)]

    def expected_value(self) -> float:
        """Training-weighted mean of the leaf values."""
        leaves = self.children_left == LEAF
        weights = self.node_weight[leaves]
        return float(np.dot(self.value[leaves], weights) / weights.sum())


def _best_split(Xn: np.ndarray, y: np.ndarray, min_leaf: int):
    """Best (score, feature, threshold) over all columns of a node block, or None.

    Score is sum(yL)^2/nL + sum(yR)^2/nR, which is equivalent to minimizing
    the summed child squared error because the total sum of squares is fixed
    for the node. Ties keep the lowest feature index, then the leftmost
    boundary, so the search is order-independent and reproducible.
    """
    n, d = Xn.shape
    if n < 2 * min_leaf:
        return None
    order = np.argsort(Xn, axis=0, kind="stable")
    xs = np.take_along_axis(Xn, order, axis=0)
    left_sum = np.cumsum(y[order], axis=0)[:-1]
    n_left = np.arange(1, n, dtype=float)[:, None]
    n_right = n - n_left
    valid = (xs[1:] > xs[:-1]) & (n_left >= min_leaf) & (n_right >= min_leaf)
    if not valid.any():
        return None
    score = np.where(
        valid, left_sum**2 / n_left + (y.sum() - left_sum) ** 2 / n_right, -np.inf
    )
    flat = int(np.argmax(score.T))
    feature, pos = divmod(flat, n - 1)
    return (
        float(score[pos, feature]),
        feature,
        float((xs[pos, feature] + xs[pos + 1, feature]) / 2.0),
    )


def grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    max_depth: int | None = None,
    min_samples_split: int = 2,
    min_samples_leaf: int = 1,
    max_features: int | None = None,
    rng: np.random.Generator | None = None,
) -> TreeArrays:
    """Fit one regression tree; preorder depth-first node layout."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n_features = X.shape[1]
    if max_features is not None and rng is None:
        rng = np.random.default_rng(0)
    left, right, feat, thresh, value, weight = [], [], [], [], [], []

    def new_node(rows: np.ndarray) -> int:
        node = len(value)
        left.append(LEAF)
        right.append(LEAF)
        feat.append(LEAF)
        thresh.append(np.nan)
        value.append(float(y[rows].mean()))
        weight.append(float(len(rows)))
        return node

    def build(rows: np.ndarray, depth: int) -> int:
        node = new_node(rows)
        n = len(rows)
        if (
            (max_depth is not None and depth >= max_depth)
            or n < min_samples_split
            or np.ptp(y[rows]) == 0.0
        ):
            return node
        if max_features is not None and max_features < n_features:
            candidates = np.sort(rng.permutation(n_features)[:max_features])
        else:
            candidates = np.arange(n_features)
        base = y[rows].sum() ** 2 / n
        found = _best_split(X[np.ix_(rows, candidates)], y[rows], min_samples_leaf)
        if found is None:
            return node
        score, f_local, cut = found
        if score <= base + _MIN_GAIN * max(1.0, abs(base)):
            return node
        f = int(candidates[f_local])
        go_left = X[rows, f] <= cut
        feat[node] = f
        thresh[node] = cut
        left[node] = build(rows[go_left], depth + 1)
        right[node] = build(rows[~go_left], depth + 1)
        return node

    build(np.arange(len(y)), 0)
    return TreeArrays(
        children_left=np.array(left, dtype=np.int64),
        children_right=np.array(right, dtype=np.int64),
        feature=np.array(feat, dtype=np.int64),
        threshold=np.array(thresh, dtype=float),
        value=np.array(value, dtype=float),
        node_weight=np.array(weight, dtype=float),
    )


class RegressionTree(BaseEstimator, RegressorMixin):
    """Single CART-style regression tree with exact greedy splits."""

    def __init__(self, max_depth=None, min_samples_split=2, min_samples_leaf=1,
                 max_features=None, random_state=None):
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.random_state = random_state

    def fit(self, X, y):
        X = check_array(X)
        y = column_or_1d(y)
        self.n_features_in_ = X.shape[1]
        self.tree_ = grow_tree(
            X, y,
            max_depth=self.max_depth,
            min_samples_split=self.min_samples_split,
            min_samples_leaf=self.min_samples_leaf,
            max_features=self._resolve_max_features(X.shape[1]),
            rng=np.random.default_rng(self.random_state),
        )
        return self

    def _resolve_max_features(self, n_features: int):
        if self.max_features is None:
            return None
        if self.max_features == "sqrt":
            return max(1, int(np.sqrt(n_features)))
        return int(self.max_features)

    def predict(self, X):
        check_is_fitted(self, "tree_")
        return self.tree_.predict(check_array(X))


class RandomForest(BaseEstimator, RegressorMixin):
    """Bagged regression trees averaged at prediction time.

    Each tree gets its own child seed, so fits could run in parallel without
    changing the result.
    """

    def __init__(self, n_estimators=100, max_depth=6, min_samples_leaf=1,
                 max_features="sqrt", random_state=None):
        self.n_estimators = n_estimators
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf
        self.max_features = max_features
        self.random_state = random_state

    def fit(self, X, y):
        X = check_array(X)
        y = column_or_1d(y)
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be positive")
        self.n_features_in_ = X.shape[1]
        if self.max_features == "sqrt":
            k = max(1, int(np.sqrt(X.shape[1])))
        elif self.max_features is None:
            k = None
        else:
            k = int(self.max_features)
        seeds = np.random.SeedSequence(self.random_state).spawn(self.n_estimators)
        self.trees_ = []
        for seed in seeds:
            rng = np.random.default_rng(seed)
            rows = rng.integers(0, len(y), size=len(y))
            self.trees_.append(
                grow_tree(
                    X[rows], y[rows],
                    max_depth=self.max_depth,
                    min_samples_leaf=self.min_samples_leaf,
                    max_features=k,
                    rng=rng,
                )
            )
        return self

    def predict(self, X):
        check_is_fitted(self, "trees_")
        X = check_array(X)
        total = np.zeros(len(X))
        for tree in self.trees_:
            total += tree.predict(X)
        return total / len(self.trees_)


class GradientBoostedTrees(BaseEstimator, RegressorMixin):
    """Stagewise least-squares boosting with shrinkage.

    The prediction is the training mean plus learning_rate times the sum of
    the stage trees, each fit to the residuals left by the previous stages.
    """

    def __init__(self, n_estimators=100, learning_rate=0.1, max_depth=3,
                 subsample=1.0, min_samples_leaf=1, random_state=None):
        self.n_estimators = n_estimators
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.subsample = subsample
        self.min_samples_leaf = min_samples_leaf
        self.random_state = random_state

    def fit(self, X, y):
        X = check_array(X)
        y = column_or_1d(y)
        if not 0.0 < self.subsample <= 1.0:
            raise ValueError("subsample must be in (0, 1]")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        self.n_features_in_ = X.shape[1]
        self.init_ = float(y.mean())
        rng = np.random.default_rng(self.random_state)
        residual = y - self.init_
        self.trees_ = []
        n = len(y)
        n_sub = max(1, round(self.subsample * n))
        for _ in range(self.n_estimators):
            rows = np.sort(rng.choice(n, size=n_sub, replace=False)) if n_sub < n \
                else np.arange(n)
            tree = grow_tree(
                X[rows], residual[rows],
                max_depth=self.max_depth,
                min_samples_leaf=self.min_samples_leaf,
                rng=rng,
            )
            residual -= self.learning_rate * tree.predict(X)
            self.trees_.append(tree)
        return self

    def predict(self, X):
        check_is_fitted(self, "trees_")
        X = check_array(X)
        total = np.full(len(X), self.init_)
        for tree in self.trees_:
            total += self.learning_rate * tree.predict(X)
        return total


class NaiveLast(BaseEstimator, RegressorMixin):
    """Persistence baseline: predicts the most recent count in the window.

    Training data is ignored; the supervised layout puts the latest count in
    the last input column.
    """

    def fit(self, X, y=None):
        X = check_array(X)
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "n_features_in_")
        return check_array(X)[:, -1].astype(float)
