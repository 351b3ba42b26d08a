"""Exact additive attributions for the tree models.

Walks every root-to-leaf path once, maintaining the proportion of feature
subsets that would flow down the path with and without each split feature.
The result is the exact Shapley value of the path-dependent game where an
absent feature falls through a split in proportion to the training samples
that took each side. Cost is polynomial in tree size, and the values sum to
prediction minus the training-weighted mean output.
"""

from __future__ import annotations

import numpy as np

from .trees import GradientBoostedTrees, NaiveLast, RandomForest, RegressionTree, TreeArrays


class _Path:
    """Ancestor split features with subset-flow fractions and permutation weights.

    ``zeros[i]`` is the fraction of paths flowing down when feature ``feats[i]``
    is absent, ``ones[i]`` when present (0 on a side the point does not take),
    and ``weights`` holds one permutation weight per represented subset size.
    """

    __slots__ = ("feats", "zeros", "ones", "weights")

    def __init__(self, feats, zeros, ones, weights):
        self.feats = feats
        self.zeros = zeros
        self.ones = ones
        self.weights = weights

    @classmethod
    def empty(cls) -> "_Path":
        return cls([], [], [], [])

    def extended(self, feature: int, zero: float, one: float) -> "_Path":
        size = len(self.weights)
        w = self.weights + [1.0 if size == 0 else 0.0]
        for i in range(size - 1, -1, -1):
            w[i + 1] += one * w[i] * (i + 1) / (size + 1)
            w[i] = zero * w[i] * (size - i) / (size + 1)
        return _Path(
            self.feats + [feature], self.zeros + [zero], self.ones + [one], w
        )

    def unwound(self, i: int) -> "_Path":
        size = len(self.weights)
        one, zero = self.ones[i], self.zeros[i]
        w = self.weights[:-1]
        carry = self.weights[-1]
        for j in range(size - 2, -1, -1):
            if one != 0.0:
                keep = w[j]
                w[j] = carry * size / ((j + 1) * one)
                carry = keep - w[j] * zero * (size - 1 - j) / size
            else:
                w[j] = w[j] * size / (zero * (size - 1 - j))
        drop = lambda xs: xs[:i] + xs[i + 1:]
        return _Path(drop(self.feats), drop(self.zeros), drop(self.ones), w)

    def unwound_weight_sum(self, i: int) -> float:
        return sum(self.unwound(i).weights)

    def find(self, feature: int) -> int | None:
        for i in range(1, len(self.feats)):
            if self.feats[i] == feature:
                return i
        return None


def single_tree_shap(tree: TreeArrays, x: np.ndarray) -> np.ndarray:
    """Per-feature attributions for one tree at one point."""
    x = np.asarray(x, dtype=float)
    phi = np.zeros(len(x))

    def recurse(node: int, path: _Path, zero: float, one: float, feature: int):
        path = path.extended(feature, zero, one)
        if tree.is_leaf(node):
            for i in range(1, len(path.feats)):
                scale = path.unwound_weight_sum(i)
                phi[path.feats[i]] += (
                    scale * (path.ones[i] - path.zeros[i]) * tree.value[node]
                )
            return
        split = int(tree.feature[node])
        left, right = int(tree.children_left[node]), int(tree.children_right[node])
        hot, cold = (left, right) if x[split] <= tree.threshold[node] else (right, left)
        zero_in, one_in = 1.0, 1.0
        seen = path.find(split)
        if seen is not None:
            zero_in, one_in = path.zeros[seen], path.ones[seen]
            path = path.unwound(seen)
        here = tree.node_weight[node]
        recurse(hot, path, zero_in * tree.node_weight[hot] / here, one_in, split)
        recurse(cold, path, zero_in * tree.node_weight[cold] / here, 0.0, split)

    recurse(0, _Path.empty(), 1.0, 1.0, -1)
    return phi


def _ensemble_terms(model):
    """Each tree model as (per-tree scale, tree list, additive offset)."""
    if isinstance(model, RegressionTree):
        return 1.0, [model.tree_], 0.0
    if isinstance(model, RandomForest):
        return 1.0 / len(model.trees_), model.trees_, 0.0
    if isinstance(model, GradientBoostedTrees):
        return model.learning_rate, model.trees_, model.init_
    raise TypeError(f"no attribution rule for {type(model).__name__}")


def expected_value(model) -> float:
    """Model output averaged over its training background."""
    scale, trees, offset = _ensemble_terms(model)
    return offset + scale * sum(tree.expected_value() for tree in trees)


def shap_values(model, x: np.ndarray) -> tuple[float, np.ndarray]:
    """(base value, attributions) for one input; base + sum equals the prediction."""
    bases, phi = shap_matrix(model, np.asarray(x, dtype=float)[None, :])
    return float(bases[0]), phi[0]


def shap_matrix(model, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-point (base values, attribution rows) for a batch of inputs.

    For the persistence baseline there is no structure to attribute, so the
    base is the prediction itself and every attribution is zero.
    """
    X = np.asarray(X, dtype=float)
    if isinstance(model, NaiveLast):
        return model.predict(X), np.zeros_like(X)
    scale, trees, offset = _ensemble_terms(model)
    phi = np.zeros_like(X, dtype=float)
    base = offset
    for tree in trees:
        base += scale * tree.expected_value()
        for row in range(len(X)):
            phi[row] += scale * single_tree_shap(tree, X[row])
    return np.full(len(X), base), phi
