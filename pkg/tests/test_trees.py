import numpy as np
import pytest

from riseer.trees import (
    LEAF,
    GradientBoostedTrees,
    NaiveLast,
    RandomForest,
    RegressionTree,
    TreeArrays,
    grow_tree,
)
from riseer.treeshap import expected_value, shap_matrix, shap_values, single_tree_shap

from oracles import path_shapley_oracle, shapley_oracle


def stump(feature, threshold, left_value, right_value, left_n, right_n):
    n = left_n + right_n
    root_value = (left_value * left_n + right_value * right_n) / n
    return TreeArrays(
        children_left=np.array([1, LEAF, LEAF]),
        children_right=np.array([2, LEAF, LEAF]),
        feature=np.array([feature, LEAF, LEAF]),
        threshold=np.array([threshold, np.nan, np.nan]),
        value=np.array([root_value, left_value, right_value], dtype=float),
        node_weight=np.array([n, left_n, right_n], dtype=float),
    )


class TestGrowTree:
    def test_step_data_split(self):
        X = np.array([[1.0], [2.0], [3.0], [4.0]])
        y = np.array([0.0, 0.0, 1.0, 1.0])
        tree = grow_tree(X, y, max_depth=1)
        assert tree.feature[0] == 0
        assert tree.threshold[0] == 2.5
        assert tree.predict(X).tolist() == [0.0, 0.0, 1.0, 1.0]

    def test_constant_targets_stay_one_leaf(self):
        X = np.arange(10.0).reshape(-1, 1)
        tree = grow_tree(X, np.full(10, 3.7), max_depth=5)
        assert tree.n_nodes == 1
        assert tree.value[0] == pytest.approx(3.7)

    def test_unbounded_depth_fits_distinct_points_exactly(self):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(30, 2))
        y = rng.normal(size=30)
        tree = grow_tree(X, y)
        assert np.allclose(tree.predict(X), y)

    def test_min_samples_leaf_respected(self):
        rng = np.random.default_rng(4)
        X = rng.normal(size=(50, 3))
        y = rng.normal(size=50)
        tree = grow_tree(X, y, min_samples_leaf=5)
        leaves = tree.children_left == LEAF
        assert tree.node_weight[leaves].min() >= 5

    def test_node_weights_conserve_samples(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(40, 2))
        y = rng.normal(size=40)
        tree = grow_tree(X, y, max_depth=3)
        leaves = tree.children_left == LEAF
        assert tree.node_weight[0] == 40
        assert tree.node_weight[leaves].sum() == 40

    def test_predict_matches_slow_descent(self):
        rng = np.random.default_rng(6)
        X = rng.normal(size=(60, 3))
        y = rng.normal(size=60)
        tree = grow_tree(X, y, max_depth=4)
        probes = rng.normal(size=(25, 3))

        def slow(row):
            node = 0
            while tree.feature[node] >= 0:
                if row[tree.feature[node]] <= tree.threshold[node]:
                    node = tree.children_left[node]
                else:
                    node = tree.children_right[node]
            return tree.value[node]

        assert np.array_equal(tree.predict(probes), [slow(r) for r in probes])

    def test_expected_value_is_training_mean(self):
        rng = np.random.default_rng(7)
        X = rng.normal(size=(40, 2))
        y = rng.normal(size=40)
        tree = grow_tree(X, y, max_depth=3)
        assert tree.expected_value() == pytest.approx(y.mean(), abs=1e-12)


class TestEnsembles:
    @pytest.fixture
    def trend(self):
        rng = np.random.default_rng(11)
        X = rng.normal(size=(200, 5))
        y = 3.0 * X[:, 0] - 2.0 * X[:, 2] + 0.1 * rng.normal(size=200)
        return X, y

    def test_single_pair_predicts_that_target(self):
        X = np.array([[1.0, 2.0]])
        y = np.array([7.5])
        for model in (RegressionTree(), RandomForest(n_estimators=5, random_state=0),
                      GradientBoostedTrees(n_estimators=5, random_state=0)):
            model.fit(X, y)
            assert model.predict(np.array([[9.0, -4.0]]))[0] == pytest.approx(7.5)

    def test_fit_beats_mean_predictor_on_training_data(self, trend):
        X, y = trend
        for model in (RegressionTree(max_depth=4),
                      RandomForest(n_estimators=20, random_state=1),
                      GradientBoostedTrees(n_estimators=50, random_state=1)):
            mse = np.mean((model.fit(X, y).predict(X) - y) ** 2)
            assert mse <= y.var()

    def test_seeded_determinism(self, trend):
        X, y = trend
        for make in (lambda: RandomForest(n_estimators=10, random_state=42),
                     lambda: GradientBoostedTrees(n_estimators=10, subsample=0.7,
                                                  random_state=42)):
            a = make().fit(X, y).predict(X)
            b = make().fit(X, y).predict(X)
            assert np.array_equal(a, b)

    def test_forest_is_mean_of_trees(self, trend):
        X, y = trend
        forest = RandomForest(n_estimators=7, random_state=3).fit(X, y)
        stacked = np.mean([t.predict(X) for t in forest.trees_], axis=0)
        assert np.allclose(forest.predict(X), stacked)

    def test_boosting_is_shrunken_stage_sum(self, trend):
        X, y = trend
        gbt = GradientBoostedTrees(n_estimators=8, random_state=3).fit(X, y)
        total = gbt.init_ + 0.1 * np.sum([t.predict(X) for t in gbt.trees_], axis=0)
        assert np.allclose(gbt.predict(X), total)

    def test_gbt_beats_persistence_on_trend(self):
        months = np.arange(80.0)
        series = 100.0 + 2.0 * months + 10.0 * np.sin(months * 2 * np.pi / 12)
        X = np.stack([series[i:i + 4] for i in range(len(series) - 4)])
        y = series[4:]
        gbt = GradientBoostedTrees(n_estimators=80, max_depth=3, random_state=0)
        gbt_err = np.abs(gbt.fit(X, y).predict(X) - y) / y
        naive_err = np.abs(NaiveLast().fit(X, y).predict(X) - y) / y
        assert gbt_err.mean() < naive_err.mean()

    def test_naive_last_returns_last_column(self):
        X = np.array([[1.0, 2.0, 3.0], [9.0, 8.0, 7.0]])
        assert NaiveLast().fit(X).predict(X).tolist() == [3.0, 7.0]

    def test_parameter_validation(self):
        X, y = np.ones((4, 2)), np.ones(4)
        with pytest.raises(ValueError):
            GradientBoostedTrees(subsample=0.0).fit(X, y)
        with pytest.raises(ValueError):
            GradientBoostedTrees(learning_rate=0.0).fit(X, y)
        with pytest.raises(ValueError):
            RandomForest(n_estimators=0).fit(X, y)

    def test_get_params_round_trip(self):
        gbt = GradientBoostedTrees(n_estimators=17, learning_rate=0.05)
        clone = GradientBoostedTrees(**gbt.get_params())
        assert clone.get_params() == gbt.get_params()


class TestSingleTreeShap:
    def test_balanced_stump_attribution(self):
        tree = stump(0, 0.5, 10.0, 20.0, 2, 2)
        assert tree.expected_value() == 15.0
        low = single_tree_shap(tree, np.array([0.0, 9.0, 9.0]))
        high = single_tree_shap(tree, np.array([1.0, 9.0, 9.0]))
        assert low.tolist() == [-5.0, 0.0, 0.0]
        assert high.tolist() == [5.0, 0.0, 0.0]

    def test_unbalanced_stump_matches_exhaustive(self):
        tree = stump(1, 0.0, -4.0, 8.0, 3, 1)
        for x in (np.array([0.0, -1.0]), np.array([0.0, 1.0])):
            fast = single_tree_shap(tree, x)
            slow = path_shapley_oracle(tree, x)
            assert np.allclose(fast, slow, atol=1e-12)

    def test_single_leaf_tree_attributes_nothing(self):
        tree = TreeArrays(
            children_left=np.array([LEAF]),
            children_right=np.array([LEAF]),
            feature=np.array([LEAF]),
            threshold=np.array([np.nan]),
            value=np.array([4.2]),
            node_weight=np.array([10.0]),
        )
        assert single_tree_shap(tree, np.zeros(3)).tolist() == [0.0, 0.0, 0.0]

    def test_deep_tree_matches_path_oracle(self):
        rng = np.random.default_rng(21)
        X = rng.normal(size=(120, 5))
        y = rng.normal(size=120)
        tree = grow_tree(X, y, max_depth=3)
        assert (tree.feature >= 0).sum() >= 3
        for row in X[:8]:
            assert np.allclose(
                single_tree_shap(tree, row), path_shapley_oracle(tree, row), atol=1e-9
            )

    def test_repeated_feature_on_path(self):
        # x0 splits twice along the left spine, exercising the unwind step
        tree = TreeArrays(
            children_left=np.array([1, 2, LEAF, LEAF, LEAF]),
            children_right=np.array([4, 3, LEAF, LEAF, LEAF]),
            feature=np.array([0, 0, LEAF, LEAF, LEAF]),
            threshold=np.array([5.0, 2.0, np.nan, np.nan, np.nan]),
            value=np.array([0.0, 0.0, 1.0, 3.0, 9.0]),
            node_weight=np.array([10.0, 6.0, 2.0, 4.0, 4.0]),
        )
        for x0 in (1.0, 3.0, 7.0):
            x = np.array([x0, 0.0])
            fast = single_tree_shap(tree, x)
            assert np.allclose(fast, path_shapley_oracle(tree, x), atol=1e-12)

    def test_additivity_on_grown_trees(self):
        rng = np.random.default_rng(22)
        X = rng.normal(size=(150, 6))
        y = X[:, 0] * 2 + np.abs(X[:, 3]) + rng.normal(size=150)
        tree = grow_tree(X, y, max_depth=4)
        base = tree.expected_value()
        for row in X[:20]:
            phi = single_tree_shap(tree, row)
            assert base + phi.sum() == pytest.approx(
                tree.predict(row[None])[0], abs=1e-9
            )


class TestModelShap:
    @pytest.fixture
    def fitted(self):
        rng = np.random.default_rng(30)
        X = rng.normal(size=(120, 7))
        y = X[:, 0] - 2 * X[:, 4] + 0.2 * rng.normal(size=120)
        return X, y

    def test_stump_ensemble_matches_exhaustive_shapley(self, fitted):
        # background must be the training set for the two formulations to agree
        X, y = fitted
        X, y = X[:40], y[:40]
        gbt = GradientBoostedTrees(
            n_estimators=3, max_depth=1, learning_rate=0.5, random_state=0
        ).fit(X, y)
        for row in X[:5]:
            _, fast = shap_values(gbt, row)
            slow = shapley_oracle(lambda r: gbt.predict(r[None])[0], X, row)
            assert np.allclose(fast, slow, atol=1e-6)

    def test_additivity_across_models(self, fitted):
        X, y = fitted
        models = [
            RegressionTree(max_depth=4).fit(X, y),
            RandomForest(n_estimators=10, max_depth=4, random_state=1).fit(X, y),
            GradientBoostedTrees(n_estimators=25, random_state=1).fit(X, y),
        ]
        probes = X[:15]
        for model in models:
            bases, phi = shap_matrix(model, probes)
            predictions = model.predict(probes)
            assert np.allclose(bases + phi.sum(axis=1), predictions, atol=1e-6)

    def test_base_is_training_background_mean(self, fitted):
        X, y = fitted
        gbt = GradientBoostedTrees(n_estimators=20, random_state=2).fit(X, y)
        assert expected_value(gbt) == pytest.approx(gbt.predict(X).mean(), rel=0.05)

    def test_naive_last_base_equals_prediction(self):
        X = np.array([[1.0, 2.0, 5.0], [3.0, 4.0, 8.0]])
        bases, phi = shap_matrix(NaiveLast().fit(X), X)
        assert bases.tolist() == [5.0, 8.0]
        assert not phi.any()

    def test_constant_model_all_zero(self):
        X = np.ones((10, 3))
        y = np.full(10, 2.5)
        gbt = GradientBoostedTrees(n_estimators=5, random_state=0).fit(X, y)
        base, phi = shap_values(gbt, np.array([9.0, 9.0, 9.0]))
        assert base == pytest.approx(2.5)
        assert not phi.any()
