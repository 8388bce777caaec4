import math

import numpy as np
import numpy.testing as npt
import pytest

from helpers import follow_forest
from spamforest.errors import ConfigError, ShapeError
from spamforest.forest import (ForestParams, TreeParams, decision_probability,
                               forest_predict, leaf_reach_probabilities,
                               predict_label, tree_input, tree_predict)
from spamforest.numerics import Layer, sigmoid


def logit(p):
    return math.log(p / (1 - p))


def depth1_tree(p_left, leaf0=(0.9, 0.1), leaf1=(0.2, 0.8)):
    """Single decision node with P(left) = p_left on input x_t = [1]."""
    logits = np.log([leaf0, leaf1])
    return TreeParams(1, np.array([[logit(p_left)]]), logits)


def random_tree(rng, depth, dim, n_classes=2, scale=1.0):
    return TreeParams(depth, rng.normal((2 ** depth - 1, dim), scale),
                      rng.normal((2 ** depth, n_classes), scale))


class TestTreeInput:
    def test_zero_layers_pass_through(self):
        h = np.array([0.2, 0.9])
        npt.assert_array_equal(tree_input(h, []), h)

    def test_zero_weights_give_half(self):
        fc = [Layer(np.zeros((3, 2)), np.zeros(3))]
        npt.assert_array_equal(tree_input([0.4, 0.6], fc), [0.5, 0.5, 0.5])

    def test_single_layer_matches_sigma_affine(self):
        W, b = np.array([[1.0, -2.0], [0.3, 0.4]]), np.array([0.5, 0.0])
        h = [0.1, 0.7]
        expected = [1 / (1 + math.exp(-(W[i] @ h + b[i]))) for i in range(2)]
        npt.assert_allclose(tree_input(h, [Layer(W, b)]), expected, atol=1e-15)


class TestDecisionProbability:
    def test_orthogonal_input(self):
        assert decision_probability([1.0, 0.0], [0.0, 5.0]) == 0.5

    def test_zero_weights(self):
        assert decision_probability([3.0, -2.0], [0.0, 0.0]) == 0.5

    def test_closed_form(self):
        assert decision_probability([1.0], [math.log(3)]) == pytest.approx(
            0.75, abs=1e-15)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            decision_probability([1.0, 2.0], [1.0])


class TestLeafReach:
    def test_depth1_split(self):
        mu = leaf_reach_probabilities([1.0], depth1_tree(0.7))
        npt.assert_allclose(mu, [0.7, 0.3], atol=1e-15)

    def test_depth2_uniform_routing(self):
        tree = TreeParams(2, np.zeros((3, 2)), np.zeros((4, 2)))
        mu = leaf_reach_probabilities([0.3, 0.8], tree)
        npt.assert_allclose(mu, [0.25] * 4, atol=1e-15)

    def test_path_products_match_decision_algebra(self, rng):
        # Leftmost leaf is reached with d_root * d_left; its sibling with
        # d_root * (1 - d_left).
        tree = random_tree(rng, 2, 3)
        x_t = rng.normal((3,))
        d = sigmoid(x_t @ tree.routing.T)
        mu = leaf_reach_probabilities(x_t, tree)
        assert mu[0] == pytest.approx(d[0] * d[1], abs=1e-15)
        assert mu[1] == pytest.approx(d[0] * (1 - d[1]), abs=1e-15)
        assert mu[2] == pytest.approx((1 - d[0]) * d[2], abs=1e-15)
        assert mu[3] == pytest.approx((1 - d[0]) * (1 - d[2]), abs=1e-15)

    @pytest.mark.parametrize("depth", [1, 2, 3, 4, 5])
    def test_sums_to_one(self, depth, rng):
        for _ in range(40):
            dim = int(rng.permutation(5)[0]) + 2
            tree = random_tree(rng, depth, dim, scale=3.0)
            mu = leaf_reach_probabilities(rng.normal((dim,), 3.0), tree)
            assert abs(mu.sum() - 1.0) <= 1e-9
            assert np.all(mu >= 0)

    def test_batch_rows_sum_to_one(self, rng):
        tree = random_tree(rng, 3, 4)
        mu = leaf_reach_probabilities(rng.normal((16, 4)), tree)
        assert mu.shape == (16, 8)
        npt.assert_allclose(mu.sum(axis=1), 1.0, atol=1e-9)


class TestTreePredict:
    def test_identical_leaves_wash_out_routing(self, rng):
        q = np.log([0.3, 0.7])
        tree = TreeParams(2, rng.normal((3, 2)), np.tile(q, (4, 1)))
        out = tree_predict(rng.normal((2,)), tree)
        npt.assert_allclose(out, [0.3, 0.7], atol=1e-12)

    def test_depth1_hand_mixture(self):
        # 0.7*[0.9,0.1] + 0.3*[0.2,0.8] = [0.69, 0.31]
        out = tree_predict([1.0], depth1_tree(0.7))
        npt.assert_allclose(out, [0.69, 0.31], atol=1e-12)

    def test_hard_routing_returns_single_leaf(self):
        tree = depth1_tree(0.5)
        tree.routing[0, 0] = 1e4  # saturate: always left
        out = tree_predict([1.0], tree)
        npt.assert_allclose(out, [0.9, 0.1], atol=1e-12)

    def test_valid_distribution(self, rng):
        for _ in range(25):
            tree = random_tree(rng, 3, 5, scale=2.0)
            out = tree_predict(rng.normal((5,), 2.0), tree)
            assert abs(out.sum() - 1.0) <= 1e-9
            assert np.all((out >= 0) & (out <= 1))


class TestForestPredict:
    def test_identical_trees_equal_single_tree(self, rng):
        tree = random_tree(rng, 2, 3)
        clone = TreeParams(2, tree.routing.copy(), tree.leaf_logits.copy())
        forest = ForestParams([tree, clone])
        x = rng.normal((3,))
        npt.assert_allclose(forest_predict(x, forest), tree_predict(x, tree),
                            atol=1e-15)

    def test_arithmetic_mean(self):
        t1 = depth1_tree(1.0 - 1e-12, leaf0=(0.6, 0.4), leaf1=(0.6, 0.4))
        t2 = depth1_tree(1.0 - 1e-12, leaf0=(0.8, 0.2), leaf1=(0.8, 0.2))
        out = forest_predict([1.0], ForestParams([t1, t2]))
        npt.assert_allclose(out, [0.7, 0.3], atol=1e-9)

    def test_single_tree_forest(self, rng):
        tree = random_tree(rng, 3, 4)
        x = rng.normal((4,))
        npt.assert_array_equal(forest_predict(x, ForestParams([tree])),
                               tree_predict(x, tree))

    def test_empty_forest_rejected(self):
        with pytest.raises(ConfigError):
            ForestParams([])

    def test_ensemble_bound(self, rng):
        trees = [random_tree(rng, 2, 3, scale=2.0) for _ in range(5)]
        forest = ForestParams(trees)
        for _ in range(20):
            x = rng.normal((3,))
            per_tree = np.array([tree_predict(x, t) for t in trees])
            out = forest_predict(x, forest)
            assert np.all(out >= per_tree.min(axis=0) - 1e-12)
            assert np.all(out <= per_tree.max(axis=0) + 1e-12)

    def test_mismatched_trees_rejected(self, rng):
        with pytest.raises(ShapeError):
            ForestParams([random_tree(rng, 2, 3), random_tree(rng, 3, 3)])


class TestHardRoutingEquivalence:
    def test_scaled_weights_match_deterministic_follower(self, rng):
        for _ in range(30):
            trees = [random_tree(rng, 3, 6) for _ in range(3)]
            scaled = [TreeParams(3, t.routing * 1e6, t.leaf_logits)
                      for t in trees]
            forest = ForestParams(scaled)
            x = rng.normal((6,))
            soft = forest_predict(x, forest)
            hard = follow_forest(x, forest)
            npt.assert_allclose(soft, hard, atol=1e-6)


class TestPredictLabel:
    def test_clear_winner(self):
        assert predict_label([0.7, 0.3]) == 0
        assert predict_label([0.3, 0.7]) == 1

    def test_tie_breaks_low(self):
        assert predict_label([0.5, 0.5]) == 0


class TestTreeParamsValidation:
    def test_wrong_node_count_rejected(self):
        with pytest.raises(ShapeError):
            TreeParams(2, np.zeros((2, 4)), np.zeros((4, 2)))

    def test_wrong_leaf_count_rejected(self):
        with pytest.raises(ShapeError):
            TreeParams(2, np.zeros((3, 4)), np.zeros((3, 2)))

    def test_leaf_distributions_are_stochastic(self, rng):
        tree = random_tree(rng, 3, 4, scale=5.0)
        dists = tree.leaf_distributions()
        npt.assert_allclose(dists.sum(axis=1), 1.0, atol=1e-12)
        assert np.all(dists >= 0)
