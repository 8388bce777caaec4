"""Soft-routed binary decision trees and their forest ensemble.

Each tree is a complete binary tree of depth D: 2^D - 1 decision nodes and
2^D leaves, stored in heap order (children of node i are 2i+1 and 2i+2).
A decision node holds one routing-weight row w_d; a sample at tree input
x_t goes left with probability sigmoid(w_d . x_t) -- there is no bias term,
so append a constant-1 component to x_t if bias behavior is wanted.

Leaves hold unconstrained logits; the class distribution of a leaf is
always the softmax of its logit row, so it sums to one by construction no
matter what the optimizer does to the logits.

Forest parameters are read-only during inference and safe to share across
threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ShapeError
from .numerics import Layer, sigmoid, sigmoid_chain, softmax

__all__ = [
    "TreeParams",
    "ForestParams",
    "tree_input",
    "decision_probability",
    "leaf_reach_probabilities",
    "tree_predict",
    "forest_predict",
    "predict_label",
]


@dataclass
class TreeParams:
    """Routing weights (one row per decision node) plus leaf logits."""

    depth: int
    routing: np.ndarray      # (2^depth - 1, xt_dim)
    leaf_logits: np.ndarray  # (2^depth, n_classes)

    def __post_init__(self):
        self.routing = np.asarray(self.routing, dtype=np.float64)
        self.leaf_logits = np.asarray(self.leaf_logits, dtype=np.float64)
        if self.depth < 1:
            raise ConfigError(f"tree depth must be >= 1, got {self.depth}")
        n_dec = 2 ** self.depth - 1
        n_leaf = 2 ** self.depth
        if self.routing.ndim != 2 or self.routing.shape[0] != n_dec:
            raise ShapeError(
                f"routing shape {self.routing.shape} != ({n_dec}, xt_dim) for depth {self.depth}"
            )
        if self.leaf_logits.ndim != 2 or self.leaf_logits.shape[0] != n_leaf:
            raise ShapeError(
                f"leaf_logits shape {self.leaf_logits.shape} != ({n_leaf}, n_classes)"
            )

    @property
    def n_decision_nodes(self) -> int:
        return self.routing.shape[0]

    @property
    def n_leaves(self) -> int:
        return self.leaf_logits.shape[0]

    @property
    def n_classes(self) -> int:
        return self.leaf_logits.shape[1]

    @property
    def input_dim(self) -> int:
        return self.routing.shape[1]

    def leaf_distributions(self) -> np.ndarray:
        """(n_leaves, n_classes) row-stochastic matrix softmax(leaf_logits)."""
        return softmax(self.leaf_logits)


@dataclass
class ForestParams:
    """K trees of equal depth/input width behind shared fully connected layers."""

    trees: list[TreeParams]
    fc: list[Layer] = field(default_factory=list)

    def __post_init__(self):
        if not self.trees:
            raise ConfigError("a forest needs at least one tree")
        depth = self.trees[0].depth
        width = self.trees[0].input_dim
        classes = self.trees[0].n_classes
        for t in self.trees[1:]:
            if t.depth != depth or t.input_dim != width or t.n_classes != classes:
                raise ShapeError(
                    "all trees must share depth, input width and class count"
                )
        for prev, nxt in zip(self.fc, self.fc[1:]):
            if nxt.in_dim != prev.out_dim:
                raise ShapeError(
                    f"fc layer shapes do not chain: {prev.W.shape} -> {nxt.W.shape}"
                )
        if self.fc and self.fc[-1].out_dim != width:
            raise ShapeError(
                f"fc output width {self.fc[-1].out_dim} != tree input width {width}"
            )

    @property
    def n_trees(self) -> int:
        return len(self.trees)

    @property
    def n_classes(self) -> int:
        return self.trees[0].n_classes


def tree_input(h: np.ndarray, fc_layers: list[Layer]) -> np.ndarray:
    """Tree input x_t: the hidden code pushed through the fully connected
    stack (sigmoid activations), or the code itself when the stack is empty."""
    if not fc_layers:
        return np.asarray(h, dtype=np.float64)
    return sigmoid_chain(h, fc_layers)[-1]


def decision_probability(x_t: np.ndarray, w_d: np.ndarray) -> float:
    """P(go left) = sigmoid(w_d . x_t) for a single decision node."""
    x_t = np.asarray(x_t, dtype=np.float64)
    w_d = np.asarray(w_d, dtype=np.float64)
    if x_t.shape != w_d.shape:
        raise ShapeError(f"input shape {x_t.shape} != weight shape {w_d.shape}")
    return float(sigmoid(float(w_d @ x_t)))


def _reach_probabilities(decisions: np.ndarray, depth: int) -> np.ndarray:
    """Node-reach probabilities for the whole heap, given per-node left
    probabilities ``decisions`` (..., 2^depth - 1). Output (..., 2^(depth+1) - 1)."""
    n_total = 2 ** (depth + 1) - 1
    n_dec = 2 ** depth - 1
    reach = np.empty(decisions.shape[:-1] + (n_total,), dtype=np.float64)
    reach[..., 0] = 1.0
    for i in range(n_dec):
        d = decisions[..., i]
        reach[..., 2 * i + 1] = reach[..., i] * d
        reach[..., 2 * i + 2] = reach[..., i] * (1.0 - d)
    return reach


def leaf_reach_probabilities(x_t: np.ndarray, tree: TreeParams) -> np.ndarray:
    """mu_l for every leaf: the product of left-probabilities d and
    right-probabilities (1 - d) along the root-to-leaf path. Rows sum to 1."""
    x_t = np.asarray(x_t, dtype=np.float64)
    if x_t.shape[-1] != tree.input_dim:
        raise ShapeError(f"input shape {x_t.shape} != tree input width {tree.input_dim}")
    decisions = sigmoid(x_t @ tree.routing.T)
    decisions = np.asarray(decisions, dtype=np.float64).reshape(
        x_t.shape[:-1] + (tree.n_decision_nodes,)
    )
    reach = _reach_probabilities(decisions, tree.depth)
    return reach[..., tree.n_decision_nodes :]


def tree_predict(x_t: np.ndarray, tree: TreeParams) -> np.ndarray:
    """Class distribution sum_l mu_l * P_l for one tree."""
    mu = leaf_reach_probabilities(x_t, tree)
    return mu @ tree.leaf_distributions()


def forest_predict(x_t: np.ndarray, forest: ForestParams) -> np.ndarray:
    """Class distribution averaged over the forest's trees."""
    if not forest.trees:
        raise ConfigError("cannot predict with an empty forest")
    total = tree_predict(x_t, forest.trees[0])
    for tree in forest.trees[1:]:
        total = total + tree_predict(x_t, tree)
    return total / forest.n_trees


def predict_label(probs: np.ndarray) -> int:
    """Index of the most probable class; ties break toward the lower index."""
    return int(np.argmax(np.asarray(probs)))
