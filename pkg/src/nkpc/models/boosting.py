"""Squared-error gradient boosting with L2-regularized leaf values.

For squared loss the Hessian is constant, so first-order boosting with
leaf value sum(residuals)/(n_leaf + l2_leaf) coincides with second-order
split gain up to constants; the penalty enters only through the leaf
shrinkage.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import DesignMatrix, canonical_row_order
from .tree import Leaf, Split, TreeNode, TreeParams, fit_tree, predict_tree


@dataclass(frozen=True)
class GbtParams:
    n_rounds: int = 200
    learning_rate: float = 0.1
    max_depth: int = 3
    min_samples_leaf: int = 2
    l2_leaf: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.learning_rate <= 1.0):
            raise ValueError("learning_rate must be in (0, 1]")
        if self.l2_leaf < 0:
            raise ValueError("l2_leaf must be >= 0")
        if self.n_rounds < 0:
            raise ValueError("n_rounds must be >= 0")


@dataclass(frozen=True)
class GbtModel:
    base_score: float
    trees: tuple[TreeNode, ...]
    params: GbtParams
    feature_names: tuple[str, ...] = ()

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        acc = np.full(X.shape[0], self.base_score)
        for t in self.trees:
            acc += self.params.learning_rate * predict_tree(t, X)
        return acc


def _shrink_leaves(node: TreeNode, X: np.ndarray, r: np.ndarray, lam: float) -> TreeNode:
    """Replace each leaf mean with sum(residuals)/(n + lam) over its rows."""
    if isinstance(node, Leaf):
        return Leaf(float(r.sum() / (len(r) + lam)), len(r))
    mask = X[:, node.feature] <= node.threshold
    return Split(
        node.feature, node.threshold,
        _shrink_leaves(node.left, X[mask], r[mask], lam),
        _shrink_leaves(node.right, X[~mask], r[~mask], lam),
    )


def fit_gbt(d: DesignMatrix, params: GbtParams) -> GbtModel:
    if d.n < 2 * params.min_samples_leaf:
        raise ValueError("need n >= 2 * min_samples_leaf")
    order = canonical_row_order(d)
    X = d.rows[order]
    y = d.target[order]
    base = float(y.mean())
    pred = np.full(d.n, base)
    tree_params = TreeParams(params.max_depth, params.min_samples_leaf, mtry=None)
    rng = np.random.default_rng([params.seed, 0])
    trees = []
    for _ in range(params.n_rounds):
        r = y - pred
        raw = fit_tree(DesignMatrix(d.feature_names, X, r), tree_params, rng)
        tree = _shrink_leaves(raw, X, r, params.l2_leaf)
        pred += params.learning_rate * predict_tree(tree, X)
        trees.append(tree)
    return GbtModel(base, tuple(trees), params, d.feature_names)


def predict_gbt(m: GbtModel, X: np.ndarray) -> np.ndarray:
    return m.predict(X)
