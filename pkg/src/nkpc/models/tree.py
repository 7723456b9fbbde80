"""Greedy CART regression trees.

Split candidates are midpoints between consecutive distinct sorted values
of each candidate feature; the chosen split minimizes total child SSE with
ties broken by lowest feature index, then lowest threshold, so exhaustive
oracles can reproduce the search exactly.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import DesignMatrix


@dataclass(frozen=True)
class Leaf:
    value: float
    n: int


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    left: "Leaf | Split"
    right: "Leaf | Split"


TreeNode = Leaf | Split


@dataclass(frozen=True)
class TreeParams:
    max_depth: int = 6
    min_samples_leaf: int = 1
    mtry: int | None = None       # None = all features


def best_split(X: np.ndarray, y: np.ndarray, features, min_samples_leaf: int):
    """Lowest-SSE (feature, threshold) over midpoint candidates, or None."""
    best = None  # (sse, feature, threshold)
    n = len(y)
    for j in sorted(features):
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        ys = y[order]
        csum = np.cumsum(ys)
        csq = np.cumsum(ys ** 2)
        total_sum, total_sq = csum[-1], csq[-1]
        # candidate boundary after position i (left = 0..i)
        for i in range(n - 1):
            if xs[i + 1] <= xs[i]:
                continue
            nl = i + 1
            nr = n - nl
            if nl < min_samples_leaf or nr < min_samples_leaf:
                continue
            sl, ql = csum[i], csq[i]
            sr, qr = total_sum - sl, total_sq - ql
            sse = (ql - sl * sl / nl) + (qr - sr * sr / nr)
            thr = 0.5 * (xs[i] + xs[i + 1])
            if best is None or sse < best[0] - 1e-12 or (
                abs(sse - best[0]) <= 1e-12 and (j, thr) < (best[1], best[2])
            ):
                best = (sse, j, thr)
    return best


def _grow(X, y, depth, params: TreeParams, rng) -> TreeNode:
    n = len(y)
    if depth >= params.max_depth or n < 2 * params.min_samples_leaf or np.ptp(y) == 0:
        return Leaf(float(y.mean()), n)
    p = X.shape[1]
    if params.mtry is not None and params.mtry < p:
        features = rng.choice(p, size=params.mtry, replace=False)
    else:
        features = range(p)
    found = best_split(X, y, features, params.min_samples_leaf)
    if found is None:
        return Leaf(float(y.mean()), n)
    _, j, thr = found
    mask = X[:, j] <= thr
    return Split(
        int(j), float(thr),
        _grow(X[mask], y[mask], depth + 1, params, rng),
        _grow(X[~mask], y[~mask], depth + 1, params, rng),
    )


def fit_tree(d: DesignMatrix, params: TreeParams, rng=None) -> TreeNode:
    if params.max_depth < 0:
        raise ValueError("max_depth must be >= 0")
    if params.max_depth == 0:
        return Leaf(float(d.target.mean()), d.n)
    if d.n < 2 * params.min_samples_leaf:
        raise ValueError("need n >= 2 * min_samples_leaf")
    if rng is None:
        rng = np.random.default_rng(0)
    return _grow(d.rows, d.target, 0, params, rng)


def predict_tree(node: TreeNode, X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    out = np.empty(X.shape[0])
    for i, row in enumerate(X):
        cur = node
        while isinstance(cur, Split):
            cur = cur.left if row[cur.feature] <= cur.threshold else cur.right
        out[i] = cur.value
    return out


def tree_features(node: TreeNode) -> set[int]:
    """Indices of features the tree actually splits on."""
    if isinstance(node, Leaf):
        return set()
    return {node.feature} | tree_features(node.left) | tree_features(node.right)
