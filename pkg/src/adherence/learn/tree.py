"""Greedy binary CART classifier with Gini impurity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import rng as rngmod
from . import _split
from .base import Model


@dataclass(frozen=True)
class TreeConfig:
    max_depth: int | None = None
    min_samples_split: int = 2
    max_features: int | None = None  # per-split feature subsample; None = all
    seed: int = 0


class _Tree:
    """Flat node arrays: feature < 0 marks leaves."""

    __slots__ = ("feature", "threshold", "left", "right", "prob1", "importance")

    def __init__(self, feature, threshold, left, right, prob1, importance):
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=np.float64)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.prob1 = np.asarray(prob1, dtype=np.float64)
        self.importance = np.asarray(importance, dtype=np.float64)

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def predict_prob1(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.int64)
        while True:
            active = np.flatnonzero(self.feature[node] >= 0)
            if active.size == 0:
                return self.prob1[node]
            cur = node[active]
            go_left = X[active, self.feature[cur]] <= self.threshold[cur]
            node[active] = np.where(go_left, self.left[cur], self.right[cur])


def _impurity_count(n: int, n1: float) -> float:
    # n * gini(node); counts are exact in float64
    n0 = n - n1
    return n - (n1 * n1 + n0 * n0) / n


def _best_gini_split(X, y, idx, feats, codes, eps):
    n = idx.size
    y_node = y[idx]
    n1 = float(y_node.sum())
    parent = _impurity_count(n, n1)
    best = None  # (child_impurity, feature, threshold, n_left, n1_left)
    for f in feats:
        col_codes = codes[f]
        res = _split.scan(X[idx, f], [y_node], col_codes[idx] if col_codes is not None else None)
        if res is None:
            continue
        thresholds, n_left, (c1,) = res
        n_right = n - n_left
        c1r = n1 - c1
        child = (
            n_left
            - (c1 * c1 + (n_left - c1) * (n_left - c1)) / n_left
            + n_right
            - (c1r * c1r + (n_right - c1r) * (n_right - c1r)) / n_right
        )
        pos = int(np.argmin(child))
        if parent - child[pos] > eps and (best is None or child[pos] < best[0]):
            best = (float(child[pos]), int(f), float(thresholds[pos]), int(n_left[pos]), float(c1[pos]))
    return best, parent


def grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    idx: np.ndarray,
    cfg: TreeConfig,
    rng: np.random.Generator | None,
    codes: list[np.ndarray | None],
) -> _Tree:
    """Grow one tree over the rows in idx (repeats allowed, e.g. bootstrap)."""
    n_features = X.shape[1]
    m = cfg.max_features if cfg.max_features is not None else n_features
    m = max(1, min(m, n_features))
    y_f = y.astype(np.float64)
    n_root = idx.size
    # Spurious zero-gain splits from float rounding must not be accepted.
    eps = max(1e-9, 1e-10 * n_root)

    feature, threshold, left, right, prob1 = [], [], [], [], []
    importance = np.zeros(n_features)
    stack = [(idx, 0, -1, False)]  # rows, depth, parent node, is_right_child
    while stack:
        rows, depth, parent, is_right = stack.pop()
        node_id = len(feature)
        if parent >= 0:
            (right if is_right else left)[parent] = node_id
        n = rows.size
        n1 = float(y_f[rows].sum())
        p1 = n1 / n
        split = None
        if 0.0 < p1 < 1.0 and n >= cfg.min_samples_split and (cfg.max_depth is None or depth < cfg.max_depth):
            if m < n_features:
                feats = np.sort(rng.choice(n_features, size=m, replace=False))
            else:
                feats = np.arange(n_features)
            split, parent_imp = _best_gini_split(X, y_f, rows, feats, codes, eps)
            if split is None and m < n_features:
                # None of the sampled features separates this node; fall back to
                # the full set so consistent data always ends in pure leaves.
                split, parent_imp = _best_gini_split(X, y_f, rows, np.arange(n_features), codes, eps)
        if split is None:
            feature.append(-1)
            threshold.append(0.0)
            left.append(-1)
            right.append(-1)
            prob1.append(p1)
            continue
        child_imp, f, thr, _, _ = split
        importance[f] += (parent_imp - child_imp) / n_root
        go_left = X[rows, f] <= thr
        feature.append(f)
        threshold.append(thr)
        left.append(-1)
        right.append(-1)
        prob1.append(p1)
        stack.append((rows[~go_left], depth + 1, node_id, True))
        stack.append((rows[go_left], depth + 1, node_id, False))
    return _Tree(feature, threshold, left, right, prob1, importance)


class DecisionTree(Model):
    """Single CART tree; leaves hold class-probability estimates."""

    kind = "tree"

    def __init__(self, cfg: TreeConfig = TreeConfig()):
        super().__init__()
        self.cfg = cfg
        self.tree_: _Tree | None = None

    def _fit(self, X: np.ndarray, y: np.ndarray) -> None:
        codes = _split.column_codes(X)
        rng = rngmod.substream(self.cfg.seed, "tree")
        self.tree_ = grow_tree(X, y, np.arange(X.shape[0]), self.cfg, rng, codes)

    def _predict_proba(self, X: np.ndarray) -> np.ndarray:
        p1 = self.tree_.predict_prob1(X)
        return np.column_stack([1.0 - p1, p1])

    @property
    def n_nodes(self) -> int:
        return self.tree_.n_nodes
