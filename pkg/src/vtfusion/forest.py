"""Bagged CART random forest used as the all-features baseline classifier."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def gini_impurity(labels: np.ndarray) -> float:
    if labels.size == 0:
        return 0.0
    p = np.bincount(labels, minlength=2) / labels.size
    return float(1.0 - np.sum(p ** 2))


@dataclass
class _Node:
    feature: int = -1
    threshold: float = 0.0
    left: "_Node | None" = None
    right: "_Node | None" = None
    prediction: int = 0
    is_leaf: bool = False


class DecisionTree:
    """Binary CART with Gini splits on axis-aligned thresholds."""

    def __init__(self, max_depth: int = 10, min_samples_split: int = 2,
                 max_features: int | None = None,
                 rng: np.random.Generator | None = None):
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.max_features = max_features
        self.rng = rng or np.random.default_rng(0)
        self.root: _Node | None = None

    def fit(self, x: np.ndarray, y: np.ndarray) -> "DecisionTree":
        self.root = self._build(np.asarray(x, dtype=np.float64),
                                np.asarray(y, dtype=np.int64), depth=0)
        return self

    def _majority(self, y: np.ndarray) -> int:
        counts = np.bincount(y, minlength=2)
        return int(np.argmax(counts))

    def _best_split(self, x: np.ndarray, y: np.ndarray):
        n, p = x.shape
        features = np.arange(p)
        if self.max_features is not None and self.max_features < p:
            features = self.rng.choice(p, size=self.max_features, replace=False)
            features.sort()
        parent = gini_impurity(y)
        best = (None, None, 0.0)  # feature, threshold, gain
        for feat in features:
            values = x[:, feat]
            order = np.argsort(values, kind="stable")
            sv, sy = values[order], y[order]
            ones = np.cumsum(sy)
            total_ones = ones[-1]
            for i in range(1, n):
                if sv[i] == sv[i - 1]:
                    continue
                nl, nr = i, n - i
                pl = ones[i - 1] / nl
                pr = (total_ones - ones[i - 1]) / nr
                gini_l = 1.0 - pl ** 2 - (1 - pl) ** 2
                gini_r = 1.0 - pr ** 2 - (1 - pr) ** 2
                gain = parent - (nl * gini_l + nr * gini_r) / n
                if best[2] < gain:
                    best = (int(feat), float((sv[i] + sv[i - 1]) / 2.0), gain)
        return best

    def _build(self, x: np.ndarray, y: np.ndarray, depth: int) -> _Node:
        if (depth >= self.max_depth or y.size < self.min_samples_split
                or np.all(y == y[0])):
            return _Node(prediction=self._majority(y), is_leaf=True)
        feature, threshold, gain = self._best_split(x, y)
        if feature is None or gain <= 0.0:
            return _Node(prediction=self._majority(y), is_leaf=True)
        mask = x[:, feature] <= threshold
        return _Node(
            feature=feature,
            threshold=threshold,
            left=self._build(x[mask], y[mask], depth + 1),
            right=self._build(x[~mask], y[~mask], depth + 1),
        )

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        out = np.empty(x.shape[0], dtype=np.int64)
        for i, row in enumerate(x):
            node = self.root
            while not node.is_leaf:
                node = node.left if row[node.feature] <= node.threshold else node.right
            out[i] = node.prediction
        return out


class RandomForest:
    """Bootstrap-aggregated trees with sqrt-feature subsampling and
    majority vote; tracks out-of-bag error."""

    def __init__(self, n_trees: int = 100, max_depth: int = 10,
                 min_samples_split: int = 2, seed: int = 0):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self.seed = seed
        self.trees: list = []
        self.oob_error: float | None = None

    def fit(self, x: np.ndarray, y: np.ndarray) -> "RandomForest":
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        n, p = x.shape
        rng = np.random.default_rng(self.seed)
        max_features = max(1, int(np.sqrt(p)))
        self.trees = []
        oob_votes = np.zeros((n, 2))
        for _ in range(self.n_trees):
            boot = rng.integers(0, n, size=n)
            tree = DecisionTree(self.max_depth, self.min_samples_split,
                                max_features, rng)
            tree.fit(x[boot], y[boot])
            self.trees.append(tree)
            oob = np.setdiff1d(np.arange(n), np.unique(boot))
            if oob.size:
                preds = tree.predict(x[oob])
                oob_votes[oob, preds] += 1.0
        voted = oob_votes.sum(axis=1) > 0
        if np.any(voted):
            oob_pred = np.argmax(oob_votes[voted], axis=1)
            self.oob_error = float(np.mean(oob_pred != y[voted]))
        return self

    def predict(self, x: np.ndarray) -> np.ndarray:
        if not self.trees:
            raise RuntimeError("forest is not fitted")
        votes = np.zeros((np.asarray(x).shape[0], 2))
        for tree in self.trees:
            votes[np.arange(votes.shape[0]), tree.predict(x)] += 1.0
        return np.argmax(votes, axis=1)
