"""Bagged CART classifier: Gini splits, bootstrap per tree, sqrt(d) feature
subsampling at each split, majority vote with ties to the lowest class."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rng import as_generator


@dataclass
class _Tree:
    """Flat array representation; leaves have feature = -1."""

    feature: np.ndarray  # (nodes,)
    threshold: np.ndarray  # (nodes,)
    left: np.ndarray  # (nodes,)
    right: np.ndarray  # (nodes,)
    counts: np.ndarray  # (nodes, classes) class histogram at the node

    def predict_counts(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=np.intp)
        active = self.feature[node] >= 0
        while np.any(active):
            idx = np.nonzero(active)[0]
            cur = node[idx]
            go_left = X[idx, self.feature[cur]] <= self.threshold[cur]
            node[idx] = np.where(go_left, self.left[cur], self.right[cur])
            active = self.feature[node] >= 0
        return self.counts[node]


def _gini_best_split(Xf: np.ndarray, y: np.ndarray, n_classes: int):
    """Best (threshold, impurity) for one feature column, or None."""
    order = np.argsort(Xf, kind="stable")
    xs, ys = Xf[order], y[order]
    n = len(ys)
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), ys] = 1.0
    left = np.cumsum(onehot, axis=0)  # counts for split after position i
    total = left[-1]
    nl = np.arange(1, n + 1, dtype=np.float64)
    nr = n - nl
    with np.errstate(invalid="ignore", divide="ignore"):
        gini_l = 1.0 - np.sum((left / nl[:, None]) ** 2, axis=1)
        gini_r = 1.0 - np.sum(((total - left) / np.where(nr > 0, nr, 1.0)[:, None]) ** 2, axis=1)
    score = (nl * gini_l + nr * gini_r) / n
    valid = xs[1:] > xs[:-1]  # only between distinct values
    if not np.any(valid):
        return None
    cand = np.nonzero(valid)[0]
    best = cand[np.argmin(score[cand])]
    return (xs[best] + xs[best + 1]) / 2.0, float(score[best])


def _build_tree(X, y, n_classes, max_depth, mtry, rng):
    feature, threshold, left, right, counts = [], [], [], [], []

    def new_node():
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append(np.zeros(n_classes))
        return len(feature) - 1

    def grow(idx, depth):
        node = new_node()
        hist = np.bincount(y[idx], minlength=n_classes).astype(np.float64)
        counts[node] = hist
        if (
            len(idx) < 2
            or (max_depth is not None and depth >= max_depth)
            or np.count_nonzero(hist) <= 1
        ):
            return node
        parent_gini = 1.0 - np.sum((hist / len(idx)) ** 2)
        feats = rng.choice(X.shape[1], size=mtry, replace=False)
        best = None
        for f in np.sort(feats):
            res = _gini_best_split(X[idx, f], y[idx], n_classes)
            if res is not None and (best is None or res[1] < best[2]):
                best = (f, res[0], res[1])
        if best is None or best[2] >= parent_gini - 1e-12:
            return node
        f, thr, _ = best
        mask = X[idx, f] <= thr
        feature[node], threshold[node] = f, thr
        left[node] = grow(idx[mask], depth + 1)
        right[node] = grow(idx[~mask], depth + 1)
        return node

    grow(np.arange(X.shape[0]), 0)
    return _Tree(
        np.array(feature, dtype=np.intp),
        np.array(threshold),
        np.array(left, dtype=np.intp),
        np.array(right, dtype=np.intp),
        np.array(counts),
    )


@dataclass
class RandomForest:
    trees: list
    n_classes: int
    n_features: int

    def predict_scores(self, X: np.ndarray) -> np.ndarray:
        """Fraction of per-tree votes for each class."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(f"expected (n, {self.n_features}) inputs, got {X.shape}")
        votes = np.zeros((X.shape[0], self.n_classes))
        for tree in self.trees:
            c = tree.predict_counts(X)
            pred = np.argmax(c, axis=1)  # argmax ties -> lowest class
            votes[np.arange(X.shape[0]), pred] += 1.0
        return votes / len(self.trees)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.predict_scores(X), axis=1)


def fit_random_forest(
    X: np.ndarray,
    labels: np.ndarray,
    trees: int = 200,
    max_depth: int | None = None,
    rng=0,
    n_classes: int | None = None,
) -> RandomForest:
    """Deterministic given the seed; each tree gets its own substream."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("need a non-empty (n, d) feature matrix")
    if X.shape[0] != y.shape[0]:
        raise ValueError("feature and label counts differ")
    if n_classes is None:
        n_classes = int(y.max()) + 1
    if len(np.unique(y)) < 2:
        raise ValueError("need at least 2 classes present in the training labels")
    rng = as_generator(rng)
    mtry = max(1, int(np.sqrt(X.shape[1])))
    built = []
    for tree_rng in rng.spawn(trees):
        boot = tree_rng.integers(0, X.shape[0], size=X.shape[0])
        built.append(_build_tree(X[boot], y[boot], n_classes, max_depth, mtry, tree_rng))
    return RandomForest(built, n_classes, X.shape[1])
