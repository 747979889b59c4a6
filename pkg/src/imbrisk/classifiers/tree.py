"""Weighted CART classification tree with Gini splits.

Nodes are stored as flat arrays in preorder (node 0 is the root, a left
child always directly follows its parent). Leaves have ``feature == -1``.
Rows with ``value <= threshold`` go left.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..data import Dataset

__all__ = ["DecisionTree", "gini", "best_split", "train_tree", "tree_predict"]

MAX_DEPTH = 8
MIN_SAMPLES_LEAF = 5
_EPS = 1e-12


def gini(class_counts) -> float:
    """1 - sum_c p_c^2 for a weighted (negative, positive) count pair."""
    c = np.asarray(class_counts, dtype=np.float64)
    total = c.sum()
    if not total > 0:
        raise ValueError("gini of an empty node")
    p = c / total
    return float(1.0 - (p * p).sum())


def _split_scores(X, wy, w, order, W, Wp, min_samples_leaf):
    """Gini decrease of every (split position, feature) candidate of one node.

    ``order`` is ``(n_node, d)``: for each feature, the node's row indices
    into ``X`` sorted by that feature; ``W`` and ``Wp`` are the node's total
    and positive weight. Returns the sorted values and a
    decrease matrix with -inf at invalid positions.
    """
    n, d = order.shape
    xs = X[order, np.arange(d)]
    ws = w[order]
    WL = np.cumsum(ws, axis=0)[:-1]
    PL = np.cumsum(wy[order], axis=0)[:-1]
    WR, PR = W - WL, Wp - PL
    with np.errstate(divide="ignore", invalid="ignore"):
        # sum of child weights times child Gini, using 1 - p^2 - q^2 = 2pq
        child = 2.0 * PL * (WL - PL) / WL + 2.0 * PR * (WR - PR) / WR
    parent = 2.0 * Wp * (W - Wp) / W
    dec = (parent - child) / W
    valid = (xs[:-1] < xs[1:]) & (WL > 0) & (WR > 0)
    if min_samples_leaf > 1:
        pos = np.arange(1, n)[:, None]
        valid &= (pos >= min_samples_leaf) & (n - pos >= min_samples_leaf)
    dec = np.where(valid, dec, -np.inf)
    return xs, dec


def _pick(xs, dec):
    best = dec.max()
    if not best > _EPS:
        return None
    cand = dec >= best - _EPS
    f = int(np.flatnonzero(cand.any(axis=0))[0])
    i = int(np.flatnonzero(cand[:, f])[0])
    lo, hi = xs[i, f], xs[i + 1, f]
    thr = 0.5 * (lo + hi)
    if not lo <= thr < hi:
        thr = lo
    return f, float(thr), float(dec[i, f])


def best_split(X, y, weights, min_samples_leaf: int = 1):
    """Exhaustive best weighted-Gini split of one node.

    Every feature and every midpoint between consecutive distinct values is
    scanned. Ties go to the lower feature index, then the lower threshold.

    Returns
    -------
    tuple or None
        ``(feature, threshold, decrease)`` where ``decrease`` is the node's
        Gini minus the weighted mean Gini of its children, or ``None`` when
        no split decreases impurity.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    if X.shape[0] < max(2, 2 * min_samples_leaf) or not w.sum() > 0:
        return None
    order = np.argsort(X, axis=0, kind="stable")
    return _pick(*_split_scores(X, w * y, w, order, w.sum(), (w * y).sum(), min_samples_leaf))


@dataclass(frozen=True, eq=False)
class DecisionTree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    class_counts: np.ndarray
    value: np.ndarray
    impurity: np.ndarray
    gini_reduction_per_feature: np.ndarray
    max_depth: int = MAX_DEPTH
    min_samples_leaf: int = MIN_SAMPLES_LEAF

    kind = "tree"

    def __post_init__(self):
        for name in ("feature", "left", "right"):
            a = np.array(getattr(self, name), dtype=np.int64)
            a.setflags(write=False)
            object.__setattr__(self, name, a)
        for name in ("threshold", "class_counts", "value", "impurity",
                     "gini_reduction_per_feature"):
            a = np.array(getattr(self, name), dtype=np.float64)
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def d(self) -> int:
        return self.gini_reduction_per_feature.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    @property
    def is_leaf(self) -> np.ndarray:
        return self.feature < 0

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by each row."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.d:
            raise ValueError(f"tree expects {self.d} features, got {X.shape[1]}")
        node = np.zeros(X.shape[0], dtype=np.int64)
        rows = np.arange(X.shape[0])
        while True:
            f = self.feature[node]
            inner = f >= 0
            if not inner.any():
                return node
            go_left = X[rows, np.where(inner, f, 0)] <= self.threshold[node]
            node = np.where(inner, np.where(go_left, self.left[node], self.right[node]), node)

    def predict_proba(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    def importance(self) -> np.ndarray:
        """Gini reductions normalised to sum 1 (all zero for a single leaf)."""
        g = self.gini_reduction_per_feature
        s = g.sum()
        return g / s if s > 0 else np.zeros_like(g)


def train_tree(ds: Dataset, weights=None, max_depth: int = MAX_DEPTH,
               min_samples_leaf: int = MIN_SAMPLES_LEAF) -> DecisionTree:
    """Grow a tree greedily with :func:`best_split`.

    Growth stops at ``max_depth``, when a node holds fewer than
    ``2 * min_samples_leaf`` rows, when it is pure, or when no split helps.
    Each split adds ``(node weight / root weight) * decrease`` to its
    feature's Gini reduction. Rows are sorted once per feature at the root;
    children inherit the sorted orders by stable filtering.
    """
    X = ds.features
    y = ds.labels.astype(np.float64)
    w = np.ones(ds.n) if weights is None else np.asarray(weights, dtype=np.float64)
    if w.shape != (ds.n,) or np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be a finite non-negative vector, one per row")
    if max_depth < 0 or min_samples_leaf < 1:
        raise ValueError("max_depth must be >= 0 and min_samples_leaf >= 1")
    W_root = w.sum()
    if not W_root > 0:
        raise ValueError("total sample weight must be positive")

    feature, threshold, left, right = [], [], [], []
    counts, value, impurity = [], [], []
    reduction = np.zeros(ds.d)
    wy = w * y
    go_left = np.zeros(ds.n, dtype=bool)

    def grow(idx, order, depth):
        node = len(feature)
        wn, yn = w[idx], y[idx]
        wpos = float((wn * yn).sum())
        wtot = float(wn.sum())
        cc = (wtot - wpos, wpos)
        imp = gini(cc) if wtot > 0 else 0.0
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        counts.append(cc)
        value.append(wpos / wtot if wtot > 0 else 0.0)
        impurity.append(imp)
        if depth >= max_depth or imp <= 0.0:
            return node
        if idx.size < max(2, 2 * min_samples_leaf):
            return node
        split = _pick(*_split_scores(X, wy, w, order, wn.sum(), wy[idx].sum(), min_samples_leaf))
        if split is None:
            return node
        f, thr, dec = split
        mask = X[idx, f] <= thr
        feature[node] = f
        threshold[node] = thr
        reduction[f] += wtot / W_root * dec
        go_left[idx] = mask
        sel = go_left[order]
        n_left = int(mask.sum())
        # boolean indexing walks rows in C order, so transpose to filter per column
        order_l = order.T[sel.T].reshape(-1, n_left).T
        order_r = order.T[~sel.T].reshape(-1, idx.size - n_left).T
        left[node] = grow(idx[mask], order_l, depth + 1)
        right[node] = grow(idx[~mask], order_r, depth + 1)
        return node

    grow(np.arange(ds.n), np.argsort(X, axis=0, kind="stable"), 0)
    return DecisionTree(
        np.array(feature), np.array(threshold), np.array(left), np.array(right),
        np.array(counts).reshape(-1, 2), np.array(value), np.array(impurity),
        reduction, max_depth, min_samples_leaf,
    )


def tree_predict(tree: DecisionTree, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("tree_predict scores a single feature vector")
    return float(tree.predict_proba(x)[0])
