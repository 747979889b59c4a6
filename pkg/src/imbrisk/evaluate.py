"""Confusion counts, recall/precision/F1, ROC/AUC and a 2-component PCA."""

from __future__ import annotations

import csv
import warnings
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .data import Dataset

__all__ = [
    "UndefinedMetricError",
    "ConfusionCounts",
    "MetricSet",
    "confusion",
    "recall",
    "precision",
    "f1",
    "roc_points",
    "auc",
    "metric_set",
    "pca2",
    "write_roc_csv",
    "write_pca_csv",
]

THRESHOLD = 0.5


class UndefinedMetricError(ValueError):
    """A ratio metric whose denominator is zero."""


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def _check(scores, labels):
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel()
    if s.shape != y.shape:
        raise ValueError(f"{s.size} scores for {y.size} labels")
    if s.size == 0:
        raise ValueError("no scores given")
    return s, y


def confusion(scores, labels, threshold: float = THRESHOLD) -> ConfusionCounts:
    """Counts with a row predicted positive iff ``score >= threshold``."""
    s, y = _check(scores, labels)
    pred = s >= threshold
    pos = y == 1
    tp = int(np.sum(pred & pos))
    fp = int(np.sum(pred & ~pos))
    return ConfusionCounts(tp, fp, int(np.sum(~pos)) - fp, int(np.sum(pos)) - tp)


def recall(c: ConfusionCounts) -> float:
    if c.tp + c.fn == 0:
        raise UndefinedMetricError("recall undefined: no actual positives")
    return c.tp / (c.tp + c.fn)


def precision(c: ConfusionCounts) -> float:
    if c.tp + c.fp == 0:
        raise UndefinedMetricError("precision undefined: nothing predicted positive")
    return c.tp / (c.tp + c.fp)


def f1(p: float, r: float) -> float:
    """Harmonic mean of precision and recall; 0 when both are 0."""
    if p + r == 0:
        return 0.0
    return 2.0 * p * r / (p + r)


def roc_points(scores, labels):
    """ROC vertices from a descending threshold sweep.

    Tied scores form one step, so a tie group contributes a diagonal
    segment. The list starts at (0, 0) and ends at (1, 1).
    """
    s, y = _check(scores, labels)
    P = int(np.sum(y == 1))
    N = y.size - P
    if P == 0 or N == 0:
        raise ValueError("ROC needs both classes present")
    order = np.argsort(-s, kind="stable")
    s, pos = s[order], (y[order] == 1)
    tp = np.cumsum(pos)
    fp = np.cumsum(~pos)
    ends = np.r_[np.flatnonzero(s[1:] != s[:-1]), s.size - 1]
    pts = [(0.0, 0.0)]
    pts += [(fp[i] / N, tp[i] / P) for i in ends]
    return [(float(a), float(b)) for a, b in pts]


def auc(scores, labels) -> float:
    """Trapezoidal area under :func:`roc_points`."""
    pts = np.array(roc_points(scores, labels))
    x, yv = pts[:, 0], pts[:, 1]
    return float(np.sum((x[1:] - x[:-1]) * (yv[1:] + yv[:-1]) / 2.0))


@dataclass(frozen=True)
class MetricSet:
    """Evaluation of one score vector.

    ``recall``, ``precision`` and ``f1`` are ``None`` when undefined
    (no actual positives, or nothing predicted positive).
    """

    auc: float | None
    recall: float | None
    precision: float | None
    f1: float | None
    threshold: float
    counts: ConfusionCounts

    def to_dict(self) -> dict:
        d = asdict(self)
        d["counts"] = asdict(self.counts)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "MetricSet":
        return cls(d["auc"], d["recall"], d["precision"], d["f1"], d["threshold"],
                   ConfusionCounts(**d["counts"]))


def metric_set(scores, labels, threshold: float = THRESHOLD) -> MetricSet:
    c = confusion(scores, labels, threshold)
    try:
        a = auc(scores, labels)
    except ValueError:
        a = None
    try:
        r = recall(c)
    except UndefinedMetricError:
        r = None
    try:
        p = precision(c)
    except UndefinedMetricError:
        p = None
    f = f1(p, r) if p is not None and r is not None else None
    return MetricSet(a, r, p, f, threshold, c)


def _top_eigvec(C, start, max_iter=10000, tol=1e-13):
    v = start / np.linalg.norm(start)
    lam = 0.0
    for _ in range(max_iter):
        w = C @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return v, 0.0
        w /= norm
        lam = float(w @ C @ w)
        if min(np.linalg.norm(w - v), np.linalg.norm(w + v)) < tol:
            v = w
            break
        v = w
    return v, lam


def pca2(ds: Dataset):
    """Project onto the top two principal components.

    Components come from power iteration with deflation on the sample
    covariance. Each component is signed so its largest-magnitude loading
    is positive. If the data has rank below 2 the second column is zero.

    Returns
    -------
    ndarray of shape (n, 2)
    """
    X = np.asarray(ds.features, dtype=np.float64)
    n, d = X.shape
    if d < 2 or n < 3:
        raise ValueError(f"pca2 needs d >= 2 and n >= 3, got n={n}, d={d}")
    Xc = X - X.mean(axis=0)
    C = Xc.T @ Xc / (n - 1)
    start = np.random.default_rng(0).standard_normal(d)
    comps = []
    scale = max(np.trace(C), 1e-300)
    for k in range(2):
        v, lam = _top_eigvec(C, start)
        if lam <= 1e-12 * scale:
            warnings.warn("data has rank < 2; second component zero-filled", stacklevel=2)
            comps.append(np.zeros(d))
            continue
        if v[np.argmax(np.abs(v))] < 0:
            v = -v
        comps.append(v)
        C = C - lam * np.outer(v, v)
    W = np.column_stack(comps)
    return Xc @ W


def write_roc_csv(points, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["fpr", "tpr"])
        for a, b in points:
            w.writerow([repr(float(a)), repr(float(b))])


def write_pca_csv(proj, labels, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pc1", "pc2", "label"])
        for (a, b), y in zip(proj, labels):
            w.writerow([repr(float(a)), repr(float(b)), int(y)])
