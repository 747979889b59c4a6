"""Resampling a training set to a target positive fraction.

Undersamplers (RUS, CCUS) keep every positive and shrink the negatives;
oversamplers (ROS, SMOTE) keep every negative and grow the positives.
A target on the wrong side of the current rate leaves the data unchanged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import DataError, Dataset

__all__ = [
    "METHODS",
    "ResampleSpec",
    "target_counts",
    "kmeans",
    "rus",
    "ccus",
    "ros",
    "smote",
    "resample",
    "resample_with_origin",
]

METHODS = ("RUS", "CCUS", "ROS", "SMOTE", "NONE")
UNDER = {"RUS", "CCUS"}
OVER = {"ROS", "SMOTE"}


@dataclass(frozen=True)
class ResampleSpec:
    method: str
    target_positive: float = 0.5
    smote_k: int = 5
    kmeans_max_iter: int = 100
    kmeans_tol: float = 1e-6
    seed: int = 0

    def __post_init__(self):
        method = str(self.method).upper()
        if method not in METHODS:
            raise ValueError(f"unknown resampling method {self.method!r}; expected one of {METHODS}")
        object.__setattr__(self, "method", method)
        if method != "NONE" and not 0.0 < self.target_positive < 1.0:
            raise ValueError(f"target_positive must be in (0, 1), got {self.target_positive}")
        if self.smote_k < 1:
            raise ValueError(f"smote_k must be >= 1, got {self.smote_k}")
        if self.kmeans_max_iter < 1 or not self.kmeans_tol > 0:
            raise ValueError("kmeans_max_iter and kmeans_tol must be positive")


def _round_half_up(x: float) -> int:
    # guard so that e.g. 3 * 0.6 / 0.4 = 4.4999... still rounds to 5
    return int(math.floor(x + 0.5 + 1e-9 * max(1.0, abs(x))))


def target_counts(n_pos: int, n_neg: int, p: float, direction: str) -> tuple[int, int]:
    """Class counts that bring the positive fraction to ``p``.

    ``under`` keeps ``n_pos`` and returns at most ``n_neg`` negatives;
    ``over`` keeps ``n_neg`` and returns at least ``n_pos`` positives.
    """
    if n_pos < 1 or n_neg < 1:
        raise ValueError("target_counts needs at least one row of each class")
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must be in (0, 1), got {p}")
    if direction == "under":
        return n_pos, min(n_neg, _round_half_up(n_pos * (1.0 - p) / p))
    if direction == "over":
        return max(n_pos, _round_half_up(n_neg * p / (1.0 - p))), n_neg
    raise ValueError(f"direction must be 'under' or 'over', got {direction!r}")


def _sq_dists(A, B):
    d = (A * A).sum(1)[:, None] - 2.0 * A @ B.T + (B * B).sum(1)[None, :]
    return np.maximum(d, 0.0)


def _kmeanspp(points, K, rng):
    m = points.shape[0]
    chosen = [int(rng.integers(m))]
    closest = _sq_dists(points, points[chosen[0]][None, :])[:, 0]
    taken = np.zeros(m, dtype=bool)
    taken[chosen[0]] = True
    for _ in range(1, K):
        total = closest.sum()
        if total > 0:
            i = int(rng.choice(m, p=closest / total))
        else:
            # all remaining points coincide with a centre already
            i = int(rng.choice(np.flatnonzero(~taken)))
        chosen.append(i)
        taken[i] = True
        closest = np.minimum(closest, _sq_dists(points, points[i][None, :])[:, 0])
    return points[chosen].copy()


def kmeans(points, K: int, max_iter: int = 100, tol: float = 1e-6, seed: int = 0):
    """Lloyd's algorithm from k-means++ seeding.

    Stops when no centroid moves more than ``tol`` (Euclidean) or after
    ``max_iter`` iterations. An empty cluster is reseeded at the point
    farthest from its assigned centroid. Returns a ``(K, d)`` array.
    """
    X = np.asarray(points, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("kmeans needs a non-empty 2-D point array")
    m = X.shape[0]
    if not 1 <= K <= m:
        raise ValueError(f"K must be in [1, {m}], got {K}")
    rng = np.random.default_rng(seed)
    C = _kmeanspp(X, K, rng)
    for _ in range(max_iter):
        D = _sq_dists(X, C)
        assign = D.argmin(axis=1)
        counts = np.bincount(assign, minlength=K)
        new = np.zeros_like(C)
        np.add.at(new, assign, X)
        nonempty = counts > 0
        new[nonempty] /= counts[nonempty, None]
        if not nonempty.all():
            dist_own = D[np.arange(m), assign]
            order = np.argsort(-dist_own, kind="stable")
            for c, i in zip(np.flatnonzero(~nonempty), order):
                new[c] = X[i]
        shift = np.sqrt(((new - C) ** 2).sum(axis=1)).max()
        C = new
        if shift < tol:
            break
    return C


def _split(ds: Dataset):
    pos = np.flatnonzero(ds.labels == 1)
    neg = np.flatnonzero(ds.labels == 0)
    if pos.size == 0 or neg.size == 0:
        raise DataError("resampling needs both classes present")
    return pos, neg


def _identity(ds):
    return ds, np.arange(ds.n)


def _rus(ds, spec):
    pos, neg = _split(ds)
    _, neg_out = target_counts(pos.size, neg.size, spec.target_positive, "under")
    if neg_out >= neg.size:
        return _identity(ds)
    rng = np.random.default_rng(spec.seed)
    keep_neg = rng.choice(neg, size=neg_out, replace=False)
    idx = np.sort(np.concatenate([pos, keep_neg]))
    return ds.subset(idx), idx


def _ccus(ds, spec):
    pos, neg = _split(ds)
    _, neg_out = target_counts(pos.size, neg.size, spec.target_positive, "under")
    if neg_out >= neg.size:
        return _identity(ds)
    C = kmeans(ds.features[neg], neg_out, spec.kmeans_max_iter, spec.kmeans_tol, spec.seed)
    X = np.vstack([ds.features[pos], C])
    y = np.concatenate([np.ones(pos.size, np.int8), np.zeros(neg_out, np.int8)])
    origin = np.concatenate([pos, np.full(neg_out, -1)])
    return Dataset(X, y, ds.feature_names), origin


def _ros(ds, spec):
    pos, neg = _split(ds)
    pos_out, _ = target_counts(pos.size, neg.size, spec.target_positive, "over")
    extra = pos_out - pos.size
    if extra <= 0:
        return _identity(ds)
    rng = np.random.default_rng(spec.seed)
    dup = rng.choice(pos, size=extra, replace=True)
    idx = np.concatenate([np.arange(ds.n), dup])
    return ds.subset(idx), idx


def smote_neighbors(P, k: int):
    """Indices of the ``k`` nearest other points of each row of ``P``.

    Exact brute force; ties resolve to the lower index.
    """
    D = _sq_dists(P, P)
    np.fill_diagonal(D, np.inf)
    return np.argsort(D, axis=1, kind="stable")[:, :k]


def _smote(ds, spec):
    pos, neg = _split(ds)
    pos_out, _ = target_counts(pos.size, neg.size, spec.target_positive, "over")
    extra = pos_out - pos.size
    if extra <= 0:
        return _identity(ds)
    k = spec.smote_k
    if pos.size < k + 1:
        raise DataError(
            f"SMOTE with k={k} needs at least {k + 1} minority rows, got {pos.size}"
        )
    P = ds.features[pos]
    if np.isnan(P).any():
        raise DataError("SMOTE requires imputed features (NaN found)")
    nn = smote_neighbors(P, k)
    rng = np.random.default_rng(spec.seed)
    base = rng.integers(pos.size, size=extra)
    pick = nn[base, rng.integers(k, size=extra)]
    u = rng.random(extra)[:, None]
    synth = P[base] + u * (P[pick] - P[base])
    X = np.vstack([ds.features, synth])
    y = np.concatenate([ds.labels, np.ones(extra, np.int8)])
    origin = np.concatenate([np.arange(ds.n), np.full(extra, -1)])
    return Dataset(X, y, ds.feature_names), origin


_IMPL = {"RUS": _rus, "CCUS": _ccus, "ROS": _ros, "SMOTE": _smote}


def resample_with_origin(ds: Dataset, spec: ResampleSpec):
    """Resample and also return, per output row, the input row it copies.

    Synthetic rows (SMOTE points, CCUS centroids) carry origin -1.
    """
    if spec.method == "NONE":
        return _identity(ds)
    return _IMPL[spec.method](ds, spec)


def resample(ds: Dataset, spec: ResampleSpec) -> Dataset:
    return resample_with_origin(ds, spec)[0]


def _require(spec, method):
    if spec.method != method:
        raise ValueError(f"spec.method is {spec.method}, expected {method}")


def rus(ds: Dataset, spec: ResampleSpec) -> Dataset:
    """Keep all positives and a uniform random subset of negatives."""
    _require(spec, "RUS")
    return _rus(ds, spec)[0]


def ccus(ds: Dataset, spec: ResampleSpec) -> Dataset:
    """Keep all positives; replace the negatives by k-means centroids."""
    _require(spec, "CCUS")
    return _ccus(ds, spec)[0]


def ros(ds: Dataset, spec: ResampleSpec) -> Dataset:
    """Keep all rows and add positives drawn with replacement."""
    _require(spec, "ROS")
    return _ros(ds, spec)[0]


def smote(ds: Dataset, spec: ResampleSpec) -> Dataset:
    """Keep all rows and add synthetic positives between minority neighbours."""
    _require(spec, "SMOTE")
    return _smote(ds, spec)[0]
