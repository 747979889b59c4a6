"""Bagging and AdaBoost.M1 over the Gini decision tree."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .classifiers.tree import DecisionTree, train_tree
from .data import Dataset

__all__ = [
    "Ensemble",
    "BAGGING_PARAMS",
    "BOOSTING_PARAMS",
    "bootstrap_indices",
    "bagging_train",
    "boosting_train",
    "ensemble_scores",
    "ensemble_predict",
    "ensemble_importance",
]

log = logging.getLogger(__name__)

N_ESTIMATORS = 50
BAGGING_PARAMS = {"max_depth": 8, "min_samples_leaf": 5}
BOOSTING_PARAMS = {"max_depth": 3, "min_samples_leaf": 5}
# alpha for a perfect round, 0.5 * ln((1 - 1e-12) / 1e-12)
ALPHA_CAP = 0.5 * math.log((1.0 - 1e-12) / 1e-12)
_MAX_REDRAWS = 10


@dataclass(frozen=True, eq=False)
class Ensemble:
    kind: str
    members: tuple[DecisionTree, ...]
    member_weights: np.ndarray
    n_estimators: int
    base_params: dict = field(default_factory=dict)
    # boosting: one entry per attempted round, kept or not
    round_errors: tuple[float, ...] = ()
    warnings: tuple[str, ...] = ()
    weight_history: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if self.kind not in ("bagging", "boosting"):
            raise ValueError(f"unknown ensemble kind {self.kind!r}")
        w = np.array(self.member_weights, dtype=np.float64)
        w.setflags(write=False)
        object.__setattr__(self, "member_weights", w)
        object.__setattr__(self, "members", tuple(self.members))
        if len(self.members) != w.shape[0]:
            raise ValueError("member_weights must match members")

    @property
    def d(self) -> int:
        return self.members[0].d

    def predict_proba(self, X) -> np.ndarray:
        return ensemble_scores(self, X)


def bootstrap_indices(n: int, n_estimators: int, seed: int):
    """One independent bootstrap index sample per member, from spawned seeds."""
    children = np.random.SeedSequence(seed).spawn(n_estimators)
    return [np.random.default_rng(c).integers(n, size=n) for c in children]


def bagging_train(ds: Dataset, n_estimators: int = N_ESTIMATORS, base_params=None,
                  seed: int = 0, bootstrap: bool = True) -> Ensemble:
    """Trees on uniform bootstrap samples, combined by averaging leaf probabilities.

    A bootstrap sample holding one class only is redrawn from the same
    member stream, up to 10 times; after that the single-leaf tree is kept.
    ``bootstrap=False`` trains every member on the full sample.
    """
    ds.require_both_classes()
    params = dict(BAGGING_PARAMS if base_params is None else base_params)
    if n_estimators < 1:
        raise ValueError("n_estimators must be >= 1")
    members = []
    for child in np.random.SeedSequence(seed).spawn(n_estimators):
        if not bootstrap:
            members.append(train_tree(ds, None, **params))
            continue
        rng = np.random.default_rng(child)
        for _ in range(_MAX_REDRAWS + 1):
            idx = rng.integers(ds.n, size=ds.n)
            y = ds.labels[idx]
            if 0 < y.sum() < ds.n:
                break
        members.append(train_tree(ds.subset(idx), None, **params))
    return Ensemble("bagging", members, np.ones(len(members)), n_estimators, params)


def boosting_train(ds: Dataset, n_estimators: int = N_ESTIMATORS, base_params=None,
                   seed: int = 0, record_weights: bool = False) -> Ensemble:
    """AdaBoost.M1 with weighted tree fitting.

    Labels are encoded as -1/+1 and a tree votes +1 when its leaf
    probability is at least 0.5. Each round fits a tree on the current
    weights, takes its weighted error ``eps`` and ``alpha = 0.5 ln((1-eps)/eps)``,
    scales misclassified weights by ``exp(alpha)`` and the rest by
    ``exp(-alpha)``, then renormalises. A round with ``eps >= 0.5`` is
    discarded and ends training; ``eps == 0`` keeps the tree with a capped
    alpha and ends training. ``seed`` is accepted for a uniform signature;
    the procedure itself is deterministic.
    """
    ds.require_both_classes()
    params = dict(BOOSTING_PARAMS if base_params is None else base_params)
    if n_estimators < 1:
        raise ValueError("n_estimators must be >= 1")
    ypm = np.where(ds.labels == 1, 1.0, -1.0)
    w = np.full(ds.n, 1.0 / ds.n)
    history = [w.copy()] if record_weights else []
    members, alphas, errors, notes = [], [], [], []
    for t in range(n_estimators):
        tree = train_tree(ds, w, **params)
        h = np.where(tree.predict_proba(ds.features) >= 0.5, 1.0, -1.0)
        miss = h != ypm
        eps = float(w[miss].sum())
        errors.append(eps)
        if eps >= 0.5:
            if not members:
                msg = (f"first boosting round has weighted error {eps:.4f} >= 0.5; "
                       "falling back to a single member with weight 1")
                log.warning(msg)
                notes.append(msg)
                members.append(tree)
                alphas.append(1.0)
            break
        if eps <= 0.0:
            members.append(tree)
            alphas.append(ALPHA_CAP)
            break
        alpha = 0.5 * math.log((1.0 - eps) / eps)
        members.append(tree)
        alphas.append(alpha)
        w = w * np.exp(np.where(miss, alpha, -alpha))
        w /= w.sum()
        if record_weights:
            history.append(w.copy())
    return Ensemble("boosting", members, np.array(alphas), n_estimators, params,
                    tuple(errors), tuple(notes), tuple(history))


def ensemble_scores(ens: Ensemble, X) -> np.ndarray:
    """Scores in [0, 1] for each row of ``X``.

    Bagging averages member leaf probabilities. Boosting maps the
    alpha-weighted mean vote s in [-1, 1] to (s + 1) / 2.
    """
    if not ens.members:
        raise ValueError("empty ensemble")
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if ens.kind == "bagging":
        return np.mean([m.predict_proba(X) for m in ens.members], axis=0)
    votes = np.array([np.where(m.predict_proba(X) >= 0.5, 1.0, -1.0) for m in ens.members])
    a = ens.member_weights
    s = a @ votes / a.sum()
    return np.clip((s + 1.0) / 2.0, 0.0, 1.0)


def ensemble_predict(ens: Ensemble, x):
    """Score and class of one row; a tied vote (score 0.5) goes to class 1."""
    score = float(ensemble_scores(ens, x)[0])
    return score, int(score >= 0.5)


def ensemble_importance(ens: Ensemble) -> np.ndarray:
    """Member-weighted mean Gini reduction per feature, normalised to sum 1."""
    a = ens.member_weights
    g = sum(w * m.gini_reduction_per_feature for w, m in zip(a, ens.members)) / a.sum()
    s = g.sum()
    return g / s if s > 0 else np.zeros_like(g)
