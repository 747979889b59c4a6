"""JSON model files.

A model file is a JSON object::

    {
      "format": "imbrisk.model/1",
      "label": "DT_SMOTE_50%_boosting",
      "preprocess": {...PreprocessStats...} | null,
      "model": {"kind": "linear" | "tree" | "bagging" | "boosting", ...}
    }

Linear models store intercept, coefficients, lambda and the training log.
Trees store their node arrays in preorder (``feature == -1`` marks a leaf).
Ensembles store hyperparameters, member weights and the member trees.
Python's float repr round-trips exactly through JSON, so loading is lossless.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .classifiers.linear import LinearModel
from .classifiers.tree import DecisionTree
from .data import PreprocessStats
from .ensemble import Ensemble

__all__ = ["FORMAT", "model_to_dict", "model_from_dict", "save_model", "load_model"]

FORMAT = "imbrisk.model/1"

_TREE_ARRAYS = ("feature", "threshold", "left", "right", "class_counts", "value",
                "impurity", "gini_reduction_per_feature")


def _tree_to_dict(t: DecisionTree) -> dict:
    d = {"kind": "tree", "max_depth": t.max_depth, "min_samples_leaf": t.min_samples_leaf}
    for name in _TREE_ARRAYS:
        d[name] = getattr(t, name).tolist()
    return d


def _tree_from_dict(d: dict) -> DecisionTree:
    arrays = [np.array(d[name]) for name in _TREE_ARRAYS]
    arrays[4] = arrays[4].reshape(-1, 2)
    return DecisionTree(*arrays, max_depth=d["max_depth"], min_samples_leaf=d["min_samples_leaf"])


def model_to_dict(model) -> dict:
    if isinstance(model, LinearModel):
        return {
            "kind": "linear",
            "intercept": model.intercept,
            "coefficients": model.coefficients.tolist(),
            "lambda": model.lam,
            "n_iter": model.n_iter,
            "objective": model.objective,
            "converged": model.converged,
            "objective_trace": list(model.objective_trace),
            "feature_names": list(model.feature_names),
        }
    if isinstance(model, DecisionTree):
        return _tree_to_dict(model)
    if isinstance(model, Ensemble):
        return {
            "kind": model.kind,
            "n_estimators": model.n_estimators,
            "base_params": dict(model.base_params),
            "member_weights": model.member_weights.tolist(),
            "round_errors": list(model.round_errors),
            "warnings": list(model.warnings),
            "members": [_tree_to_dict(m) for m in model.members],
        }
    raise TypeError(f"cannot serialise {type(model).__name__}")


def model_from_dict(d: dict):
    kind = d.get("kind")
    if kind == "linear":
        return LinearModel(
            d["intercept"], np.array(d["coefficients"], dtype=np.float64), d["lambda"],
            d["n_iter"], d["objective"], d["converged"], tuple(d["objective_trace"]),
            tuple(d["feature_names"]),
        )
    if kind == "tree":
        return _tree_from_dict(d)
    if kind in ("bagging", "boosting"):
        return Ensemble(
            kind, [_tree_from_dict(m) for m in d["members"]],
            np.array(d["member_weights"], dtype=np.float64), d["n_estimators"],
            dict(d["base_params"]), tuple(d["round_errors"]), tuple(d["warnings"]),
        )
    raise ValueError(f"unknown model kind {kind!r}")


def save_model(path, model, preprocess: PreprocessStats | None = None, label: str = "") -> None:
    doc = {
        "format": FORMAT,
        "label": label,
        "preprocess": preprocess.to_dict() if preprocess is not None else None,
        "model": model_to_dict(model),
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def load_model(path):
    """Return ``(model, preprocess_stats_or_None, label)``."""
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != FORMAT:
        raise ValueError(f"{path}: not an {FORMAT} model file")
    pre = doc.get("preprocess")
    stats = PreprocessStats.from_dict(pre) if pre is not None else None
    return model_from_dict(doc["model"]), stats, doc.get("label", "")
