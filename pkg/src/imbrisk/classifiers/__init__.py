"""Base learners: logistic regression (plain and L1) and a Gini decision tree."""

from .linear import (
    LinearModel,
    full_shrinkage_lambda,
    l1_objective,
    logistic,
    nll_and_grad,
    predict_proba_linear,
    soft_threshold,
    train_l1lr,
    train_lr,
)
from .tree import DecisionTree, best_split, gini, train_tree, tree_predict

__all__ = [
    "LinearModel",
    "DecisionTree",
    "logistic",
    "predict_proba_linear",
    "nll_and_grad",
    "l1_objective",
    "soft_threshold",
    "full_shrinkage_lambda",
    "train_lr",
    "train_l1lr",
    "gini",
    "best_split",
    "train_tree",
    "tree_predict",
]
