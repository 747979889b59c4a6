"""Imbalanced binary risk modelling.

Resampling (RUS, CCUS, ROS, SMOTE) at swept positive ratios, fold-first
cross-validation, logistic regression with and without an L1 penalty,
Gini decision trees with bagging and AdaBoost, and ROC/AUC evaluation.
"""

__version__ = "0.1.0"
