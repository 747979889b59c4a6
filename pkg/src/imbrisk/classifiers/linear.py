"""Logistic regression, plain and L1-penalised.

Both minimise the mean negative log-likelihood

    f(b0, b) = mean_i [ log(1 + exp(eta_i)) - y_i * eta_i ],  eta_i = b0 + x_i . b

plus ``lam * ||b||_1`` for the L1 model. The intercept is never penalised.
Plain LR uses gradient descent with an Armijo backtracking line search;
L1LR uses proximal gradient (ISTA) with backtracking on the quadratic
upper bound, which makes the objective non-increasing at every iteration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..data import DataError, Dataset

__all__ = [
    "LinearModel",
    "logistic",
    "predict_proba_linear",
    "nll_and_grad",
    "l1_objective",
    "soft_threshold",
    "full_shrinkage_lambda",
    "train_lr",
    "train_l1lr",
]

MAX_ITER = 5000
TOL = 1e-6


@dataclass(frozen=True, eq=False)
class LinearModel:
    intercept: float
    coefficients: np.ndarray
    lam: float = 0.0
    n_iter: int = 0
    objective: float = math.nan
    converged: bool = False
    objective_trace: tuple[float, ...] = field(default=(), repr=False)
    feature_names: tuple[str, ...] = ()

    kind = "linear"

    def __post_init__(self):
        b = np.array(self.coefficients, dtype=np.float64)
        b.setflags(write=False)
        object.__setattr__(self, "coefficients", b)

    @property
    def d(self) -> int:
        return self.coefficients.shape[0]

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.d:
            raise ValueError(f"model expects {self.d} features, got {X.shape[1]}")
        return self.intercept + X @ self.coefficients

    def predict_proba(self, X) -> np.ndarray:
        return logistic(self.decision_function(X))


def logistic(eta):
    """exp(eta) / (1 + exp(eta)) without overflow for large |eta|."""
    eta = np.asarray(eta, dtype=np.float64)
    out = np.empty_like(eta)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    e = np.exp(eta[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def predict_proba_linear(model: LinearModel, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("predict_proba_linear scores a single feature vector")
    return float(model.predict_proba(x)[0])


def nll_and_grad(X, y, b0: float, b):
    """Mean negative log-likelihood and its gradient ``(g0, g)``."""
    eta = b0 + X @ b
    f = float(np.mean(np.logaddexp(0.0, eta) - y * eta))
    r = logistic(eta) - y
    return f, float(r.mean()), X.T @ r / X.shape[0]


def _nll(X, y, b0, b):
    eta = b0 + X @ b
    return float(np.mean(np.logaddexp(0.0, eta) - y * eta))


def l1_objective(X, y, b0: float, b, lam: float) -> float:
    return _nll(X, y, b0, b) + lam * float(np.abs(b).sum())


def soft_threshold(z, t):
    """sign(z) * max(|z| - t, 0)."""
    if np.any(np.asarray(t) < 0):
        raise ValueError("threshold must be non-negative")
    out = np.sign(z) * np.maximum(np.abs(z) - t, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def _xy(ds: Dataset):
    ds.require_both_classes()
    X = ds.features
    if not np.all(np.isfinite(X)):
        raise DataError("logistic regression needs finite features; preprocess first")
    return X, ds.labels.astype(np.float64)


def _start(y):
    ybar = y.mean()
    return math.log(ybar / (1.0 - ybar))


def full_shrinkage_lambda(ds: Dataset) -> float:
    """Smallest lambda at which every L1LR coefficient is exactly zero.

    The gradient is taken at b = 0 with the intercept at its fitted value
    logit(mean y).
    """
    X, y = _xy(ds)
    _, _, g = nll_and_grad(X, y, _start(y), np.zeros(X.shape[1]))
    return float(np.abs(g).max())


def train_lr(ds: Dataset, max_iter: int = MAX_ITER, tol: float = TOL) -> LinearModel:
    """Unpenalised logistic regression by backtracking gradient descent.

    Stops once the gradient max-norm (intercept included) drops below
    ``tol`` or after ``max_iter`` iterations.
    """
    X, y = _xy(ds)
    b0, b = _start(y), np.zeros(X.shape[1])
    f, g0, g = nll_and_grad(X, y, b0, b)
    trace = [f]
    step, it, converged = 1.0, 0, False
    while it < max_iter:
        gmax = max(abs(g0), float(np.abs(g).max()))
        if gmax < tol:
            converged = True
            break
        sq = g0 * g0 + float(g @ g)
        step *= 2.0
        while step >= 1e-14:
            nb0, nb = b0 - step * g0, b - step * g
            nf = _nll(X, y, nb0, nb)
            if nf <= f - 0.5 * step * sq:
                break
            step *= 0.5
        else:
            # no descent representable in floating point
            break
        b0, b = nb0, nb
        f, g0, g = nll_and_grad(X, y, b0, b)
        trace.append(f)
        it += 1
    return LinearModel(b0, b, 0.0, it, f, converged, tuple(trace), ds.feature_names)


def train_l1lr(ds: Dataset, lam: float, max_iter: int = MAX_ITER, tol: float = TOL,
               warm_start: LinearModel | None = None) -> LinearModel:
    """L1-penalised logistic regression by ISTA with backtracking.

    Each step accepts the proximal point only when the smooth part sits
    under its quadratic model, so ``objective_trace`` never increases.
    Convergence is declared when the gradient mapping max-norm is below
    ``tol``.
    """
    if lam < 0:
        raise ValueError(f"lambda must be non-negative, got {lam}")
    X, y = _xy(ds)
    if warm_start is not None:
        b0, b = float(warm_start.intercept), np.array(warm_start.coefficients)
    else:
        b0, b = _start(y), np.zeros(X.shape[1])
    f, g0, g = nll_and_grad(X, y, b0, b)
    F = f + lam * float(np.abs(b).sum())
    trace = [F]
    step, it, converged = 1.0, 0, False
    while it < max_iter:
        step *= 2.0
        while step >= 1e-14:
            nb0 = b0 - step * g0
            nb = soft_threshold(b - step * g, step * lam)
            d0, d = nb0 - b0, nb - b
            nf = _nll(X, y, nb0, nb)
            bound = f + g0 * d0 + float(g @ d) + (d0 * d0 + float(d @ d)) / (2.0 * step)
            if nf <= bound:
                break
            step *= 0.5
        else:
            break
        gmap = max(abs(d0), float(np.abs(d).max())) / step
        nF = nf + lam * float(np.abs(nb).sum())
        if nF > F:
            # rounding-level increase: already at the floating-point optimum
            converged = gmap < tol
            break
        b0, b = nb0, nb
        f, g0, g = nll_and_grad(X, y, b0, b)
        F = f + lam * float(np.abs(b).sum())
        trace.append(F)
        it += 1
        if gmap < tol:
            converged = True
            break
    return LinearModel(b0, b, float(lam), it, F, converged, tuple(trace), ds.feature_names)
