"""Acceptance criteria AC1 to AC10.

Each test appends one ``[PASS]``/``[FAIL]`` line to the session summary.
"""

import functools
import json
import math
import time

import numpy as np
import pytest
from conftest import ACCEPTANCE

from imbrisk.classifiers import (best_split, full_shrinkage_lambda, l1_objective, nll_and_grad,
                                 train_l1lr, train_lr, train_tree)
from imbrisk.cli import main
from imbrisk.config import from_dict
from imbrisk.data import Dataset, generate_synthetic
from imbrisk.ensemble import boosting_train, ensemble_scores
from imbrisk.evaluate import auc
from imbrisk.experiment import Hyper, derive_seed, run_ensemble_stage, run_grid, stratified_kfold
from imbrisk.resample import ResampleSpec, resample_with_origin, target_counts

from test_evaluate import mann_whitney, random_instance
from test_linear import central_diff, gradient_rel_errors
from test_tree import brute_force_root

SEEDS = (0, 1, 2, 3, 4)
# 7.4% positives, separation giving a Bayes-optimal AUC near 0.85
DIRECTIONAL = dict(n=2000, d=10, positive_rate=0.074, separation=1.466)


def criterion(num, title):
    def wrap(fn):
        @functools.wraps(fn)
        def run(*args, **kwargs):
            try:
                out = fn(*args, **kwargs)
            except BaseException as exc:
                ACCEPTANCE.append(f"[FAIL] AC{num:<2d} {title}: {type(exc).__name__}: {str(exc)[:120]}")
                raise
            ACCEPTANCE.append(f"[PASS] AC{num:<2d} {title}" + (f" ({out})" if out else ""))
        return run
    return wrap


@criterion(1, "AUC equals the pairwise Mann-Whitney statistic")
def test_ac1_auc_oracle():
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        s, y = random_instance(rng)
        assert len(s) <= 30
        worst = max(worst, abs(auc(s, y) - mann_whitney(s, y)))
    elapsed = time.perf_counter() - t0
    assert worst <= 1e-9
    assert elapsed < 1.0
    return f"max error {worst:.1e}, {elapsed:.2f} s"


def segment_distances(S, A, B):
    """Distance from every row of ``S`` to every segment ``A[i]``-``B[i]``."""
    AB = B - A
    L = np.einsum("ij,ij->i", AB, AB)
    t = np.einsum("sij,ij->si", S[:, None, :] - A[None], AB) / np.where(L > 0, L, 1.0)
    t = np.clip(t, 0.0, 1.0)
    closest = A[None] + t[..., None] * AB[None]
    return np.linalg.norm(S[:, None, :] - closest, axis=-1)


@criterion(2, "SMOTE points lie on minority k-NN segments; rate within one sample")
def test_ac2_smote_geometry():
    rng = np.random.default_rng(202)
    k = 5
    t0 = time.perf_counter()
    n_synth = 0
    for run in range(100):
        m = int(rng.integers(k + 1, 51))
        d = int(rng.integers(1, 6))
        n_neg = int(rng.integers(m + 1, 4 * m + 20))
        P = rng.normal(size=(m, d))
        N = rng.normal(size=(n_neg, d)) + 1.0
        ds = Dataset(np.vstack([P, N]), np.r_[np.ones(m), np.zeros(n_neg)])
        p = float(rng.uniform(m / ds.n + 0.01, 0.9))
        out, origin = resample_with_origin(ds, ResampleSpec("SMOTE", p, k, seed=run))
        # exhaustive k-NN among minority points
        D = np.array([[np.sum((a - b) ** 2) if i != j else np.inf for j, b in enumerate(P)]
                      for i, a in enumerate(P)])
        pairs = [(i, j) for i in range(m) for j in np.argsort(D[i], kind="stable")[:k]]
        synth = out.features[origin < 0]
        assert np.all(out.labels[origin < 0] == 1)
        if len(synth):
            I, J = np.array(pairs).T
            assert segment_distances(synth, P[I], P[J]).min(axis=1).max() <= 1e-9
        n_synth += len(synth)
        pos_out, _ = target_counts(m, n_neg, p, "over")
        assert out.n_pos == pos_out
        assert abs(out.n_pos - p * out.n) <= 1.0
    elapsed = time.perf_counter() - t0
    assert elapsed < 5.0
    return f"{n_synth} synthetic points, {elapsed:.2f} s"


@criterion(3, "leak-free folds in a full experiment run")
def test_ac3_leak_freedom(tmp_path):
    cfg = {
        "seed": 3, "synthetic": {"n": 600, "d": 5, "positive_rate": 0.1, "separation": 1.5, "seed": 3},
        "folds": 5, "ratios": [0.2, 0.5, 0.8], "classifiers": ["LR", "DT"],
        "hyper": {"n_estimators": 5, "tree_max_depth": 4}, "output_dir": "out", "workers": 1,
    }
    (tmp_path / "c.json").write_text(json.dumps(cfg))
    assert main(["experiment", "--config", str(tmp_path / "c.json"), "--audit"]) == 0
    audit = json.loads((tmp_path / "out" / "audit.json").read_text())
    assert audit["passed"], audit["failures"]
    assert audit["checks"] == 5 * (1 + 4 * 3)
    return f"{audit['checks']} fold/config checks"


@criterion(4, "LR/L1LR gradients, monotone objective, lambda=0 and full shrinkage")
def test_ac4_optimizer(imbalanced):
    rng = np.random.default_rng(404)
    X, y = imbalanced.features, imbalanced.labels.astype(float)
    pts = [rng.normal(scale=0.5, size=X.shape[1] + 1) for _ in range(10)]
    assert max(gradient_rel_errors(X, y, pts)) < 1e-5
    # gradient of the penalized objective away from the kink
    lam = 0.02
    for w in pts:
        _, g0, g = nll_and_grad(X, y, w[0], w[1:])
        analytic = np.r_[g0, g + lam * np.sign(w[1:])]
        numeric = central_diff(lambda v: l1_objective(X, y, v[0], v[1:], lam), w)
        assert np.linalg.norm(analytic - numeric) / np.linalg.norm(numeric) < 1e-5
    for lam in (0.0, 0.001, 0.01, 0.1):
        trace = np.asarray(train_l1lr(imbalanced, lam).objective_trace)
        assert np.all(np.diff(trace) <= 0.0)
    lr, l0 = train_lr(imbalanced), train_l1lr(imbalanced, 0.0)
    assert np.max(np.abs(lr.coefficients - l0.coefficients)) <= 1e-4
    lam_max = full_shrinkage_lambda(imbalanced)
    for f in (1.0, 1.01, 3.0):
        assert np.all(train_l1lr(imbalanced, f * lam_max).coefficients == 0.0)


@criterion(5, "root split equals exhaustive best Gini; importance conservation")
def test_ac5_tree_oracle():
    rng = np.random.default_rng(505)
    for _ in range(50):
        n = int(rng.integers(4, 21))
        d = int(rng.integers(1, 4))
        X = rng.integers(0, 7, size=(n, d)).astype(float)
        y = np.r_[0, 1, (rng.random(n - 2) < 0.5).astype(int)]
        got, want = best_split(X, y, np.ones(n)), brute_force_root(X, y)
        if want is None:
            assert got is None
        else:
            assert got[:2] == want[:2]
            assert abs(got[2] - float(want[2])) <= 1e-12
        t = train_tree(Dataset(X, y), max_depth=6, min_samples_leaf=1)
        if want is not None:
            assert (t.feature[0], t.threshold[0]) == want[:2]
        W = t.class_counts[0].sum()
        leaves = t.feature < 0
        total = t.impurity[0] - np.sum(t.class_counts[leaves].sum(axis=1) / W * t.impurity[leaves])
        assert abs(t.gini_reduction_per_feature.sum() - total) <= 1e-9


@criterion(6, "AdaBoost half-error identity and training-error bound")
def test_ac6_adaboost():
    rounds = 0
    for i in range(20):
        ds = generate_synthetic(150, 3, 0.3, 0.7, seed=600 + i)
        ens = boosting_train(ds, 12, record_weights=True)
        ypm = np.where(ds.labels == 1, 1, -1)
        for t in range(len(ens.weight_history) - 1):
            w = ens.weight_history[t + 1]
            h = np.where(ens.members[t].predict_proba(ds.features) >= 0.5, 1, -1)
            assert abs(w[h != ypm].sum() - 0.5) <= 1e-12
            rounds += 1
        eps = [e for e in ens.round_errors[: len(ens.members)] if 0 < e < 0.5]
        bound = math.prod(2 * math.sqrt(e * (1 - e)) for e in eps)
        err = np.mean((ensemble_scores(ens, ds.features) >= 0.5).astype(int) != ds.labels)
        assert err <= bound
    return f"{rounds} weight updates"


@pytest.fixture(scope="module")
def directional():
    """Cross-validated DT baseline, DT on SMOTE 50% and boosting, per seed."""
    out = {"t_grid": 0.0, "t_boost": 0.0, "rows": []}
    hyper = Hyper()
    for seed in SEEDS:
        ds = generate_synthetic(**DIRECTIONAL, seed=seed)
        plan = stratified_kfold(ds, 10, derive_seed(seed, "folds"))
        t0 = time.perf_counter()
        grid = run_grid(ds, plan, (0.5,), ("SMOTE",), ("DT",), hyper, seed, workers=1)
        t1 = time.perf_counter()
        boost = run_ensemble_stage(ds, plan, ("SMOTE", 0.5), hyper, seed, workers=1, kinds=("boosting",))[0]
        t2 = time.perf_counter()
        base = next(c for c in grid if c.method == "NONE")
        sm = next(c for c in grid if c.method == "SMOTE")
        out["rows"].append((seed, base, sm, boost))
        out["t_grid"] += t1 - t0
        out["t_boost"] += t2 - t1
    return out


@criterion(7, "SMOTE-50% lifts DT recall by >= 0.15 at AUC within 0.02")
def test_ac7_recall_gain(directional):
    gains = []
    for seed, base, sm, _ in directional["rows"]:
        gains.append(sm.mean_recall - base.mean_recall)
        assert sm.mean_recall - base.mean_recall >= 0.15, f"seed {seed}"
        assert sm.mean_auc >= base.mean_auc - 0.02, f"seed {seed}"
    assert directional["t_grid"] < 120.0
    return f"min recall gain {min(gains):.3f}, {directional['t_grid']:.0f} s"


@criterion(8, "boosting AUC >= DT AUC in at least 4 of 5 seeds")
def test_ac8_boosting(directional):
    wins = sum(boost.mean_auc >= sm.mean_auc for _, _, sm, boost in directional["rows"])
    elapsed = directional["t_grid"] + directional["t_boost"]
    assert wins >= 4
    assert elapsed < 180.0
    return f"{wins}/5 seeds, {elapsed:.0f} s"


@criterion(9, "byte-identical reports across reruns and worker counts")
def test_ac9_determinism(tmp_path):
    base = {
        "seed": 9, "synthetic": {"n": 500, "d": 4, "positive_rate": 0.1, "separation": 1.5, "seed": 9},
        "folds": 5, "ratios": [0.3, 0.6],
        "hyper": {"n_estimators": 5, "tree_max_depth": 4, "lambdas": [0.01, 0.1]},
    }
    reports = []
    for name, workers in (("a", 1), ("b", 1), ("c", 2)):
        cfg = tmp_path / f"{name}.json"
        cfg.write_text(json.dumps({**base, "output_dir": name, "workers": workers}))
        assert main(["experiment", "--config", str(cfg)]) == 0
        reports.append((tmp_path / name / "report.json").read_bytes())
    assert reports[0] == reports[1] == reports[2]


@criterion(10, "full default grid on 2000 rows within 10 minutes")
def test_ac10_budget(tmp_path):
    cfg = from_dict({"seed": 10, "synthetic": {**DIRECTIONAL, "seed": 10},
                     "output_dir": str(tmp_path / "out")})
    assert (cfg.folds, len(cfg.ratios), len(cfg.methods), len(cfg.classifiers)) == (10, 9, 4, 3)
    t0 = time.perf_counter()
    assert main(["experiment", "--config", str(_write(tmp_path, cfg))]) == 0
    elapsed = time.perf_counter() - t0
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    assert len(report["grid"]) == 108 + 3
    assert set(report["ensemble_results"]) == {"bagging", "boosting"}
    assert elapsed < 600.0
    return f"{elapsed:.0f} s, optimal {report['optimal_model']['label']}"


def _write(tmp_path, cfg):
    p = tmp_path / "full.json"
    p.write_text(json.dumps({"seed": cfg.seed, "synthetic": cfg.synthetic, "output_dir": cfg.output_dir}))
    return p
