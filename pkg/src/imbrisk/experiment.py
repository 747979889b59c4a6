"""Fold-first resampling grid, ensemble stage, model selection and report.

Every fold follows the same leak-free pipeline (:func:`fold_pipeline`):
preprocessing statistics are fitted on the training folds only, the
training folds alone are resampled, and the validation fold is scored
untouched apart from applying the training statistics.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .classifiers import train_l1lr, train_lr, train_tree
from .data import DataError, Dataset, PreprocessStats, apply_preprocess, fit_preprocess
from .ensemble import bagging_train, boosting_train, ensemble_importance
from .evaluate import metric_set, pca2, roc_points, write_pca_csv, write_roc_csv
from .resample import METHODS, ResampleSpec, resample_with_origin
from .serialize import save_model

__all__ = [
    "CLASSIFIERS",
    "DEFAULT_RATIOS",
    "Hyper",
    "FoldPlan",
    "FoldData",
    "GridCell",
    "derive_seed",
    "model_label",
    "stratified_kfold",
    "fold_pipeline",
    "run_grid",
    "select_best",
    "run_ensemble_stage",
    "finalize",
    "run_experiment",
    "audit_leakage",
    "write_outputs",
]

log = logging.getLogger(__name__)

CLASSIFIERS = ("LR", "L1LR", "DT")
RESAMPLERS = tuple(m for m in METHODS if m != "NONE")
DEFAULT_RATIOS = tuple(round(0.1 * i, 1) for i in range(1, 10))
TIE_TOL = 0.005
REPORT_FORMAT = "imbrisk.report/1"


@dataclass(frozen=True)
class Hyper:
    """Classifier, resampler and preprocessing settings for a run."""

    lambdas: tuple[float, ...] = (0.001, 0.01, 0.1)
    lr_max_iter: int = 5000
    lr_tol: float = 1e-6
    tree_max_depth: int = 8
    tree_min_samples_leaf: int = 5
    n_estimators: int = 50
    boosting_max_depth: int = 3
    smote_k: int = 5
    kmeans_max_iter: int = 100
    kmeans_tol: float = 1e-6
    missing_threshold: float = 0.70
    threshold: float = 0.5

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambdas"] = list(self.lambdas)
        return d


def derive_seed(master: int, *keys) -> int:
    """Stable 63-bit seed from a master seed and a key path.

    Uses crc32 of the key text (Python's ``hash`` is salted per process).
    """
    words = [int(master) & 0xFFFFFFFF, (int(master) >> 32) & 0xFFFFFFFF]
    words += [zlib.crc32(repr(k).encode()) for k in keys]
    return int(np.random.SeedSequence(words).generate_state(2, np.uint64)[0] >> np.uint64(1))


def _pct(ratio: float) -> str:
    return f"{ratio * 100:.10g}%"


def model_label(classifier: str, method: str, ratio: float | None, ensemble: str | None = None) -> str:
    """``<clf>_<method>_<ratio>[_<ensemble>]``, e.g. ``DT_SMOTE_50%_boosting``."""
    parts = [classifier, method]
    if method != "NONE" and ratio is not None:
        parts.append(_pct(ratio))
    if ensemble:
        parts.append(ensemble)
    return "_".join(parts)


@dataclass(frozen=True, eq=False)
class FoldPlan:
    k: int
    assignments: np.ndarray
    seed: int

    def __post_init__(self):
        a = np.array(self.assignments, dtype=np.int64)
        a.setflags(write=False)
        object.__setattr__(self, "assignments", a)

    def validation(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def training(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)

    def to_dict(self, labels=None) -> dict:
        d = {
            "k": self.k,
            "seed": self.seed,
            "fold_sizes": np.bincount(self.assignments, minlength=self.k).tolist(),
        }
        if labels is not None:
            d["fold_positives"] = np.bincount(
                self.assignments, weights=np.asarray(labels), minlength=self.k
            ).astype(int).tolist()
        return d


def stratified_kfold(ds: Dataset, k: int = 10, seed: int = 0) -> FoldPlan:
    """Shuffle each class with ``seed`` and deal its rows round-robin.

    Negatives continue the deal where positives stopped, so fold sizes and
    per-fold positive counts each differ by at most one.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    pos = np.flatnonzero(ds.labels == 1)
    neg = np.flatnonzero(ds.labels == 0)
    if pos.size < k or neg.size < k:
        raise DataError(
            f"{k}-fold stratification needs >= {k} rows per class, "
            f"got {pos.size} positives and {neg.size} negatives"
        )
    rng = np.random.default_rng(seed)
    assign = np.empty(ds.n, dtype=np.int64)
    assign[rng.permutation(pos)] = np.arange(pos.size) % k
    assign[rng.permutation(neg)] = (np.arange(neg.size) + pos.size) % k
    return FoldPlan(k, assign, seed)


def _resample_spec(method, ratio, hyper, master_seed, fold, tag=None):
    keys = (fold, method, ratio) if tag is None else (tag, method, ratio)
    return ResampleSpec(
        method, ratio if method != "NONE" else 0.5, hyper.smote_k,
        hyper.kmeans_max_iter, hyper.kmeans_tol, derive_seed(master_seed, *keys),
    )


@dataclass(frozen=True, eq=False)
class FoldData:
    fold: int
    stats: PreprocessStats
    train: Dataset
    origin: np.ndarray  # dataset row per resampled training row, -1 if synthetic
    val_idx: np.ndarray
    val: Dataset


def fold_pipeline(ds: Dataset, plan: FoldPlan, fold: int, spec: ResampleSpec,
                  hyper: Hyper = Hyper()) -> FoldData:
    """Preprocess and resample one fold's training part; prepare its validation part."""
    tr_idx, va_idx = plan.training(fold), plan.validation(fold)
    raw_train = ds.subset(tr_idx)
    stats = fit_preprocess(raw_train, hyper.missing_threshold)
    train = apply_preprocess(raw_train, stats)
    val = apply_preprocess(ds.subset(va_idx), stats)
    rs, local = resample_with_origin(train, spec)
    origin = np.where(local >= 0, tr_idx[np.maximum(local, 0)], -1)
    return FoldData(fold, stats, rs, origin, va_idx, val)


def _fit_linear_family(train: Dataset, classifiers, hyper):
    """Fitted models keyed by (classifier, lambda); lambda is None for LR and DT."""
    out = {}
    lr = None
    if "LR" in classifiers or "L1LR" in classifiers:
        lr = train_lr(train, hyper.lr_max_iter, hyper.lr_tol)
    if "LR" in classifiers:
        out[("LR", None)] = lr
    if "L1LR" in classifiers:
        for lam in hyper.lambdas:
            out[("L1LR", lam)] = train_l1lr(train, lam, hyper.lr_max_iter, hyper.lr_tol, warm_start=lr)
    if "DT" in classifiers:
        out[("DT", None)] = train_tree(train, None, hyper.tree_max_depth, hyper.tree_min_samples_leaf)
    return out


# worker-process state, set once per pool
_STATE: dict = {}


def _init_worker(ds, plan, hyper, master_seed, classifiers):
    _STATE.update(ds=ds, plan=plan, hyper=hyper, seed=master_seed, classifiers=classifiers)


def _grid_job(job):
    fold, method, ratio = job
    ds, plan, hyper = _STATE["ds"], _STATE["plan"], _STATE["hyper"]
    spec = _resample_spec(method, ratio, hyper, _STATE["seed"], fold)
    try:
        fd = fold_pipeline(ds, plan, fold, spec, hyper)
        models = _fit_linear_family(fd.train, _STATE["classifiers"], hyper)
    except (DataError, ValueError, FloatingPointError) as exc:
        log.warning("fold %d %s@%s failed: %s", fold, method, ratio, exc)
        return job, None, str(exc)
    scores = {key: m.predict_proba(fd.val.features) for key, m in models.items()}
    return job, scores, None


def _ensemble_job(job):
    fold, kind, method, ratio = job
    ds, plan, hyper, seed = _STATE["ds"], _STATE["plan"], _STATE["hyper"], _STATE["seed"]
    spec = _resample_spec(method, ratio, hyper, seed, fold)
    try:
        fd = fold_pipeline(ds, plan, fold, spec, hyper)
        if kind == "bagging":
            ens = bagging_train(
                fd.train, hyper.n_estimators,
                {"max_depth": hyper.tree_max_depth, "min_samples_leaf": hyper.tree_min_samples_leaf},
                derive_seed(seed, fold, method, ratio, "bagging"),
            )
        else:
            ens = boosting_train(
                fd.train, hyper.n_estimators,
                {"max_depth": hyper.boosting_max_depth, "min_samples_leaf": hyper.tree_min_samples_leaf},
                derive_seed(seed, fold, method, ratio, "boosting"),
            )
    except (DataError, ValueError, FloatingPointError) as exc:
        log.warning("fold %d %s on %s@%s failed: %s", fold, kind, method, ratio, exc)
        return job, None, None, str(exc)
    return job, ens.predict_proba(fd.val.features), list(ens.round_errors), None


def _map(fn, jobs, workers, init_args):
    if workers is None or workers <= 1:
        _init_worker(*init_args)
        try:
            return [fn(j) for j in jobs]
        finally:
            _STATE.clear()
    with ProcessPoolExecutor(workers, initializer=_init_worker, initargs=init_args) as pool:
        return list(pool.map(fn, jobs, chunksize=1))


def _nanmean(vals):
    vals = [v for v in vals if v is not None]
    return float(np.mean(vals)) if vals else None


@dataclass(eq=False)
class GridCell:
    """Cross-validated results of one (classifier, method, ratio) configuration.

    ``target_positive`` is ``None`` for the unresampled baseline. For L1LR,
    ``lam`` is the lambda with the best mean AUC. ``oof_scores`` holds every
    row's out-of-fold score (NaN where its fold failed).
    """

    classifier: str
    method: str
    target_positive: float | None
    per_fold_metrics: list
    ensemble: str | None = None
    lam: float | None = None
    oof_scores: np.ndarray | None = field(default=None, repr=False)
    round_errors: list | None = None
    errors: list = field(default_factory=list)

    @property
    def label(self) -> str:
        return model_label(self.classifier, self.method, self.target_positive, self.ensemble)

    def _mean(self, name):
        return _nanmean([getattr(m, name) if m is not None else None for m in self.per_fold_metrics])

    @property
    def mean_auc(self):
        return self._mean("auc")

    @property
    def mean_recall(self):
        return self._mean("recall")

    @property
    def mean_f1(self):
        return self._mean("f1")

    @property
    def mean_precision(self):
        return self._mean("precision")

    def null_folds(self, name: str = "auc") -> int:
        return sum(1 for m in self.per_fold_metrics if m is None or getattr(m, name) is None)

    def to_dict(self) -> dict:
        d = {
            "label": self.label,
            "classifier": self.classifier,
            "ensemble": self.ensemble,
            "method": self.method,
            "target_positive": self.target_positive,
            "lambda": self.lam,
            "mean_auc": self.mean_auc,
            "mean_recall": self.mean_recall,
            "mean_precision": self.mean_precision,
            "mean_f1": self.mean_f1,
            "null_folds": {n: self.null_folds(n) for n in ("auc", "recall", "precision", "f1")},
            "per_fold_metrics": [m.to_dict() if m is not None else None for m in self.per_fold_metrics],
            "errors": list(self.errors),
        }
        if self.round_errors is not None:
            d["round_errors"] = self.round_errors
        return d


def _cell(classifier, method, ratio, plan, ds, fold_scores, threshold, **kw):
    """Assemble a cell from ``{fold: scores or None}``."""
    metrics, errors = [], []
    oof = np.full(ds.n, np.nan)
    for f in range(plan.k):
        s = fold_scores.get(f)
        if s is None:
            metrics.append(None)
            continue
        va = plan.validation(f)
        oof[va] = s
        metrics.append(metric_set(s, ds.labels[va], threshold))
    return GridCell(classifier, method, ratio, metrics, oof_scores=oof, errors=errors, **kw)


def _sort_key(cell: GridCell, base_rate: float):
    def v(x):
        return -math.inf if x is None else x
    ratio = base_rate if cell.target_positive is None else cell.target_positive
    return (v(cell.mean_auc), v(cell.mean_recall), v(cell.mean_f1), -ratio)


def run_grid(ds: Dataset, plan: FoldPlan, ratios=DEFAULT_RATIOS, methods=RESAMPLERS,
             classifiers=CLASSIFIERS, hyper: Hyper = Hyper(), master_seed: int = 0,
             workers: int | None = None) -> list:
    """Cross-validate every (classifier, method, ratio) plus one unresampled baseline per classifier.

    Jobs are (fold, method, ratio); all classifiers share the job's
    resampled training set. Failed jobs give null fold metrics.
    """
    for r in ratios:
        if not 0.0 < r < 1.0:
            raise ValueError(f"ratio {r} outside (0, 1)")
    methods = [m.upper() for m in methods]
    configs = [("NONE", None)] + [(m, r) for m in methods if m != "NONE" for r in ratios]
    jobs = [(f, m, r) for (m, r) in configs for f in range(plan.k)]
    results = _map(_grid_job, jobs, workers, (ds, plan, hyper, master_seed, tuple(classifiers)))
    by_cfg: dict = {}
    failures: dict = {}
    for (f, m, r), scores, err in results:
        by_cfg.setdefault((m, r), {})[f] = scores
        if err is not None:
            failures.setdefault((m, r), []).append(f"fold {f}: {err}")
    grid = []
    for m, r in configs:
        per_fold = by_cfg[(m, r)]
        for clf in classifiers:
            if clf == "L1LR":
                cands = [
                    _cell(clf, m, r, plan, ds,
                          {f: (s[(clf, lam)] if s is not None else None) for f, s in per_fold.items()},
                          hyper.threshold, lam=lam)
                    for lam in hyper.lambdas
                ]
                # lambda ties go to the smaller value
                cell = max(cands, key=lambda c: (-math.inf if c.mean_auc is None else c.mean_auc, -c.lam))
            else:
                cell = _cell(clf, m, r, plan, ds,
                             {f: (s[(clf, None)] if s is not None else None) for f, s in per_fold.items()},
                             hyper.threshold)
            cell.errors = failures.get((m, r), [])
            grid.append(cell)
    return grid


def select_best(grid, base_rate: float = 0.0) -> dict:
    """Best cell per classifier by mean AUC, then recall, then F1, then lower ratio."""
    if not grid:
        raise ValueError("empty grid")
    best = {}
    for clf in dict.fromkeys(c.classifier for c in grid if c.ensemble is None):
        cells = [c for c in grid if c.classifier == clf and c.ensemble is None]
        if all(c.mean_auc is None for c in cells):
            raise ValueError(f"every {clf} cell has null metrics")
        best[clf] = max(cells, key=lambda c: _sort_key(c, base_rate))
    return best


def run_ensemble_stage(ds: Dataset, plan: FoldPlan, dt_best, hyper: Hyper = Hyper(),
                       master_seed: int = 0, workers: int | None = None,
                       kinds=("bagging", "boosting")) -> list:
    """Cross-validated bagging and boosting cells at the DT-best (method, ratio).

    Uses the same fold plan and the same per-fold resampled training sets
    as the grid.
    """
    method, ratio = dt_best
    jobs = [(f, kind, method, ratio) for kind in kinds for f in range(plan.k)]
    results = _map(_ensemble_job, jobs, workers, (ds, plan, hyper, master_seed, ("DT",)))
    cells = []
    for kind in kinds:
        scores, rounds, errs = {}, [], []
        for (f, k, _, _), s, eps, err in results:
            if k != kind:
                continue
            scores[f] = s
            rounds.append(eps)
            if err is not None:
                errs.append(f"fold {f}: {err}")
        cell = _cell("DT", method, ratio, plan, ds, scores, hyper.threshold, ensemble=kind,
                     round_errors=rounds if kind == "boosting" else None)
        cell.errors = errs
        cells.append(cell)
    return cells


def _fit_final(ds, cell: GridCell, hyper: Hyper, master_seed: int):
    """Refit a candidate on the whole (preprocessed, resampled) dataset."""
    stats = fit_preprocess(ds, hyper.missing_threshold)
    full = apply_preprocess(ds, stats)
    ratio = cell.target_positive
    spec = _resample_spec(cell.method, ratio, hyper, master_seed, None, tag="final")
    train, _ = resample_with_origin(full, spec)
    if cell.ensemble == "bagging":
        model = bagging_train(
            train, hyper.n_estimators,
            {"max_depth": hyper.tree_max_depth, "min_samples_leaf": hyper.tree_min_samples_leaf},
            derive_seed(master_seed, "final", cell.method, ratio, "bagging"),
        )
    elif cell.ensemble == "boosting":
        model = boosting_train(
            train, hyper.n_estimators,
            {"max_depth": hyper.boosting_max_depth, "min_samples_leaf": hyper.tree_min_samples_leaf},
            derive_seed(master_seed, "final", cell.method, ratio, "boosting"),
        )
    elif cell.classifier == "LR":
        model = train_lr(train, hyper.lr_max_iter, hyper.lr_tol)
    elif cell.classifier == "L1LR":
        model = train_l1lr(train, cell.lam, hyper.lr_max_iter, hyper.lr_tol)
    else:
        model = train_tree(train, None, hyper.tree_max_depth, hyper.tree_min_samples_leaf)
    return model, stats


def _importance(model, names):
    if getattr(model, "kind", None) == "linear":
        a = np.abs(model.coefficients)
        kind = "abs_coefficient"
    elif getattr(model, "kind", None) == "tree":
        a = model.gini_reduction_per_feature
        kind = "gini_reduction"
    else:
        a = ensemble_importance(model)
        kind = "gini_reduction"
    s = a.sum()
    a = a / s if s > 0 else np.zeros_like(a)
    order = sorted(range(len(a)), key=lambda j: (-a[j], j))
    return kind, [(names[j], float(a[j])) for j in order]


def _cell_summary(c: GridCell) -> dict:
    return {
        "label": c.label,
        "classifier": c.classifier,
        "ensemble": c.ensemble,
        "method": c.method,
        "target_positive": c.target_positive,
        "lambda": c.lam,
        "mean_auc": c.mean_auc,
        "mean_recall": c.mean_recall,
        "mean_precision": c.mean_precision,
        "mean_f1": c.mean_f1,
    }


def choose_optimal(candidates, base_rate: float = 0.0, tie_tol: float = TIE_TOL):
    """Highest mean AUC with the select_best tie rules.

    Boosting within ``tie_tol`` AUC of the leader takes the lead when its
    mean recall is at least the leader's.
    """
    leader = max(candidates, key=lambda c: _sort_key(c, base_rate))
    for c in candidates:
        if (c.ensemble == "boosting" and c is not leader and c.mean_auc is not None
                and leader.mean_auc is not None
                and c.mean_auc >= leader.mean_auc - tie_tol
                and (c.mean_recall or 0.0) >= (leader.mean_recall or 0.0)):
            return c, "boosting within AUC tie tolerance with recall priority"
    return leader, "highest mean AUC"


@dataclass(eq=False)
class ExperimentResult:
    report: dict
    grid: list
    ensemble_cells: list
    best: dict
    optimal: GridCell
    final_model: object
    final_stats: PreprocessStats
    plan: FoldPlan


def finalize(grid, ensemble_cells, ds: Dataset, plan: FoldPlan, hyper: Hyper = Hyper(),
             master_seed: int = 0, config: dict | None = None) -> ExperimentResult:
    """Pick the optimal model, refit it on all data and assemble the report."""
    base_rate = ds.n_pos / ds.n
    best = select_best(grid, base_rate)
    candidates = [best[c] for c in best] + list(ensemble_cells)
    candidates = [c for c in candidates if c.mean_auc is not None]
    optimal, rule = choose_optimal(candidates, base_rate)
    model, stats = _fit_final(ds, optimal, hyper, master_seed)
    kind, ranking = _importance(model, stats.kept_names)
    report = {
        "format": REPORT_FORMAT,
        "config": config or {},
        "master_seed": master_seed,
        "hyper": hyper.to_dict(),
        "dataset": {
            "n": ds.n,
            "d": ds.d,
            "positive_rate": base_rate,
            "feature_names": list(ds.feature_names),
        },
        "fold_plan": plan.to_dict(ds.labels),
        "grid": [c.to_dict() for c in grid],
        "best_per_classifier": {k: _cell_summary(c) for k, c in best.items()},
        "ensemble_results": {c.ensemble: c.to_dict() for c in ensemble_cells},
        "optimal_model": {**_cell_summary(optimal), "selection_rule": rule},
        "importance_ranking": {"kind": kind, "model": optimal.label,
                               "ranking": [[n, s] for n, s in ranking]},
        "null_fold_cells": sum(1 for c in list(grid) + list(ensemble_cells) if c.null_folds() > 0),
    }
    return ExperimentResult(report, list(grid), list(ensemble_cells), best, optimal, model, stats, plan)


def run_experiment(ds: Dataset, k: int = 10, master_seed: int = 0, ratios=DEFAULT_RATIOS,
                   methods=RESAMPLERS, classifiers=CLASSIFIERS, hyper: Hyper = Hyper(),
                   workers: int | None = None, config: dict | None = None) -> ExperimentResult:
    """All five stages: grid, per-classifier selection, ensembles, final choice, importance."""
    plan = stratified_kfold(ds, k, derive_seed(master_seed, "folds"))
    log.info("grid: %d folds, %d methods x %d ratios, classifiers %s",
             k, len(methods), len(ratios), ",".join(classifiers))
    grid = run_grid(ds, plan, ratios, methods, classifiers, hyper, master_seed, workers)
    best = select_best(grid, ds.n_pos / ds.n)
    ens = []
    if "DT" in best:
        dt = best["DT"]
        log.info("ensemble stage at %s", dt.label)
        ens = run_ensemble_stage(ds, plan, (dt.method, dt.target_positive), hyper, master_seed, workers)
    return finalize(grid, ens, ds, plan, hyper, master_seed, config)


def _digest(*arrays) -> str:
    h = hashlib.sha256()
    for a in arrays:
        a = np.ascontiguousarray(a)
        h.update(str(a.dtype).encode())
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()


def audit_leakage(ds: Dataset, plan: FoldPlan, configs, hyper: Hyper = Hyper(),
                  master_seed: int = 0, perturb_seed: int = 12345) -> dict:
    """Check the fold pipeline for validation leakage.

    For each fold and each (method, ratio) config:

    * every validation row fed to scoring is byte-identical to a dataset row
      and none of its indices appears among the resampled training origins;
    * re-running the pipeline after scrambling the validation rows (features
      replaced with noise or NaN, labels flipped) yields identical
      preprocessing statistics and an identical resampled training set.
    """
    rows = {ds.features[i].tobytes() for i in range(ds.n)}
    rng = np.random.default_rng(perturb_seed)
    checks, failures = 0, []
    for f in range(plan.k):
        va = plan.validation(f)
        X = ds.features.copy()
        y = ds.labels.copy()
        X[va] = rng.normal(50.0, 30.0, size=(va.size, ds.d))
        X[va[::3], 0] = np.nan
        y[va] = 1 - y[va]
        perturbed = Dataset(X, y, ds.feature_names)
        for method, ratio in configs:
            spec = _resample_spec(method, ratio, hyper, master_seed, f)
            a = fold_pipeline(ds, plan, f, spec, hyper)
            b = fold_pipeline(perturbed, plan, f, spec, hyper)
            tag = f"fold {f} {model_label('*', method, ratio)}"
            checks += 1
            raw_val = ds.features[a.val_idx]
            if not all(r.tobytes() in rows for r in raw_val):
                failures.append(f"{tag}: scored row not in dataset")
            if np.intersect1d(a.origin[a.origin >= 0], a.val_idx).size:
                failures.append(f"{tag}: validation row inside resampled training set")
            if a.stats != b.stats:
                failures.append(f"{tag}: preprocessing stats depend on validation rows")
            if (_digest(a.train.features, a.train.labels, a.origin)
                    != _digest(b.train.features, b.train.labels, b.origin)):
                failures.append(f"{tag}: resampled training set depends on validation rows")
    return {"checks": checks, "failures": failures, "passed": not failures}


def _write_csv_rows(path, header, rows):
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in r])


def dumps_report(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_outputs(result: ExperimentResult, ds: Dataset, out_dir, hyper: Hyper = Hyper(),
                  master_seed: int = 0, pca_ratio: float | None = None) -> list:
    """Write report.json and the companion CSVs; returns the written paths.

    Layout::

        report.json             full report
        grid.csv                one row per grid / ensemble cell
        roc/<label>.csv         fpr,tpr from pooled out-of-fold scores
        importance.csv          feature,importance of the optimal model
        pca/<method>.csv        pc1,pc2,label of each resampled variant
        model.json              optimal model refitted on all data
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    p = out / "report.json"
    p.write_text(dumps_report(result.report))
    written.append(p)

    p = out / "grid.csv"
    _write_csv_rows(p, ["label", "classifier", "ensemble", "method", "target_positive", "lambda",
                        "mean_auc", "mean_recall", "mean_precision", "mean_f1", "null_folds"],
                    [[c.label, c.classifier, c.ensemble or "", c.method, c.target_positive, c.lam,
                      c.mean_auc, c.mean_recall, c.mean_precision, c.mean_f1, c.null_folds()]
                     for c in result.grid + result.ensemble_cells])
    written.append(p)

    roc_dir = out / "roc"
    for c in list(result.best.values()) + result.ensemble_cells:
        ok = ~np.isnan(c.oof_scores)
        y = ds.labels[ok]
        if y.size and 0 < y.sum() < y.size:
            p = roc_dir / f"{c.label}.csv"
            write_roc_csv(roc_points(c.oof_scores[ok], y), p)
            written.append(p)

    p = out / "importance.csv"
    _write_csv_rows(p, ["feature", "importance"], result.report["importance_ranking"]["ranking"])
    written.append(p)

    stats = result.final_stats
    full = apply_preprocess(ds, stats)
    if pca_ratio is None:
        tp = result.best["DT"].target_positive if "DT" in result.best else None
        pca_ratio = tp if tp is not None else 0.5
    pca_dir = out / "pca"
    for method in ("NONE",) + RESAMPLERS:
        spec = _resample_spec(method, pca_ratio, hyper, master_seed, None, tag="pca")
        try:
            rs, _ = resample_with_origin(full, spec)
            proj = pca2(rs)
        except (DataError, ValueError) as exc:
            log.warning("PCA for %s skipped: %s", method, exc)
            continue
        p = pca_dir / f"{method}.csv"
        write_pca_csv(proj, rs.labels, p)
        written.append(p)

    p = out / "model.json"
    save_model(p, result.final_model, stats, result.optimal.label)
    written.append(p)
    return written
