"""Command-line interface.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 numeric failure. Set ``IMBRISK_LOG_LEVEL`` (e.g. ``DEBUG``) for more
logging on standard error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .classifiers import train_l1lr, train_lr, train_tree
from .config import ConfigError, RunConfig, load_config, validate_synthetic
from .data import (DataError, Dataset, apply_preprocess, fit_preprocess, generate_synthetic,
                   load_csv, positive_rate, write_csv)
from .ensemble import BAGGING_PARAMS, BOOSTING_PARAMS, bagging_train, boosting_train
from .experiment import (RESAMPLERS, audit_leakage, derive_seed, model_label, run_experiment,
                         write_outputs)
from .resample import METHODS, ResampleSpec, resample
from .serialize import load_model, save_model

log = logging.getLogger("imbrisk")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
INCOMPLETE = "INCOMPLETE"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def cmd_generate(args) -> int:
    if args.config:
        cfg = json.loads(Path(args.config).read_text())
        if "synthetic" not in cfg:
            raise ConfigError("synthetic: the config has no synthetic block")
        syn = dict(cfg["synthetic"])
    else:
        syn = {}
    for key in ("n", "d", "positive_rate", "separation", "seed"):
        v = getattr(args, key)
        if v is not None:
            syn[key] = v
    syn = validate_synthetic(syn)
    ds = generate_synthetic(**syn)
    write_csv(ds, args.out, args.target_column)
    log.info("wrote %d x %d synthetic rows (%.1f%% positive) to %s",
             ds.n, ds.d, 100 * positive_rate(ds), args.out)
    return EXIT_OK


def cmd_preprocess(args) -> int:
    ds = load_csv(args.input, args.target_column, args.missing_token)
    stats = fit_preprocess(ds, args.threshold)
    out = apply_preprocess(ds, stats)
    write_csv(out, args.out, args.target_column)
    if args.stats_out:
        Path(args.stats_out).write_text(json.dumps(stats.to_dict(), indent=1) + "\n")
    dropped = sorted(set(ds.feature_names) - set(stats.kept_names))
    if dropped:
        log.info("dropped columns: %s", ", ".join(dropped))
    return EXIT_OK


def cmd_resample(args) -> int:
    ds = load_csv(args.input, args.target_column, args.missing_token)
    if np.isnan(ds.features).any():
        raise DataError("input has missing cells; run 'preprocess' first")
    spec = ResampleSpec(args.method, args.target_positive, args.smote_k, seed=args.seed)
    out = resample(ds, spec)
    write_csv(out, args.out, args.target_column)
    log.info("%s: %d -> %d rows, positive rate %.4f", spec.method, ds.n, out.n, positive_rate(out))
    return EXIT_OK


def train_model(ds: Dataset, classifier: str, method: str = "NONE", target_positive: float = 0.5,
                lam: float = 0.01, seed: int = 0, n_estimators: int = 50, smote_k: int = 5,
                threshold: float = 0.70):
    """Preprocess, resample and fit one model on the whole of ``ds``."""
    stats = fit_preprocess(ds, threshold)
    pre = apply_preprocess(ds, stats)
    spec = ResampleSpec(method, target_positive, smote_k, seed=derive_seed(seed, "train", method))
    train = resample(pre, spec)
    if classifier == "LR":
        model = train_lr(train)
    elif classifier == "L1LR":
        model = train_l1lr(train, lam)
    elif classifier == "DT":
        model = train_tree(train)
    elif classifier == "bagging":
        model = bagging_train(train, n_estimators, BAGGING_PARAMS, derive_seed(seed, "train", "bagging"))
    else:
        model = boosting_train(train, n_estimators, BOOSTING_PARAMS, seed)
    ens = classifier if classifier in ("bagging", "boosting") else None
    label = model_label("DT" if ens else classifier, spec.method,
                        target_positive if spec.method != "NONE" else None, ens)
    return model, stats, label


def cmd_train(args) -> int:
    ds = load_csv(args.input, args.target_column, args.missing_token)
    model, stats, label = train_model(ds, args.classifier, args.method, args.target_positive,
                                      args.lam, args.seed, args.n_estimators, args.smote_k)
    save_model(args.out, model, stats, label)
    log.info("saved %s to %s", label, args.out)
    return EXIT_OK


def score_rows(model, stats, header, rows, missing_token=""):
    """Scores for raw CSV rows, locating the model's columns by name."""
    pos = {h: j for j, h in enumerate(header)}
    need = list(stats.kept_names) if stats is not None else list(getattr(model, "feature_names", ()))
    absent = [c for c in need if c not in pos]
    if absent:
        raise DataError(f"scoring data is missing model columns: {absent}")
    X = np.empty((len(rows), len(need)))
    for i, row in enumerate(rows):
        for k, name in enumerate(need):
            cell = row[pos[name]].strip()
            if cell == missing_token:
                X[i, k] = math.nan
                continue
            try:
                X[i, k] = float(cell)
            except ValueError:
                raise DataError(f"row {i + 2}: column {name!r} value {cell!r} is not a number") from None
    ds = Dataset(X, np.zeros(len(rows), dtype=np.int8), tuple(need))
    if stats is not None:
        ds = apply_preprocess(ds, stats)
    elif np.isnan(X).any():
        raise DataError("missing cells found and the model carries no preprocessing stats")
    return model.predict_proba(ds.features)


def cmd_score(args) -> int:
    try:
        model, stats, label = load_model(args.model)
    except (OSError, ValueError, KeyError) as exc:
        raise DataError(f"cannot load model {args.model}: {exc}") from exc
    try:
        with open(args.input, newline="") as fh:
            table = [r for r in csv.reader(fh)]
    except OSError as exc:
        raise DataError(f"cannot read {args.input}: {exc}") from exc
    if not table:
        raise DataError(f"{args.input} is empty")
    header, rows = table[0], [r for r in table[1:] if r]
    bad = [i + 2 for i, r in enumerate(rows) if len(r) != len(header)]
    if bad:
        raise DataError(f"ragged rows at lines {bad[:5]}")
    scores = score_rows(model, stats, [h.strip() for h in header], rows, args.missing_token)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header + ["score"])
        for r, s in zip(rows, scores):
            w.writerow(r + [repr(float(s))])
    log.info("scored %d rows with %s", len(rows), label or args.model)
    return EXIT_OK


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    if args.seed is not None:
        cfg.seed = args.seed
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError(f"workers: must be >= 1, got {args.workers}")
        cfg.workers = args.workers
    if args.output_dir is not None:
        cfg.output_dir = args.output_dir
    if args.folds is not None:
        if args.folds < 2:
            raise ConfigError(f"folds: must be >= 2, got {args.folds}")
        cfg.folds = args.folds
    if args.audit:
        cfg.audit = True
    return cfg


def load_dataset(cfg: RunConfig) -> Dataset:
    if cfg.input is not None:
        return load_csv(cfg.input["path"], cfg.input["target_column"], cfg.input["missing_token"])
    return generate_synthetic(**cfg.synthetic)


def run_from_config(cfg: RunConfig) -> Path:
    """Run the full experiment described by ``cfg`` and write its outputs."""
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    marker = out / INCOMPLETE
    marker.write_text("run started; outputs in this directory are partial until this file is removed\n")
    ds = load_dataset(cfg)
    if cfg.synthetic is not None:
        write_csv(ds, out / "data.csv")
    workers = cfg.workers if cfg.workers is not None else (len(os.sched_getaffinity(0))
                                                           if hasattr(os, "sched_getaffinity")
                                                           else os.cpu_count() or 1)
    result = run_experiment(ds, cfg.folds, cfg.seed, cfg.ratios, cfg.methods, cfg.classifiers,
                            cfg.hyper, workers, cfg.echo())
    write_outputs(result, ds, out, cfg.hyper, cfg.seed, cfg.pca_ratio)
    if cfg.audit:
        configs = [("NONE", None)] + [(m, r) for m in cfg.methods for r in cfg.ratios]
        audit = audit_leakage(ds, result.plan, configs, cfg.hyper, cfg.seed)
        (out / "audit.json").write_text(json.dumps(audit, indent=2, sort_keys=True) + "\n")
        if not audit["passed"]:
            raise DataError(f"leakage audit failed: {audit['failures'][:3]}")
    marker.unlink()
    opt = result.report["optimal_model"]
    log.info("optimal model %s (mean AUC %.4f)", opt["label"], opt["mean_auc"])
    return out


def cmd_experiment(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    out = run_from_config(cfg)
    print(out / "report.json")
    return EXIT_OK


def _fmt(v):
    return "-" if v is None else f"{v:.4f}"


def render_report(report: dict) -> str:
    lines = [f"dataset: n={report['dataset']['n']} d={report['dataset']['d']} "
             f"positive_rate={report['dataset']['positive_rate']:.4f}",
             f"folds: {report['fold_plan']['k']}  seed: {report['master_seed']}", "",
             f"{'model':32s} {'AUC':>7s} {'recall':>7s} {'F1':>7s}"]
    rows = list(report["best_per_classifier"].values()) + list(report["ensemble_results"].values())
    for r in rows:
        lines.append(f"{r['label']:32s} {_fmt(r['mean_auc']):>7s} {_fmt(r['mean_recall']):>7s} "
                     f"{_fmt(r['mean_f1']):>7s}")
    opt = report["optimal_model"]
    lines += ["", f"optimal: {opt['label']} ({opt['selection_rule']})", "",
              f"importance ({report['importance_ranking']['kind']}):"]
    for name, s in report["importance_ranking"]["ranking"]:
        lines.append(f"  {name:30s} {s:.4f}")
    return "\n".join(lines) + "\n"


def cmd_report(args) -> int:
    try:
        report = json.loads(Path(args.report).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read report {args.report}: {exc}") from exc
    sys.stdout.write(render_report(report))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="imbrisk", description="Imbalanced risk modelling: resampling grids, "
                "fold-first cross-validation, LR/L1LR/DT and tree ensembles.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def data_args(sp, out=True):
        sp.add_argument("--input", required=True, help="input CSV with a header row")
        sp.add_argument("--target-column", default="target")
        sp.add_argument("--missing-token", default="", help="cell text marking a missing value")
        if out:
            sp.add_argument("--out", required=True, help="output path")

    g = sub.add_parser("generate", help="write a synthetic two-Gaussian dataset as CSV")
    g.add_argument("--config", help="JSON config whose 'synthetic' block supplies defaults")
    g.add_argument("--n", type=int)
    g.add_argument("--d", type=int)
    g.add_argument("--positive-rate", type=float)
    g.add_argument("--separation", type=float)
    g.add_argument("--seed", type=int)
    g.add_argument("--target-column", default="target")
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    pp = sub.add_parser("preprocess", help="drop sparse columns, impute medians, standardize")
    data_args(pp)
    pp.add_argument("--threshold", type=float, default=0.70, help="max missing fraction kept")
    pp.add_argument("--stats-out", help="write fitted statistics as JSON")
    pp.set_defaults(func=cmd_preprocess)

    r = sub.add_parser("resample", help="resample a (preprocessed) CSV to a target positive rate")
    data_args(r)
    r.add_argument("--method", required=True, type=str.upper, choices=list(RESAMPLERS))
    r.add_argument("--target-positive", type=float, required=True)
    r.add_argument("--smote-k", type=int, default=5)
    r.add_argument("--seed", type=int, default=0)
    r.set_defaults(func=cmd_resample)

    t = sub.add_parser("train", help="fit one model on a whole CSV and save it")
    data_args(t)
    t.add_argument("--classifier", required=True, choices=["LR", "L1LR", "DT", "bagging", "boosting"])
    t.add_argument("--method", type=str.upper, default="NONE", choices=list(METHODS))
    t.add_argument("--target-positive", type=float, default=0.5)
    t.add_argument("--lambda", dest="lam", type=float, default=0.01)
    t.add_argument("--n-estimators", type=int, default=50)
    t.add_argument("--smote-k", type=int, default=5)
    t.add_argument("--seed", type=int, default=0)
    t.set_defaults(func=cmd_train)

    s = sub.add_parser("score", help="append a 'score' column using a saved model")
    s.add_argument("--model", required=True)
    s.add_argument("--input", required=True)
    s.add_argument("--missing-token", default="")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_score)

    e = sub.add_parser("experiment", help="run the full five-stage workflow from a JSON config")
    e.add_argument("--config", required=True)
    e.add_argument("--seed", type=int)
    e.add_argument("--workers", type=int)
    e.add_argument("--output-dir")
    e.add_argument("--folds", type=int)
    e.add_argument("--audit", action="store_true", help="also run the leakage audit")
    e.set_defaults(func=cmd_experiment)

    rp = sub.add_parser("report", help="print a summary of a report.json")
    rp.add_argument("--report", required=True)
    rp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    level = os.environ.get("IMBRISK_LOG_LEVEL", "INFO").upper()
    logging.basicConfig(
        level=level if isinstance(logging.getLevelName(level), int) else "INFO",
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (FloatingPointError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, ValueError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
