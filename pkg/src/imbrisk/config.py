"""Run configuration files (JSON).

Example::

    {
      "seed": 42,
      "synthetic": {"n": 2000, "d": 10, "positive_rate": 0.074,
                    "separation": 1.466, "seed": 7},
      "folds": 10,
      "ratios": [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
      "methods": ["RUS", "CCUS", "ROS", "SMOTE"],
      "classifiers": ["LR", "L1LR", "DT"],
      "hyper": {"lambdas": [0.001, 0.01, 0.1], "tree_max_depth": 8,
                "n_estimators": 50},
      "output_dir": "out",
      "workers": 1,
      "audit": false
    }

Exactly one of ``input`` (``{"path", "target_column", "missing_token"}``)
or ``synthetic`` must be given. ``seed`` is mandatory. Relative paths are
resolved against the config file's directory.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

from .experiment import CLASSIFIERS, DEFAULT_RATIOS, RESAMPLERS, Hyper

__all__ = ["ConfigError", "RunConfig", "load_config", "SYNTHETIC_DEFAULTS"]

SYNTHETIC_DEFAULTS = {"n": 1000, "d": 10, "positive_rate": 0.074, "separation": 1.466, "seed": 0}


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass
class RunConfig:
    seed: int
    input: dict | None = None
    synthetic: dict | None = None
    folds: int = 10
    ratios: tuple = DEFAULT_RATIOS
    methods: tuple = RESAMPLERS
    classifiers: tuple = CLASSIFIERS
    hyper: Hyper = field(default_factory=Hyper)
    output_dir: str = "out"
    workers: int | None = None
    audit: bool = False
    pca_ratio: float | None = None

    def echo(self) -> dict:
        """Everything that determines the report (worker count excluded)."""
        return {
            "seed": self.seed,
            "input": self.input,
            "synthetic": self.synthetic,
            "folds": self.folds,
            "ratios": list(self.ratios),
            "methods": list(self.methods),
            "classifiers": list(self.classifiers),
            "hyper": self.hyper.to_dict(),
            "audit": self.audit,
            "pca_ratio": self.pca_ratio,
        }


def _req(cond, name, msg):
    if not cond:
        raise ConfigError(f"{name}: {msg}")


def _int(d, name, lo=None):
    v = d[name]
    _req(isinstance(v, int) and not isinstance(v, bool), name, f"expected an integer, got {v!r}")
    if lo is not None:
        _req(v >= lo, name, f"must be >= {lo}, got {v}")
    return v


def _frac(v, name):
    _req(isinstance(v, (int, float)) and not isinstance(v, bool), name, f"expected a number, got {v!r}")
    _req(0.0 < v < 1.0, name, f"must be strictly between 0 and 1, got {v}")
    return float(v)


def validate_synthetic(s: dict) -> dict:
    _req(isinstance(s, dict), "synthetic", "expected an object")
    unknown = set(s) - set(SYNTHETIC_DEFAULTS)
    _req(not unknown, "synthetic", f"unknown keys {sorted(unknown)}")
    s = {**SYNTHETIC_DEFAULTS, **s}
    _int(s, "n", 20)
    _int(s, "d", 2)
    _int(s, "seed")
    s["positive_rate"] = _frac(s["positive_rate"], "synthetic.positive_rate")
    _req(isinstance(s["separation"], (int, float)), "synthetic.separation", "expected a number")
    s["separation"] = float(s["separation"])
    return s


def _hyper(h: dict) -> Hyper:
    _req(isinstance(h, dict), "hyper", "expected an object")
    names = {f.name for f in fields(Hyper)}
    unknown = set(h) - names
    _req(not unknown, "hyper", f"unknown keys {sorted(unknown)}")
    h = dict(h)
    if "lambdas" in h:
        lams = h["lambdas"]
        _req(isinstance(lams, list) and lams and all(isinstance(x, (int, float)) and x >= 0 for x in lams),
             "hyper.lambdas", "expected a non-empty list of non-negative numbers")
        h["lambdas"] = tuple(float(x) for x in lams)
    for key in ("tree_max_depth",):
        if key in h:
            _int(h, key, 0)
    for key in ("lr_max_iter", "tree_min_samples_leaf", "n_estimators", "boosting_max_depth",
                "smote_k", "kmeans_max_iter"):
        if key in h:
            _int(h, key, 1)
    if "missing_threshold" in h:
        v = h["missing_threshold"]
        _req(isinstance(v, (int, float)) and 0 <= v <= 1, "hyper.missing_threshold", "must be in [0, 1]")
    for key in ("lr_tol", "kmeans_tol"):
        if key in h:
            _req(isinstance(h[key], (int, float)) and h[key] > 0, f"hyper.{key}", "must be positive")
    return Hyper(**h)


KNOWN = {"seed", "input", "synthetic", "folds", "ratios", "methods", "classifiers", "hyper",
         "output_dir", "workers", "audit", "pca_ratio"}


def from_dict(d: dict, base: Path | None = None) -> RunConfig:
    _req(isinstance(d, dict), "config", "top level must be an object")
    unknown = set(d) - KNOWN
    _req(not unknown, "config", f"unknown keys {sorted(unknown)}")
    _req("seed" in d, "seed", "is mandatory")
    seed = _int(d, "seed")
    has_in, has_syn = d.get("input") is not None, d.get("synthetic") is not None
    _req(has_in != has_syn, "input/synthetic", "exactly one of 'input' or 'synthetic' is required")
    inp = syn = None
    if has_in:
        inp = d["input"]
        _req(isinstance(inp, dict) and isinstance(inp.get("path"), str), "input.path", "expected a file path")
        _req(isinstance(inp.get("target_column"), str), "input.target_column", "expected a column name")
        inp = {"path": inp["path"], "target_column": inp["target_column"],
               "missing_token": str(inp.get("missing_token", ""))}
        if base is not None and not os.path.isabs(inp["path"]):
            inp["path"] = str(base / inp["path"])
    else:
        syn = validate_synthetic(d["synthetic"])
    folds = _int(d, "folds", 2) if "folds" in d else 10
    ratios = d.get("ratios", list(DEFAULT_RATIOS))
    _req(isinstance(ratios, list) and ratios, "ratios", "expected a non-empty list")
    ratios = tuple(_frac(r, "ratios") for r in ratios)
    methods = d.get("methods", list(RESAMPLERS))
    _req(isinstance(methods, list) and methods, "methods", "expected a non-empty list")
    methods = tuple(str(m).upper() for m in methods)
    bad = [m for m in methods if m not in RESAMPLERS]
    _req(not bad, "methods", f"unknown methods {bad}; choose from {list(RESAMPLERS)}")
    clfs = d.get("classifiers", list(CLASSIFIERS))
    _req(isinstance(clfs, list) and clfs, "classifiers", "expected a non-empty list")
    clfs = tuple(str(c).upper() for c in clfs)
    bad = [c for c in clfs if c not in CLASSIFIERS]
    _req(not bad, "classifiers", f"unknown classifiers {bad}; choose from {list(CLASSIFIERS)}")
    hyper = _hyper(d.get("hyper", {}))
    out = d.get("output_dir", "out")
    _req(isinstance(out, str) and out, "output_dir", "expected a directory path")
    if base is not None and not os.path.isabs(out):
        out = str(base / out)
    workers = d.get("workers")
    if workers is not None:
        workers = _int(d, "workers", 1)
    audit = d.get("audit", False)
    _req(isinstance(audit, bool), "audit", "expected true or false")
    pca_ratio = d.get("pca_ratio")
    if pca_ratio is not None:
        pca_ratio = _frac(pca_ratio, "pca_ratio")
    return RunConfig(seed, inp, syn, folds, ratios, methods, clfs, hyper, out, workers, audit, pca_ratio)


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        d = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: {path} is not valid JSON: {exc}") from exc
    return from_dict(d, path.parent)
