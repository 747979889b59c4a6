"""Dataset container, CSV I/O, synthetic data and train-fitted preprocessing.

Missing cells are carried as NaN in the feature matrix until
:func:`apply_preprocess` imputes them.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "DataError",
    "Dataset",
    "PreprocessStats",
    "load_csv",
    "write_csv",
    "drop_high_missing",
    "fit_preprocess",
    "apply_preprocess",
    "generate_synthetic",
    "positive_rate",
]


class DataError(ValueError):
    """Raised for malformed input data (bad CSV, bad labels, empty features)."""


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Real-valued feature matrix with binary labels.

    Parameters
    ----------
    features : array-like of shape (n, d)
        NaN marks a missing cell.
    labels : array-like of shape (n,)
        0/1 labels, 1 being the risky (positive) class.
    feature_names : sequence of str
        Unique column names, length d.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        X = _frozen(self.features, np.float64)
        if X.ndim == 1:
            X = _frozen(X.reshape(-1, 1), np.float64)
        if X.ndim != 2:
            raise DataError(f"features must be 2-D, got shape {X.shape}")
        y = np.asarray(self.labels)
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise DataError(
                f"labels length {y.shape} does not match {X.shape[0]} feature rows"
            )
        if y.size and not np.all((y == 0) | (y == 1)):
            raise DataError("labels must contain only 0 and 1")
        names = tuple(self.feature_names) or tuple(f"x{j}" for j in range(X.shape[1]))
        if len(names) != X.shape[1]:
            raise DataError(
                f"{len(names)} feature names given for {X.shape[1]} columns"
            )
        if len(set(names)) != len(names):
            raise DataError("feature names must be unique")
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", _frozen(y, np.int8))
        object.__setattr__(self, "feature_names", names)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    @property
    def n_pos(self) -> int:
        return int(self.labels.sum())

    @property
    def n_neg(self) -> int:
        return self.n - self.n_pos

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(self.features[idx], self.labels[idx], self.feature_names)

    def select_columns(self, cols) -> "Dataset":
        cols = [int(c) for c in cols]
        return Dataset(
            self.features[:, cols],
            self.labels,
            tuple(self.feature_names[c] for c in cols),
        )

    def require_both_classes(self) -> None:
        if self.n_pos == 0 or self.n_neg == 0:
            raise DataError(
                f"both classes required, got {self.n_pos} positives and "
                f"{self.n_neg} negatives"
            )


def positive_rate(ds: Dataset) -> float:
    if ds.n == 0:
        raise DataError("positive_rate of an empty dataset")
    return ds.n_pos / ds.n


def _parse_label(raw: str, lineno: int) -> int:
    s = raw.strip()
    try:
        v = float(s)
    except ValueError:
        raise DataError(f"line {lineno}: target value {raw!r} is not numeric") from None
    if v not in (0.0, 1.0):
        raise DataError(f"line {lineno}: non-binary target value {raw!r}")
    return int(v)


def load_csv(path, target_column: str, missing_token: str = "") -> Dataset:
    """Read a headed CSV into a :class:`Dataset`.

    Cells equal to ``missing_token`` (after stripping whitespace) become NaN.
    Rows with a missing target are rejected; labels are never imputed.
    """
    path = Path(path)
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path} is empty") from None
        header = [h.strip() for h in header]
        if target_column not in header:
            raise DataError(
                f"target column {target_column!r} not in header {header}"
            )
        t = header.index(target_column)
        names = [h for j, h in enumerate(header) if j != t]
        rows, labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(
                    f"line {lineno}: expected {len(header)} fields, got {len(row)}"
                )
            if row[t].strip() == missing_token:
                raise DataError(f"line {lineno}: missing target value")
            labels.append(_parse_label(row[t], lineno))
            vals = []
            for j, cell in enumerate(row):
                if j == t:
                    continue
                cell = cell.strip()
                if cell == missing_token:
                    vals.append(math.nan)
                    continue
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise DataError(
                        f"line {lineno}: column {header[j]!r} value {cell!r} "
                        "is not a real number"
                    ) from None
            rows.append(vals)
    X = np.array(rows, dtype=np.float64).reshape(len(rows), len(names))
    return Dataset(X, np.array(labels, dtype=np.int8), tuple(names))


def _fmt(v: float, missing_token: str) -> str:
    if math.isnan(v):
        return missing_token
    return repr(float(v))


def write_csv(ds: Dataset, path, target_column: str = "target",
              missing_token: str = "", extra: dict | None = None) -> None:
    """Write ``ds`` in the same dialect :func:`load_csv` reads.

    ``extra`` maps column name to a length-n sequence appended after the
    target column (used for scored output).
    """
    extra = extra or {}
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([*ds.feature_names, target_column, *extra])
        cols = list(extra.values())
        for i in range(ds.n):
            w.writerow(
                [_fmt(v, missing_token) for v in ds.features[i]]
                + [int(ds.labels[i])]
                + [repr(float(c[i])) for c in cols]
            )


@dataclass(frozen=True)
class PreprocessStats:
    kept_columns: tuple[int, ...]
    kept_names: tuple[str, ...]
    medians: tuple[float, ...]
    means: tuple[float, ...]
    stds: tuple[float, ...]

    def to_dict(self) -> dict:
        return {
            "kept_columns": list(self.kept_columns),
            "kept_names": list(self.kept_names),
            "medians": list(self.medians),
            "means": list(self.means),
            "stds": list(self.stds),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PreprocessStats":
        return cls(
            tuple(int(c) for c in d["kept_columns"]),
            tuple(d["kept_names"]),
            tuple(float(v) for v in d["medians"]),
            tuple(float(v) for v in d["means"]),
            tuple(float(v) for v in d["stds"]),
        )


def drop_high_missing(ds: Dataset, threshold: float = 0.70):
    """Drop columns whose missing fraction is strictly above ``threshold``.

    Returns the reduced dataset and the kept column indices.
    """
    if not 0.0 <= threshold <= 1.0:
        raise DataError(f"threshold must be in [0, 1], got {threshold}")
    if ds.n == 0:
        raise DataError("cannot drop columns of an empty dataset")
    # counts, not fractions: exactly 7/10 must compare equal to 0.70
    n_missing = np.isnan(ds.features).sum(axis=0)
    kept = [j for j in range(ds.d) if n_missing[j] <= threshold * ds.n + 1e-9 * ds.n]
    if not kept:
        raise DataError(f"every column exceeds the {threshold:.0%} missing threshold")
    return ds.select_columns(kept), kept


def fit_preprocess(train: Dataset, threshold: float = 0.70) -> PreprocessStats:
    """Fit drop/impute/standardize statistics on the training partition only.

    Medians are taken on the raw scale ignoring missing cells. Means and
    population standard deviations are taken after median imputation, so
    the standardized training columns have mean 0 and std 1 exactly.
    Zero-variance columns are dropped.
    """
    if train.n == 0:
        raise DataError("cannot fit preprocessing on an empty dataset")
    reduced, kept = drop_high_missing(train, threshold)
    X = reduced.features
    keep, meds, means, stds = [], [], [], []
    for j, col in enumerate(X.T):
        present = col[~np.isnan(col)]
        if present.size == 0:
            raise DataError(f"column {reduced.feature_names[j]!r} is entirely missing")
        med = float(np.median(present))
        filled = np.where(np.isnan(col), med, col)
        mu = float(filled.mean())
        sd = float(filled.std())
        if not sd > 1e-12 * max(1.0, abs(mu)):
            continue
        keep.append(kept[j])
        meds.append(med)
        means.append(mu)
        stds.append(sd)
    if not keep:
        raise DataError("no non-constant columns remain after preprocessing")
    return PreprocessStats(
        tuple(keep),
        tuple(train.feature_names[c] for c in keep),
        tuple(meds),
        tuple(means),
        tuple(stds),
    )


def apply_preprocess(ds: Dataset, stats: PreprocessStats) -> Dataset:
    """Impute with training medians, then standardize with training mean/std.

    Columns are located by name so a scoring file may order them freely.
    """
    pos = {name: j for j, name in enumerate(ds.feature_names)}
    missing = [name for name in stats.kept_names if name not in pos]
    if missing:
        raise DataError(f"columns required by the preprocessing stats are absent: {missing}")
    cols = [pos[name] for name in stats.kept_names]
    X = ds.features[:, cols]
    med = np.asarray(stats.medians)
    X = np.where(np.isnan(X), med, X)
    X = (X - np.asarray(stats.means)) / np.asarray(stats.stds)
    return Dataset(X, ds.labels, stats.kept_names)


def generate_synthetic(n: int = 1000, d: int = 10, positive_rate: float = 0.074,
                       separation: float = 2.0, seed: int = 0) -> Dataset:
    """Two isotropic unit-variance Gaussian classes.

    The positive class mean sits ``separation`` away from the negative class
    mean along the first axis. Rows are shuffled so labels are not sorted.
    """
    if n < 20 or d < 2 or not 0.0 < positive_rate < 1.0:
        raise DataError(
            f"degenerate synthetic parameters n={n}, d={d}, positive_rate={positive_rate}"
        )
    if not math.isfinite(separation):
        raise DataError("separation must be finite")
    n_pos = int(math.floor(n * positive_rate + 0.5))
    if n_pos == 0 or n_pos == n:
        raise DataError(f"positive_rate {positive_rate} leaves a class empty at n={n}")
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    y = np.zeros(n, dtype=np.int8)
    y[:n_pos] = 1
    X[:n_pos, 0] += separation
    perm = rng.permutation(n)
    return Dataset(X[perm], y[perm], tuple(f"x{j}" for j in range(d)))
