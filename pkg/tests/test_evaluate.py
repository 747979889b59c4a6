import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from imbrisk.data import Dataset
from imbrisk.evaluate import (ConfusionCounts, MetricSet, UndefinedMetricError, auc, confusion, f1,
                              metric_set, pca2, precision, recall, roc_points, write_pca_csv,
                              write_roc_csv)


def mann_whitney(scores, labels):
    """P(random positive outranks random negative), ties counted half."""
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels)
    pos, neg = s[y == 1], s[y == 0]
    total = 0.0
    for a in pos:
        for b in neg:
            total += 1.0 if a > b else 0.5 if a == b else 0.0
    return total / (len(pos) * len(neg))


def random_instance(rng):
    n = int(rng.integers(2, 31))
    y = rng.integers(0, 2, size=n)
    y[0], y[1] = 0, 1
    # coarse grid so ties are common
    s = rng.integers(0, int(rng.integers(2, 12)), size=n) / 10.0
    return s, y


class TestConfusion:
    def test_basic(self):
        assert confusion([0.9, 0.1], [1, 0], 0.5) == ConfusionCounts(1, 0, 1, 0)

    def test_threshold_zero(self):
        c = confusion([0.2, 0.0, 0.7], [1, 0, 0], 0.0)
        assert c.fn == 0 and c.tn == 0

    def test_threshold_above_max(self):
        s = np.array([0.2, 0.9, 0.4])
        c = confusion(s, [1, 1, 0], np.nextafter(s.max(), 1))
        assert c.tp == 0 and c.fp == 0

    def test_score_at_threshold_is_positive(self):
        assert confusion([0.5], [1]).tp == 1

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            confusion([0.1, 0.2], [1])

    @given(st.lists(st.tuples(st.floats(0, 1), st.integers(0, 1)), min_size=1, max_size=40))
    def test_cells_sum(self, rows):
        s, y = zip(*rows)
        c = confusion(s, y)
        assert c.tp + c.fn == sum(y) and c.n == len(y)


class TestRatios:
    def test_recall(self):
        assert recall(ConfusionCounts(3, 0, 0, 1)) == 0.75
        assert recall(ConfusionCounts(2, 5, 1, 0)) == 1.0
        assert recall(ConfusionCounts(0, 5, 1, 4)) == 0.0

    def test_precision(self):
        assert precision(ConfusionCounts(3, 1, 0, 0)) == 0.75
        assert precision(ConfusionCounts(2, 0, 1, 9)) == 1.0
        assert precision(ConfusionCounts(0, 3, 1, 9)) == 0.0

    def test_undefined(self):
        with pytest.raises(UndefinedMetricError):
            recall(ConfusionCounts(0, 3, 3, 0))
        with pytest.raises(UndefinedMetricError):
            precision(ConfusionCounts(0, 0, 3, 2))

    def test_f1(self):
        assert f1(0.8, 0.8) == pytest.approx(0.8)
        assert f1(1.0, 0.5) == pytest.approx(2 / 3)
        assert f1(0.0, 1.0) == 0.0
        assert f1(0.0, 0.0) == 0.0

    def test_metric_set_nulls(self):
        m = metric_set([0.1, 0.2, 0.3], [1, 0, 0])
        assert m.precision is None and m.f1 is None and m.recall == 0.0
        assert m.auc == 0.0

    def test_metric_set_single_class(self):
        m = metric_set([0.1, 0.9], [0, 0])
        assert m.auc is None and m.recall is None

    def test_f1_rederivable(self, rng):
        for _ in range(50):
            s, y = random_instance(rng)
            m = metric_set(s, y, 0.35)
            if m.f1 is not None:
                assert m.f1 == pytest.approx(f1(m.precision, m.recall), abs=1e-12)

    def test_dict_round_trip(self):
        m = metric_set([0.1, 0.6, 0.7, 0.2], [0, 1, 0, 1])
        assert MetricSet.from_dict(m.to_dict()) == m


class TestROC:
    def test_worked_example(self):
        pts = roc_points([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1])
        assert pts == [(0, 0), (0, 0.5), (0.5, 0.5), (0.5, 1), (1, 1)]
        assert auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == 0.75

    def test_perfect(self):
        assert auc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0
        assert (0.0, 1.0) in roc_points([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0])

    def test_all_tied(self):
        assert roc_points([0.3] * 5, [0, 1, 0, 1, 1]) == [(0, 0), (1, 1)]
        assert auc([0.3] * 5, [0, 1, 0, 1, 1]) == 0.5

    def test_needs_both_classes(self):
        with pytest.raises(ValueError):
            auc([0.1, 0.2], [1, 1])

    def test_mann_whitney_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(200):
            s, y = random_instance(rng)
            assert abs(auc(s, y) - mann_whitney(s, y)) <= 1e-9

    @settings(max_examples=60)
    @given(st.integers(0, 2**32 - 1))
    def test_monotone_transform_invariance(self, seed):
        s, y = random_instance(np.random.default_rng(seed))
        assert auc(np.exp(3 * s) - 7, y) == pytest.approx(auc(s, y), abs=1e-12)

    def test_duplicating_negatives(self, rng):
        for _ in range(30):
            s, y = random_instance(rng)
            neg = y == 0
            s2, y2 = np.r_[s, s[neg]], np.r_[y, y[neg]]
            assert auc(s2, y2) == pytest.approx(auc(s, y), abs=1e-12)

    def test_monotone_curve(self, rng):
        s, y = random_instance(rng)
        pts = np.array(roc_points(s, y))
        assert np.all(np.diff(pts, axis=0) >= 0)
        assert tuple(pts[-1]) == (1.0, 1.0)


class TestPCA:
    def test_matches_eigh(self, rng):
        X = rng.normal(size=(200, 5)) @ rng.normal(size=(5, 5))
        P = pca2(Dataset(X, np.zeros(200)))
        Xc = X - X.mean(axis=0)
        vals, vecs = np.linalg.eigh(np.cov(Xc.T))
        ref = Xc @ vecs[:, ::-1][:, :2]
        for j in range(2):
            assert min(np.abs(P[:, j] - ref[:, j]).max(), np.abs(P[:, j] + ref[:, j]).max()) < 1e-6
        assert P[:, 0].var() >= P[:, 1].var()

    def test_two_d_is_rigid(self, rng):
        X = rng.normal(size=(50, 2)) * np.array([3.0, 1.0])
        P = pca2(Dataset(X, np.zeros(50)))
        Xc = X - X.mean(axis=0)
        d0 = np.linalg.norm(Xc[:, None] - Xc[None], axis=-1)
        d1 = np.linalg.norm(P[:, None] - P[None], axis=-1)
        np.testing.assert_allclose(d1, d0, atol=1e-6)

    def test_duplicated_rows(self, rng):
        X = rng.normal(size=(20, 3))
        P = pca2(Dataset(np.vstack([X, X]), np.zeros(40)))
        np.testing.assert_allclose(P[:20], P[20:], atol=1e-12)

    def test_sign_convention(self, rng):
        X = rng.normal(size=(100, 3)) * np.array([5.0, 2.0, 0.5])
        a = pca2(Dataset(X, np.zeros(100)))
        b = pca2(Dataset(X[::-1].copy(), np.zeros(100)))
        np.testing.assert_allclose(a[::-1], b, atol=1e-8)

    def test_rank_one_warns(self):
        t = np.linspace(0, 1, 10)
        with warnings.catch_warnings(record=True) as w:
            warnings.simplefilter("always")
            P = pca2(Dataset(np.column_stack([t, 2 * t, -t]), np.zeros(10)))
        assert any("rank" in str(x.message) for x in w)
        assert np.all(P[:, 1] == 0)

    def test_too_small(self):
        with pytest.raises(ValueError):
            pca2(Dataset(np.zeros((5, 1)), np.zeros(5)))


def test_csv_writers(tmp_path):
    write_roc_csv([(0.0, 0.0), (0.5, 1.0), (1.0, 1.0)], tmp_path / "r" / "roc.csv")
    assert (tmp_path / "r" / "roc.csv").read_text().splitlines() == ["fpr,tpr", "0.0,0.0", "0.5,1.0", "1.0,1.0"]
    write_pca_csv(np.array([[1.0, 2.0]]), [1], tmp_path / "p.csv")
    assert (tmp_path / "p.csv").read_text() == "pc1,pc2,label\n1.0,2.0,1\n"
