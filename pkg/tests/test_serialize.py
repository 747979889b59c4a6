import numpy as np
import pytest

from imbrisk.classifiers import train_l1lr, train_lr, train_tree
from imbrisk.data import apply_preprocess, fit_preprocess, generate_synthetic
from imbrisk.ensemble import bagging_train, boosting_train
from imbrisk.serialize import load_model, model_from_dict, model_to_dict, save_model


@pytest.fixture(scope="module")
def data():
    ds = generate_synthetic(200, 3, 0.25, 1.5, seed=2)
    st = fit_preprocess(ds)
    return apply_preprocess(ds, st), st


@pytest.mark.parametrize("fit", [
    lambda d: train_lr(d),
    lambda d: train_l1lr(d, 0.02),
    lambda d: train_tree(d),
    lambda d: bagging_train(d, 4, seed=1),
    lambda d: boosting_train(d, 6),
])
def test_round_trip_is_lossless(tmp_path, data, fit):
    ds, st = data
    model = fit(ds)
    save_model(tmp_path / "m.json", model, st, "some_label")
    back, st2, label = load_model(tmp_path / "m.json")
    assert label == "some_label" and st2 == st
    np.testing.assert_array_equal(back.predict_proba(ds.features), model.predict_proba(ds.features))
    assert model_to_dict(back) == model_to_dict(model)


def test_linear_fields_preserved(data):
    m = train_l1lr(data[0], 0.05)
    back = model_from_dict(model_to_dict(m))
    assert back.lam == m.lam and back.objective_trace == m.objective_trace
    assert back.intercept == m.intercept


def test_without_stats(tmp_path, data):
    save_model(tmp_path / "m.json", train_tree(data[0]))
    assert load_model(tmp_path / "m.json")[1] is None


def test_rejects_foreign_file(tmp_path):
    p = tmp_path / "x.json"
    p.write_text('{"format": "other"}')
    with pytest.raises(ValueError):
        load_model(p)
    with pytest.raises(ValueError):
        model_from_dict({"kind": "svm"})
    with pytest.raises(TypeError):
        model_to_dict(object())
