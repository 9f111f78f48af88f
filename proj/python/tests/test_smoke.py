import json
import math

import numpy as np
import pytest

import relaxmia


def test_softlabels_keep_ground_truth():
    t = relaxmia.construct_softlabels(np.array([[0.4, 0.3, 0.2, 0.1]]), [0])
    assert t[0, 0] == 0.4
    np.testing.assert_allclose(t[0, 1:], 0.2)
    capped = relaxmia.construct_softlabels(np.array([[0.4, 0.3, 0.2, 0.1]]), [0], gt_cap=0.3)
    assert capped[0, 0] == 0.3
    with pytest.raises(relaxmia.ConfigError):
        relaxmia.construct_softlabels(np.array([[1.0]]), [0])


def test_branches():
    assert relaxmia.decide_branch(1.2, 1.0, 1) == "descent"
    assert relaxmia.decide_branch(1.0, 1.0, 2) == "descent"
    assert relaxmia.decide_branch(0.8, 1.0, 2) == "ascent"
    assert relaxmia.decide_branch(0.8, 1.0, 3) == "flatten"


def test_metrics_and_bounds():
    assert relaxmia.compute_auc([2, 3], [0, 1]) == 1.0
    assert relaxmia.compute_auc([2, 0], [1]) == 0.5
    with pytest.raises(relaxmia.UndefinedMetricError):
        relaxmia.compute_auc([1.0], [])
    rule = relaxmia.select_threshold([0.9, 0.8], [0.2, 0.1])
    assert rule["threshold"] == pytest.approx(0.5)
    assert rule["shadow_accuracy"] == 1.0
    assert relaxmia.hellinger_gaussian(0, 1, 2, 1) == pytest.approx(0.62727, abs=1e-4)
    assert relaxmia.auc_upper_bound(0.4) == pytest.approx(0.82)
    assert relaxmia.tv_upper_bound(0.9) == 1.0
    assert relaxmia.bound_terms(0, 1, 1, 1)[0] == 1.0
    mean, var, count = relaxmia.loss_stats([1, 2, 3])
    assert (mean, count) == (2.0, 3)
    assert var == pytest.approx(2 / 3)
    d = relaxmia.variance_decomposition([1, 2, 3], [1, 2, 3])
    assert d["var_sum"] == pytest.approx(8 / 3)
    assert relaxmia.pearson_correlation([0, 1, 2], [0, 0, 1]) == pytest.approx(math.sqrt(3) / 2)


def test_model_and_data():
    x, y = relaxmia.generate_synthetic(classes=3, dim=4, per_class=5, seed=1)
    assert x.shape == (15, 4)
    assert sorted(set(y)) == [0, 1, 2]
    folds = relaxmia.five_fold_split(12, 3)
    assert [len(f) for f in folds] == [3, 3, 2, 2, 2]
    model = relaxmia.MlpModel.create([4, 8, 3], seed=2)
    p = model.predict(x)
    np.testing.assert_allclose(p.sum(axis=1), 1.0)
    back = relaxmia.MlpModel.from_json(model.to_json())
    np.testing.assert_array_equal(back.predict(x), p)
    norms = model.grad_norms(x[:2], list(y[:2]))
    assert norms[0]["w_l2"] <= norms[0]["w_l1"]
    with pytest.raises(relaxmia.DimensionError):
        model.predict(np.zeros((2, 5)))


def test_pipeline(tmp_path):
    settings = {"epochs": "3", "per_class": "20", "classes": "4", "dim": "6", "method": "relaxloss", "alpha": "1.0"}
    trace = relaxmia.train(settings, tmp_path / "run")
    assert trace.splitlines()[0].startswith("epoch,branch_desc")
    assert len(trace.splitlines()) == 4
    results = relaxmia.attack(tmp_path / "run", "loss,entropy")
    assert [r["attack_name"] for r in results] == ["loss", "entropy"]
    assert all(0.0 <= r["target_auc"] <= 1.0 for r in results)
    report = json.loads(relaxmia.analyze([tmp_path / "run"], correlation=False))
    assert report["variance_convention"] == "population"
    rows = relaxmia.sweep({**settings, "attacks": "loss"}, "relaxloss", [0.0, 1.0]).splitlines()
    assert len(rows) == 3
    with pytest.raises(relaxmia.ConfigError):
        relaxmia.train({"no_such_key": "1"}, tmp_path / "bad")
    with pytest.raises(relaxmia.ConfigError):
        relaxmia.boundary(tmp_path / "run")
    assert "seed_attack" in relaxmia.config_schema()
