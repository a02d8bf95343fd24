import json
import math
from pathlib import Path

import numpy as np
import pytest

import metaboost as mb


@pytest.fixture(scope="module")
def data():
    ds = mb.parse_dataset(mb.surrogate_csv(rows=500, seed=3))
    return ds, mb.split_balanced(ds, 0.33, 1)


def test_dataset_shape(data):
    ds, split = data
    assert len(ds) == 500
    assert ds.x.shape == (500, 12)
    assert "BloodGlucose" in ds.feature_names
    assert split.test.count(0) == split.test.count(1)


@pytest.mark.parametrize("method", ["ROS", "SMOTE", "ADASYN", "GENERATIVE"])
def test_balance_reaches_parity(data, method):
    _, split = data
    out = mb.balance(split.train, method, seed=4)
    assert out.count(0) == out.count(1)


def test_hybrid_degenerate_weight(data):
    _, split = data
    pure = mb.balance(split.train, "SMOTE", seed=0)
    hyb = mb.hybrid_balance(split.train, ["SMOTE", "ADASYN"], [1.0, 0.0], seed=9)
    assert hyb.count(0) == hyb.count(1)
    assert hyb.x.shape == pure.x.shape
    with pytest.raises(mb.BalanceError):
        mb.hybrid_balance(split.train, ["SMOTE", "ADASYN"], [0.7, 0.7])


def test_simplex_grid_sizes():
    assert len(mb.simplex_grid(2, 0.05)) == 21
    assert len(mb.simplex_grid(3, 0.05)) == 231


def test_models_and_serialization(data, tmp_path):
    _, split = data
    for kind in ["DT", "RF", "GBT", "LR"]:
        model = mb.fit(kind, split.train, seed=1, hyperparameters={"gbt": {"n_rounds": 20}, "forest": {"n_trees": 10}})
        p = np.asarray(model.predict_proba(split.test.x))
        assert ((p >= 0) & (p <= 1)).all()
        path = tmp_path / f"{kind}.txt"
        model.save(path)
        assert mb.load_model(path).predict_proba(split.test.x) == model.predict_proba(split.test.x)
    with pytest.raises(mb.ConfigError):
        mb.fit("GBT", split.train, hyperparameters={"gbt": {"rounds": 1}})


def test_evaluate_and_f1(data):
    _, split = data
    m = mb.evaluate("GBT", split, n_runs=2, hyperparameters={"gbt": {"n_rounds": 20}})
    assert len(m["runs"]) == 2
    assert 0 <= m["f1"] <= 1
    assert round(mb.f1_score(0.913, 0.793), 3) == 0.849


def test_counterfactuals(data):
    _, split = data
    model = mb.fit("GBT", split.train, hyperparameters={"gbt": {"n_rounds": 20}})
    results, summary = mb.counterfactuals(model, split.train, split.test)
    assert len(results) == len(split.test)
    assert all(r["valid"] for r in results)
    assert all(r["l0"] == sum(r["changed"]) for r in results)
    assert math.isclose(summary["pct_features_changed"] * 12, summary["avg_sparsity"], abs_tol=1e-12)
    assert len(summary["change_rates"]) == 12


def test_risk_report(data):
    ds, _ = data
    rep = mb.risk_report(ds)
    assert rep["total"] == 500
    for f in rep["factors"].values():
        assert 0 <= f["posterior"] <= 1
        assert f["posterior"] == pytest.approx(f["flagged_positive"] / f["flagged"])
    assert "Additional factors" in rep["text"]


def test_numpy_dataset():
    x = np.array([[0.0, 1.0], [1.0, 0.0], [2.0, 2.0], [3.0, 1.0]])
    ds = mb.Dataset(x, [0, 0, 1, 1])
    assert ds.x.tolist() == x.tolist()
    model = mb.fit("DT", ds)
    assert model.predict(x) == [0, 0, 1, 1]


def test_run_pipeline(tmp_path):
    (tmp_path / "data.csv").write_text(mb.surrogate_csv(rows=300, seed=8))
    cfg = {
        "dataset": "data.csv",
        "balancers": ["none", "SMOTE"],
        "models": ["GBT"],
        "n_runs": 1,
        "hyperparameters": {"gbt": {"n_rounds": 10}},
        "sweep": {"pairs": [["SMOTE", "ADASYN"]], "step": 0.5},
        "counterfactual": {"grid_resolution": 10, "grid_trees": 3},
    }
    (tmp_path / "config.json").write_text(json.dumps(cfg))
    run = Path(mb.run_pipeline(tmp_path / "config.json", out=tmp_path / "run"))
    metrics = (run / "metrics.csv").read_text().splitlines()
    assert metrics[0].startswith("# metaboost config=")
    assert len(metrics) == 4
    assert "Counterfactual" in mb.report_text(run)
    with pytest.raises(mb.DependencyError):
        mb.run_pipeline(tmp_path / "config.json", out=tmp_path / "other", stage="train")
    (tmp_path / "bad.json").write_text(json.dumps({"dataset": "missing.csv"}))
    with pytest.raises(mb.ConfigError):
        mb.run_pipeline(tmp_path / "bad.json")
