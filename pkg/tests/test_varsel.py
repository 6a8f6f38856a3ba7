import itertools
import warnings

import numpy as np
import pytest
from scipy.optimize import fsolve

from oracles import prune_rule
from spatialhet import ModelSpec, SpatialFrame, filter_by_vif, fit_forest, importance, prune_correlated
from spatialhet import screen_by_importance, select_variables, vif
from spatialhet.errors import ConstantResponse, DataError
from spatialhet.varsel import ImportanceReport


def frame_of(cols, seed=0):
    n = len(next(iter(cols.values())))
    xy = np.random.default_rng(seed).uniform(0, 1000, size=(n, 2))
    return SpatialFrame([f"u{i}" for i in range(n)], xy, cols)


def report_of(pct):
    return ImportanceReport(dict(pct), 1.0, tuple(sorted(pct, key=lambda k: (-pct[k], k))))


def signal_frame(n=500, seed=0, noise=0.0):
    rng = np.random.default_rng(seed)
    x1, x2 = rng.normal(size=n), rng.normal(size=n)
    return frame_of({"x1": x1, "x2": x2, "y": x1 + noise * rng.normal(size=n)}, seed)


# forest and importance

def test_constant_response_rejected():
    f = frame_of({"x1": np.arange(20.0), "y": np.full(20, 3.0)})
    with pytest.raises(ConstantResponse):
        fit_forest(f, ModelSpec("y", ["x1"]))


def test_forest_preconditions():
    f = frame_of({"x1": np.arange(8.0), "y": np.arange(8.0) ** 2})
    with pytest.raises(DataError):
        fit_forest(f, ModelSpec("y", ["x1"]))
    g = frame_of({"x1": np.arange(20.0), "y": np.arange(20.0) ** 2})
    with pytest.raises(DataError):
        fit_forest(g, ModelSpec("y", ["x1"]), n_trees=0)
    with pytest.raises(DataError):
        fit_forest(g, ModelSpec("y", []))


def test_single_leaf_tree_predicts_bootstrap_mean():
    rng = np.random.default_rng(1)
    f = frame_of({"x1": rng.normal(size=30), "y": rng.normal(size=30)})
    model = fit_forest(f, ModelSpec("y", ["x1"]), n_trees=1, min_leaf_size=30, seed=4)
    tree = model.trees[0]
    assert tree.get_n_leaves() == 1
    # the single leaf holds the mean of the tree's bootstrap sample
    expected = f["y"][model.in_bag[0]].mean()
    np.testing.assert_allclose(model.predict(np.c_[f["x1"]]), expected, rtol=1e-12)
    ok = np.isfinite(model.oob_predictions)
    np.testing.assert_allclose(model.oob_predictions[ok], expected, rtol=1e-12)


def test_forest_structure():
    f = signal_frame(n=60)
    model = fit_forest(f, ModelSpec("y", ["x1", "x2"]), n_trees=40, seed=2)
    assert model.mtry == 1 and len(model.trees) == 40
    assert all(idx.size == 60 for idx in model.in_bag)
    seen = np.zeros(60, dtype=bool)
    for t in range(40):
        seen |= model.oob_mask(t)
    # every unit left out of at least one tree has a finite prediction
    np.testing.assert_array_equal(np.isfinite(model.oob_predictions), seen)


def test_signal_only_oob_r2():
    f = signal_frame()
    model = fit_forest(f, ModelSpec("y", ["x1", "x2"]), seed=0)
    assert model.oob_r2(f["y"]) > 0.8


def test_importance_ordering_and_unused_predictor():
    f = signal_frame(n=300, seed=3, noise=0.3)
    g = f.with_column("flat", np.zeros(300))
    spec = ModelSpec("y", ["x1", "x2"])
    rep = importance(fit_forest(f, spec, n_trees=200, seed=1), f, spec)
    assert rep.pct_inc_mse["x1"] > rep.pct_inc_mse["x2"]
    assert rep.ranking == ("x1", "x2")
    # a column with no variation can never be split on, so permuting it changes nothing
    spec2 = ModelSpec("y", ["x1", "flat"])
    rep2 = importance(fit_forest(g, spec2, n_trees=200, mtry=2, seed=1), g, spec2)
    assert abs(rep2.pct_inc_mse["flat"]) < 1
    assert rep2.pct_inc_mse["x1"] > 100


def test_importance_determinism_and_thread_invariance():
    f = signal_frame(n=120, seed=5, noise=0.5)
    spec = ModelSpec("y", ["x1", "x2"])
    a = importance(fit_forest(f, spec, n_trees=60, seed=9), f, spec)
    b = importance(fit_forest(f, spec, n_trees=60, seed=9), f, spec)
    c = importance(fit_forest(f, spec, n_trees=60, seed=9, n_jobs=4), f, spec)
    assert a == b == c
    d = importance(fit_forest(f, spec, n_trees=60, seed=10), f, spec)
    assert d != a


def test_importance_requires_matching_predictors():
    f = signal_frame(n=50)
    model = fit_forest(f, ModelSpec("y", ["x1", "x2"]), n_trees=5)
    with pytest.raises(DataError):
        importance(model, f, ModelSpec("y", ["x2", "x1"]))


def test_importance_table_export():
    rep = report_of({"a": 15.0, "b": 5.0})
    lines = rep.table(retained=["a"], reasons={"b": "low"}).strip().split("\n")
    assert lines == ["predictor,pct_inc_mse,retained,drop_reason", "a,15.0,1,", "b,5.0,0,low"]


# importance screen

def test_screen_examples():
    rep = report_of({"a": 15.0, "b": 5.0})
    assert screen_by_importance(rep).retained == ["a"]
    rep = report_of({"c": 3.0, "a": 1.0, "b": 0.5})
    assert screen_by_importance(rep, 0.0).retained == ["c", "a", "b"]
    assert screen_by_importance(rep, 0.0, order=["a", "b", "c"]).retained == ["a", "b", "c"]
    with pytest.warns(UserWarning):
        res = screen_by_importance(rep, 50.0)
    assert res.retained == [] and res.warning is not None
    assert set(res.dropped) == {"a", "b", "c"}


# correlation pruning

def test_prune_duplicate_keeps_more_important():
    rng = np.random.default_rng(0)
    x = rng.normal(size=40)
    f = frame_of({"x1": x, "x2": x.copy(), "z": rng.normal(size=40)})
    res = prune_correlated(f, ["x1", "x2", "z"], report_of({"x1": 30.0, "x2": 20.0, "z": 5.0}))
    assert res.retained == ["x1", "z"] and list(res.dropped) == ["x2"]
    res = prune_correlated(f, ["x1", "x2", "z"], report_of({"x1": 10.0, "x2": 20.0, "z": 5.0}))
    assert res.retained == ["x2", "z"]


def test_prune_uncorrelated_is_identity():
    rng = np.random.default_rng(1)
    cols = {f"x{i}": rng.normal(size=200) for i in range(4)}
    f = frame_of(cols)
    names = ["x3", "x0", "x2", "x1"]
    assert prune_correlated(f, names, report_of({k: 1.0 for k in cols})).retained == names


def two_cluster_frame(seed):
    rng = np.random.default_rng(seed)
    n = 150
    a, b = rng.normal(size=n), rng.normal(size=n)
    cols = {
        "a1": a + 0.2 * rng.normal(size=n), "a2": a + 0.2 * rng.normal(size=n), "a3": a + 0.3 * rng.normal(size=n),
        "b1": b + 0.2 * rng.normal(size=n), "b2": b + 0.25 * rng.normal(size=n),
    }
    return frame_of(cols, seed), list(cols)


@pytest.mark.parametrize("seed", range(6))
def test_prune_matches_rule_oracle_in_every_order(seed):
    f, names = two_cluster_frame(seed)
    rng = np.random.default_rng(100 + seed)
    imp = {n: float(v) for n, v in zip(names, rng.permutation([40.0, 30.0, 30.0, 12.0, 8.0]))}
    M = np.corrcoef(np.column_stack([f[n] for n in names]), rowvar=False)
    R = {a: {b: M[i, j] for j, b in enumerate(names)} for i, a in enumerate(names)}
    for order in itertools.permutations(names):
        got = prune_correlated(f, list(order), report_of(imp), 0.8).retained
        assert got == prune_rule(list(order), R, imp, 0.8)
        kept = set(got)
        assert all(abs(R[x][y]) <= 0.8 for x in kept for y in kept if x != y)


def test_prune_missing_importance():
    f = frame_of({"x1": np.arange(5.0), "x2": np.arange(5.0)})
    with pytest.raises(DataError):
        prune_correlated(f, ["x1", "x2"], report_of({"x1": 1.0}))


# VIF filtering

TABLE1 = {"Age 65+": 1.72, "Born outside Ireland": 2.10, "Single Person": 2.52, "Lone Parent": 3.04,
          "Two car hh": 5.72, "Unemployed": 2.57, "Commerce": 1.73, "Internet": 3.04, "No education": 2.78,
          "High education": 2.84}


def table1_frame(n=200, seed=0):
    """Design whose sample VIFs reproduce the published table exactly (one-factor correlation)."""
    v = np.array(list(TABLE1.values()))

    def corr(l):
        return np.outer(l, l) + np.diag(1 - l ** 2)

    loadings = fsolve(lambda l: np.diag(np.linalg.inv(corr(l))) - v, np.full(v.size, 0.7), xtol=1e-14)
    Z = np.random.default_rng(seed).normal(size=(n, v.size))
    Z -= Z.mean(axis=0)
    Z = Z @ np.linalg.inv(np.linalg.cholesky(np.cov(Z, rowvar=False))).T
    X = Z @ np.linalg.cholesky(corr(loadings)).T
    return frame_of({name: X[:, j] for j, name in enumerate(TABLE1)})


def test_vif_filter_table1_scenario():
    f = table1_frame()
    names = list(TABLE1)
    v = vif(f, names)
    for name in names:
        assert v[name] == pytest.approx(TABLE1[name], abs=1e-8)
    res = filter_by_vif(f, names)
    assert list(res.dropped) == ["Two car hh"]
    assert res.retained == [n for n in names if n != "Two car hh"]


def test_vif_filter_examples():
    rng = np.random.default_rng(2)
    Q, _ = np.linalg.qr(rng.normal(size=(30, 3)) - rng.normal(size=(30, 3)).mean(axis=0))
    Q -= Q.mean(axis=0)
    Q, _ = np.linalg.qr(Q)
    f = frame_of({"a": Q[:, 0], "b": Q[:, 1], "c": Q[:, 2]})
    assert filter_by_vif(f, ["a", "b", "c"]).retained == ["a", "b", "c"]
    x = rng.normal(size=30)
    g = frame_of({"x": x, "x_copy": x.copy(), "z": rng.normal(size=30)})
    res = filter_by_vif(g, ["x", "x_copy", "z"])
    assert len(res.dropped) == 1 and set(res.dropped) <= {"x", "x_copy"}
    with pytest.raises(DataError):
        filter_by_vif(g, ["x"])


@pytest.mark.parametrize("seed", range(5))
def test_vif_filter_output_respects_threshold(seed):
    rng = np.random.default_rng(seed)
    base = rng.normal(size=(80, 3))
    cols = {f"x{j}": base[:, j % 3] + 0.3 * rng.normal(size=80) * (j // 3 + 0.5) for j in range(7)}
    f = frame_of(cols)
    res = filter_by_vif(f, list(cols))
    if len(res.retained) >= 2:
        assert max(vif(f, res.retained).values()) <= 5.0


# the whole funnel

def test_select_variables_funnel():
    rng = np.random.default_rng(11)
    n = 300
    x1, x2, x3 = rng.normal(size=(3, n))
    cols = {"x1": x1, "x1b": x1 + 0.05 * rng.normal(size=n), "x2": x2, "x3": x3,
            "noise": rng.normal(size=n), "manual": rng.normal(size=n)}
    cols["y"] = 3 * x1 + 2 * x2 + 1.5 * x3 + 0.3 * rng.normal(size=n)
    f = frame_of(cols)
    spec = ModelSpec("y", ["x1", "x1b", "x2", "x3", "noise", "manual"])
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        funnel = select_variables(f, spec, n_trees=150, seed=3, exclude=["manual"])
    sel = funnel.selected
    assert "manual" not in sel and "noise" not in sel
    assert {"x2", "x3"} <= set(sel)
    assert len({"x1", "x1b"} & set(sel)) == 1
    reasons = funnel.drop_reasons
    assert reasons["noise"].startswith("importance:")
    dropped_twin = ({"x1", "x1b"} - set(sel)).pop()
    assert reasons[dropped_twin].startswith(("correlation:", "importance:"))
