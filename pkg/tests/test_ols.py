import numpy as np
import pytest
from scipy import stats

from oracles import normal_equations
from spatialhet import ModelSpec, SpatialFrame, compare_aic, fit_ols
from spatialhet.errors import DataError, MixedResponses, RankDeficient


def frame_from(cols, seed=0):
    n = len(next(iter(cols.values())))
    xy = np.random.default_rng(seed).uniform(size=(n, 2))
    return SpatialFrame([str(i) for i in range(n)], xy, cols)


def random_frame(n=50, p=3, seed=0):
    rng = np.random.default_rng(seed)
    cols = {f"x{j}": rng.normal(size=n) for j in range(1, p + 1)}
    cols["y"] = 1.5 + sum((j + 1) * c for j, c in enumerate(cols.values())) + rng.normal(size=n)
    return frame_from(cols, seed), ModelSpec("y", [f"x{j}" for j in range(1, p + 1)])


def test_exact_fit():
    x = np.arange(10.0)
    fit = fit_ols(frame_from({"x": x, "y": 2 * x}), ModelSpec("y", ["x"]))
    np.testing.assert_allclose(fit.coefficients, [0, 2], atol=1e-12)
    assert fit.r2 == pytest.approx(1.0)
    np.testing.assert_allclose(fit.residuals, 0, atol=1e-12)


def test_intercept_only():
    y = np.array([1.0, 4.0, 2.0, 7.0])
    fit = fit_ols(frame_from({"y": y}), ModelSpec("y", []))
    assert fit.coefficients[0] == pytest.approx(y.mean())
    assert fit.r2 == pytest.approx(0.0, abs=1e-15)


def test_normal_equation_oracle():
    f, spec = random_frame()
    fit = fit_ols(f, spec)
    X, y, _ = f.design(spec)
    oracle = normal_equations(X, y)
    assert np.max(np.abs(fit.coefficients - oracle) / np.abs(oracle)) < 1e-9


def test_inference_quantities():
    f, spec = random_frame(n=40, p=2, seed=3)
    fit = fit_ols(f, spec)
    X, y, _ = f.design(spec)
    n, p = X.shape
    resid = y - X @ fit.coefficients
    s2 = resid @ resid / (n - p)
    se = np.sqrt(np.diag(s2 * np.linalg.inv(X.T @ X)))
    np.testing.assert_allclose(fit.std_errors, se, rtol=1e-10)
    np.testing.assert_allclose(fit.p_values, 2 * stats.t.sf(np.abs(fit.coefficients / se), n - p), rtol=1e-9)
    assert abs(fit.residuals.sum()) < 1e-8
    assert 0 <= fit.adj_r2 <= fit.r2 <= 1
    assert fit.residual_std_error == pytest.approx(np.sqrt(s2))
    assert fit.f_df == (p - 1, n - p)
    ll = -n / 2 * (np.log(2 * np.pi) + np.log(resid @ resid / n) + 1)
    assert fit.log_likelihood == pytest.approx(ll, rel=1e-12)
    assert fit.aic == pytest.approx(2 * (p + 1) - 2 * ll, rel=1e-12)


def test_rank_deficiency_and_small_n():
    x = np.arange(6.0)
    with pytest.raises(RankDeficient):
        fit_ols(frame_from({"x": x, "z": 2 * x, "y": x ** 2}), ModelSpec("y", ["x", "z"]))
    with pytest.raises(DataError):
        fit_ols(frame_from({"x": x[:2], "y": x[:2]}), ModelSpec("y", ["x"]))


def test_noise_predictor_raises_r2_by_oracle_increment():
    f, spec = random_frame(n=60, p=2, seed=8)
    noise = np.random.default_rng(99).normal(size=60)
    g = f.with_column("noise", noise)
    a = fit_ols(f, spec)
    b = fit_ols(g, ModelSpec("y", [*spec.predictors, "noise"]))
    # squared partial correlation of the new column with y given the old design
    X, y, _ = f.design(spec)
    e_y = y - X @ normal_equations(X, y)
    e_z = noise - X @ normal_equations(X, noise)
    partial = (e_y @ e_z) ** 2 / ((e_y @ e_y) * (e_z @ e_z))
    assert b.r2 >= a.r2
    assert b.r2 - a.r2 == pytest.approx((1 - a.r2) * partial, rel=1e-9)


def test_reorder_and_rescale():
    f, spec = random_frame(n=30, p=3, seed=2)
    a = fit_ols(f, spec)
    b = fit_ols(f, ModelSpec("y", ["x3", "x1", "x2"]))
    np.testing.assert_allclose(b.coefficients[[0, 2, 3, 1]], a.coefficients, rtol=1e-12)
    g = f.with_column("x2", 1000.0 * f["x2"])
    c = fit_ols(g, spec)
    assert c.coefficients[2] == pytest.approx(a.coefficients[2] / 1000.0, rel=1e-10)
    np.testing.assert_allclose(c.fitted, a.fitted, atol=1e-10)


def test_summary_table_layout():
    f, spec = random_frame(n=30, p=1)
    lines = fit_ols(f, spec).summary_table().splitlines()
    assert lines[0] == "term,estimate,std_error,t_value,p_value,signif"
    assert lines[1].startswith("Intercept,") and lines[2].startswith("x1,")


class _Fit:
    def __init__(self, name, aicc, y):
        self.name, self.aicc, self.aic, self.y = name, aicc, aicc, y


def test_compare_aic():
    y = np.zeros(3)
    assert compare_aic([_Fit("only", 5.0, y)]) == [("only", 5.0)]
    assert compare_aic([_Fit("a", 100.0, y), _Fit("b", 90.0, y)], "aic")[0][0] == "b"
    assert [n for n, _ in compare_aic({"z": _Fit("z", 1.0, y), "a": _Fit("a", 1.0, y)})] == ["a", "z"]
    with pytest.raises(MixedResponses):
        compare_aic([_Fit("a", 1.0, y), _Fit("b", 2.0, y + 1)])
