import numpy as np
import pytest

from spatialhet import ModelSpec, SpatialFrame, Surface, SyntheticSpec, build_contiguity, build_knn
from spatialhet import choose_sar, fit_ols, fit_spatial_error, fit_spatial_lag, generate_synthetic
from spatialhet import row_standardize, synthetic_adjacency, morans_i
from spatialhet.errors import DataError, IslandsPresent
from spatialhet.sar import error_concentrated_loglik, lag_concentrated_loglik, log_det, weights_eigenvalues

SPEC = ModelSpec("y", ["x1"])


def grid_spec(rows, cols, lam=0.0, noise=1.0):
    return SyntheticSpec(n_rows=rows, n_cols=cols, error_lambda=lam, noise_sd=noise,
                         surfaces={"Intercept": Surface("constant", value=1.0), "x1": Surface("constant", value=2.0)})


def error_data(rows, cols, lam, seed):
    spec = grid_spec(rows, cols, lam)
    f = generate_synthetic(spec, seed)
    return f, row_standardize(build_contiguity(f, synthetic_adjacency(spec)))


def lag_data(rho, seed, rows=20, cols=10, noise=0.5):
    spec = grid_spec(rows, cols)
    base = generate_synthetic(spec, seed)
    W = row_standardize(build_contiguity(base, synthetic_adjacency(spec)))
    rng = np.random.default_rng([seed, 9])
    signal = 1.0 + 2.0 * base["x1"] + noise * rng.standard_normal(base.n)
    y = np.linalg.solve(np.eye(base.n) - rho * W.dense(), signal)
    return base.with_column("y", y), W


def test_log_det_matches_dense_determinant():
    rng = np.random.default_rng(1)
    f = SpatialFrame([str(i) for i in range(150)], rng.uniform(0, 1000, size=(150, 2)))
    for W in (row_standardize(build_knn(f, 6)), row_standardize(build_contiguity(
            f, [(str(i), str(i + 1)) for i in range(149)]))):
        eig = weights_eigenvalues(W)
        for rho in (-0.9, -0.3, 0.0, 0.45, 0.95):
            sign, ld = np.linalg.slogdet(np.eye(150) - rho * W.dense())
            assert sign > 0
            assert log_det(rho, eig) == pytest.approx(ld, abs=1e-6)


def test_requires_row_standardized_and_no_islands():
    f, W = error_data(6, 5, 0.0, 0)
    binary = build_contiguity(f, synthetic_adjacency(grid_spec(6, 5)))
    with pytest.raises(DataError):
        fit_spatial_error(f, SPEC, binary)
    g = SpatialFrame(list("abcd"), [[0, 0], [1, 0], [2, 0], [9, 9]], {"y": [1.0, 2, 3, 4], "x1": [0.0, 1, 0, 1]})
    Wi = row_standardize(build_contiguity(g, [("a", "b"), ("b", "c")]))
    with pytest.raises(IslandsPresent):
        fit_spatial_lag(g, SPEC, Wi)


def test_error_model_zero_parameter_reduces_to_ols():
    f, W = error_data(10, 10, 0.0, 3)
    fixed = fit_spatial_error(f, SPEC, W, lam=0.0)
    ols = fit_ols(f, SPEC)
    assert fixed.log_likelihood == pytest.approx(ols.log_likelihood, abs=1e-8)
    np.testing.assert_allclose(fixed.coefficients, ols.coefficients, atol=1e-12)


def test_error_model_null_generation():
    f, W = error_data(10, 10, 0.0, 0)
    fit = fit_spatial_error(f, SPEC, W)
    ols = fit_ols(f, SPEC)
    assert abs(fit.spatial_parameter) < 0.05
    assert np.max(np.abs(fit.coefficients - ols.coefficients)) < 1e-2
    assert fit.lr_statistic >= -1e-8


def test_lag_model_null_generation():
    f, W = lag_data(0.0, 2, rows=10, cols=10)
    fit = fit_spatial_lag(f, SPEC, W)
    ols = fit_ols(f, SPEC)
    assert abs(fit.spatial_parameter) < 0.05
    # the lag fit is OLS of y - rho W y, so the gap to OLS is exactly rho times the
    # OLS coefficients of Wy; the intercept absorbs rho * mean(Wy)
    X, y, _ = f.design(SPEC)
    b_wy = np.linalg.lstsq(X, W.lag(y), rcond=None)[0]
    np.testing.assert_allclose(fit.coefficients - ols.coefficients, -fit.spatial_parameter * b_wy, atol=1e-10)
    assert np.max(np.abs(fit.coefficients[1:] - ols.coefficients[1:])) < 1e-2


def test_lag_recovery_and_lr():
    f, W = lag_data(0.5, 0)
    fit = fit_spatial_lag(f, SPEC, W)
    assert 0.4 <= fit.spatial_parameter <= 0.6
    assert fit.lr_statistic > 0
    lo, hi = fit.parameter_bounds
    assert lo < fit.spatial_parameter < hi


def test_error_recovery_single_instance():
    f, W = error_data(20, 10, 0.6, 0)
    fit = fit_spatial_error(f, SPEC, W)
    assert 0.5 <= fit.spatial_parameter <= 0.7
    assert fit.lr_statistic > 0
    assert fit.aic == pytest.approx(2 * (SPEC.n_terms + 2) - 2 * fit.log_likelihood)


@pytest.mark.parametrize("kind", ["error", "lag"])
def test_optimum_beats_dense_grid(kind):
    if kind == "error":
        f, W = error_data(12, 10, 0.4, 5)
    else:
        f, W = lag_data(0.3, 5, rows=12, cols=10)
    X, y, _ = f.design(SPEC)
    eig = weights_eigenvalues(W)
    fit = (fit_spatial_error if kind == "error" else fit_spatial_lag)(f, SPEC, W)
    lo, hi = fit.parameter_bounds
    grid = np.linspace(lo + 1e-6, hi - 1e-6, 2001)
    fn = error_concentrated_loglik if kind == "error" else lag_concentrated_loglik
    best = max(fn(g, X, y, W, eig) for g in grid)
    assert fn(fit.spatial_parameter, X, y, W, eig) >= best - 1e-6
    assert fit.log_likelihood >= best - 1e-6


def test_parameter_bounds_from_eigenvalues():
    f, W = error_data(6, 6, 0.0, 1)
    fit = fit_spatial_error(f, SPEC, W)
    eig = np.linalg.eigvals(W.dense()).real
    lo, hi = fit.parameter_bounds
    assert lo == pytest.approx(1 / eig.min(), rel=1e-9)
    assert hi == pytest.approx(1 / eig.max(), rel=1e-9)


def test_choose_sar():
    f, W = lag_data(0.6, 1)
    assert choose_sar(f, SPEC, W).model_kind == "lag"
    f, W = error_data(20, 10, 0.6, 1)
    assert choose_sar(f, SPEC, W).model_kind == "error"
    f, W = error_data(10, 10, 0.0, 4)
    err = fit_spatial_error(f, SPEC, W)
    lag = fit_spatial_lag(f, SPEC, W)
    # on null data both collapse towards OLS: neither LR test rejects at 5%
    assert err.lr_statistic < 3.84 and lag.lr_statistic < 3.84
    best = choose_sar(f, SPEC, W)
    assert best.log_likelihood == max(err.log_likelihood, lag.log_likelihood)


def test_error_residuals_are_white():
    values = []
    n = 200
    for seed in range(20):
        f, W = error_data(20, 10, 0.6, seed)
        fit = fit_spatial_error(f, SPEC, W)
        X, y, _ = f.design(SPEC)
        u = y - X @ fit.coefficients
        eps = u - fit.spatial_parameter * W.lag(u)
        values.append(morans_i(eps, W, n_permutations=0).statistic)
    assert abs(np.mean(values)) < 2 / np.sqrt(n)


def test_summary_table_lines():
    f, W = error_data(8, 8, 0.3, 0)
    text = fit_spatial_error(f, SPEC, W).summary_table()
    assert "Lambda" in text and "LR test value" in text and "AIC" in text
