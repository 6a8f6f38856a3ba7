import numpy as np
import pytest

from spatialhet import ModelSpec, Surface, SyntheticSpec, build_contiguity, fit_ols, generate_synthetic
from spatialhet import row_standardize, synthetic_adjacency
from spatialhet.errors import ConfigError


def test_zero_noise_constant_surfaces_are_exact_for_ols():
    spec = SyntheticSpec(n_rows=6, n_cols=7, noise_sd=0.0,
                         surfaces={"Intercept": Surface("constant", value=2.5), "a": Surface("constant", value=-1.0),
                                   "b": Surface("constant", value=0.75)})
    f = generate_synthetic(spec, 3)
    fit = fit_ols(f, ModelSpec("y", spec.predictors))
    np.testing.assert_allclose(fit.coefficients, [2.5, -1.0, 0.75], atol=1e-12)
    assert f.n == 42 and spec.predictors == ["a", "b"]
    np.testing.assert_array_equal(f["true_a"], -1.0)


def test_grid_layout_and_ids():
    spec = SyntheticSpec(n_rows=3, n_cols=4, cell_size=250.0)
    f = generate_synthetic(spec, 0)
    assert f.unit_ids[:5] == ("r000c000", "r000c001", "r000c002", "r000c003", "r001c000")
    np.testing.assert_array_equal(f.coords[5], [250.0, 250.0])
    assert len(synthetic_adjacency(spec)) == 3 * 3 + 2 * 4
    assert len(synthetic_adjacency(spec, queen=True)) == 17 + 2 * 3 * 2


def test_surface_shapes():
    cols, rows = np.meshgrid(np.arange(5.0), np.arange(3.0))
    cols, rows = cols.ravel(), rows.ravel()
    lin = Surface("linear", low=-1.0, high=3.0, axis="v").evaluate(cols, rows, 5, 3)
    np.testing.assert_allclose(lin, -1.0 + 4.0 * rows / 2)
    step = Surface("step", low=-1.0, high=1.0, axis="u").evaluate(cols, rows, 5, 3)
    # normalised u is 0, .25, .5, .75, 1: the split at 0.5 puts column 2 on the high side
    np.testing.assert_array_equal(step.reshape(3, 5)[0], [-1, -1, 1, 1, 1])
    sin = Surface("sinusoid", value=1.0, amplitude=2.0, period=4, axis="u").evaluate(cols, rows, 5, 3)
    np.testing.assert_allclose(sin.reshape(3, 5)[1], 1.0 + 2.0 * np.sin(np.pi / 2 * np.arange(5)), atol=1e-12)
    diag = Surface("linear", low=0.0, high=1.0, axis="uv").evaluate(cols, rows, 5, 3)
    assert diag[0] == 0.0 and diag[-1] == 1.0


def test_step_surface_direction_recovered_by_halves():
    surf = {"Intercept": Surface("constant", value=0.0), "x1": Surface("step", low=-1.0, high=1.0)}
    f = generate_synthetic(SyntheticSpec(n_rows=10, n_cols=10, noise_sd=0.1, surfaces=surf), 2)
    west = f.coords[:, 0] < 4500
    spec = ModelSpec("y", ["x1"])
    lo = fit_ols(f.take(np.flatnonzero(west)), spec).coefficients[1]
    hi = fit_ols(f.take(np.flatnonzero(~west)), spec).coefficients[1]
    assert lo == pytest.approx(-1.0, abs=0.05) and hi == pytest.approx(1.0, abs=0.05)


def test_determinism_and_seed_dependence():
    spec = SyntheticSpec(n_rows=5, n_cols=5, error_lambda=0.5)
    a, b = generate_synthetic(spec, 11), generate_synthetic(spec, 11)
    np.testing.assert_array_equal(a["y"], b["y"])
    assert not np.array_equal(a["y"], generate_synthetic(spec, 12)["y"])


def test_error_process_inverts_exactly():
    spec = SyntheticSpec(n_rows=6, n_cols=6, error_lambda=0.6, noise_sd=1.0)
    f = generate_synthetic(spec, 4)
    null = generate_synthetic(SyntheticSpec(n_rows=6, n_cols=6, error_lambda=0.0, noise_sd=1.0), 4)
    # same draws: (I - lambda W) u recovers the i.i.d. noise of the lambda = 0 instance
    W = row_standardize(build_contiguity(f, synthetic_adjacency(spec)))
    signal = f["true_Intercept"] + f["true_x1"] * f["x1"]
    u = f["y"] - signal
    eps = null["y"] - signal
    np.testing.assert_allclose(u - 0.6 * W.lag(u), eps, atol=1e-12)


def test_config_errors():
    with pytest.raises(ConfigError):
        Surface("wavy")
    with pytest.raises(ConfigError):
        Surface("linear", axis="z")
    with pytest.raises(ConfigError):
        Surface("sinusoid", period=0)
    with pytest.raises(ConfigError):
        SyntheticSpec(n_rows=1)
    with pytest.raises(ConfigError):
        SyntheticSpec(error_lambda=1.0)
    with pytest.raises(ConfigError):
        SyntheticSpec(noise_sd=-1)
    with pytest.raises(ConfigError):
        SyntheticSpec.from_mapping({"grid": {"rows": 4}})
    with pytest.raises(ConfigError):
        SyntheticSpec.from_mapping({"surfaces": {"x1": {"kind": "linear", "slope": 2}}})


def test_from_mapping():
    spec = SyntheticSpec.from_mapping({
        "response": "income", "grid": {"rows": 4, "cols": 5, "cell_size": 10},
        "error": {"lambda": 0.2, "noise_sd": 0.5},
        "surfaces": {"Intercept": {"kind": "constant", "value": 1.0}, "x1": {"kind": "step"}},
    })
    assert (spec.n_rows, spec.n_cols, spec.cell_size, spec.error_lambda, spec.noise_sd) == (4, 5, 10.0, 0.2, 0.5)
    assert spec.response == "income" and spec.surfaces["x1"].kind == "step"
    assert "income" in generate_synthetic(spec, 0).columns
