import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flowgdp.errors import NonPositiveResponse, SingularDesign, ZeroVariancePredictor
from flowgdp.regression import (
    DesignMatrix,
    calibrate_lambda,
    diagnostics,
    fit_lasso,
    fit_log_glm,
    fit_ols,
    fit_ridge,
    lasso_lambda_max,
    standardize_coefficients,
    vif,
)


def design(X, y, prefix="x"):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    return DesignMatrix(X, y, [f"{prefix}{k}" for k in range(X.shape[1])])


def normal_equations(X, y):
    A = np.column_stack([np.ones(len(y)), X])
    return np.linalg.solve(A.T @ A, A.T @ y)


def test_exact_line():
    rep = fit_ols(design([0, 1, 2], [1, 3, 5]))
    assert rep.intercept == pytest.approx(1, abs=1e-12)
    assert rep.coef[0] == pytest.approx(2, abs=1e-12)
    assert rep.r_squared == pytest.approx(1.0, abs=1e-12)
    assert rep.rmse == pytest.approx(0.0, abs=1e-12)


def test_planted_12x4_matches_normal_equations():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(12, 4))
    b = np.array([1.5, -2.0, 0.25, 3.0])
    y = 0.7 + X @ b
    rep = fit_ols(design(X, y))
    ref = normal_equations(X, y)
    np.testing.assert_allclose(rep.coef, b, atol=1e-10)
    np.testing.assert_allclose(np.r_[rep.intercept, rep.coef], ref, atol=1e-10)


def test_rank_deficient_names_columns():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(10, 2))
    X = np.column_stack([X, X[:, 0] + X[:, 1]])
    with pytest.raises(SingularDesign) as err:
        fit_ols(design(X, rng.normal(size=10)))
    assert err.value.dependent_columns


def test_residual_orthogonality_and_leverage():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(30, 3)) * [1, 100, 0.01]
    y = X @ [1, 2, 3] + rng.normal(size=30)
    rep = fit_ols(design(X, y))
    A = np.column_stack([np.ones(30), X])
    scale = np.abs(A).max(axis=0) * np.abs(rep.residuals).max() * 30
    assert np.all(np.abs(A.T @ rep.residuals) < 1e-8 * scale)
    assert abs(rep.residuals.sum()) < 1e-10 * np.abs(y).sum()
    assert np.all((rep.leverage >= 0) & (rep.leverage <= 1))
    assert rep.leverage.sum() == pytest.approx(4, abs=1e-10)
    assert rep.r_squared == pytest.approx(
        1 - (rep.residuals @ rep.residuals) / ((y - y.mean()) @ (y - y.mean())), abs=1e-14)


def test_standardize_z_scored_data_is_identity():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(40, 3))
    X = (X - X.mean(0)) / X.std(0, ddof=1)
    y = X @ [0.5, -0.2, 0.1] + 0.1 * rng.normal(size=40)
    y = (y - y.mean()) / y.std(ddof=1)
    D = design(X, y)
    rep = fit_ols(D)
    np.testing.assert_allclose(standardize_coefficients(rep, D), rep.coef, atol=1e-12)


def test_standardized_scale_invariance_oracle():
    rng = np.random.default_rng(4)
    X = rng.normal(size=(25, 3))
    y = X @ [1, 2, -1] + rng.normal(size=25)
    base = standardize_coefficients(fit_ols(design(X, y)), design(X, y))
    X2 = X.copy()
    X2[:, 1] = 10 * X2[:, 1] + 7
    again = standardize_coefficients(fit_ols(design(X2, y)), design(X2, y))
    np.testing.assert_allclose(again, base, atol=1e-8)


def test_standardize_zero_variance_predictor():
    X = np.column_stack([np.arange(6.0), np.ones(6)])
    D = design(X, np.arange(6.0) * 2)
    rep = fit_ols(design(X[:, :1], np.arange(6.0) * 2))
    rep.coef = np.array([2.0, 0.0])
    with pytest.raises(ZeroVariancePredictor):
        standardize_coefficients(rep, D)


def test_vif_orthogonal_is_one():
    # centered, mutually orthogonal columns (Hadamard rows)
    H = np.array([[1, 1, 1, 1], [1, -1, 1, -1], [1, 1, -1, -1], [1, -1, -1, 1]], float)
    X = np.vstack([H[:, 1:], H[:, 1:]])
    np.testing.assert_allclose(vif(design(X, np.zeros(8))), 1.0, atol=1e-10)


def test_vif_near_collinear_matches_auxiliary_oracle():
    rng = np.random.default_rng(5)
    x1 = rng.normal(size=50)
    x2 = x1 + 1e-6 * rng.normal(size=50)
    x3 = rng.normal(size=50)
    X = np.column_stack([x1, x2, x3])
    v = vif(design(X, np.zeros(50)))
    assert v[0] > 1e4 and v[1] > 1e4
    for k in range(3):
        others = [j for j in range(3) if j != k]
        r2 = fit_ols(design(X[:, others], X[:, k])).r_squared
        assert v[k] == pytest.approx(1 / (1 - r2), rel=1e-9)


def test_vif_perfect_collinearity_is_inf():
    rng = np.random.default_rng(6)
    x1 = rng.normal(size=20)
    X = np.column_stack([x1, 2 * x1 + 1, rng.normal(size=20)])
    v = vif(design(X, np.zeros(20)))
    assert np.isinf(v[0]) and np.isinf(v[1]) and np.isfinite(v[2])


def test_glm_exact_exponential():
    x = np.linspace(0, 4, 9)
    rep = fit_log_glm(design(x, np.exp(3 + 0.5 * x)))
    assert rep.intercept == pytest.approx(3, abs=1e-12)
    assert rep.coef[0] == pytest.approx(0.5, abs=1e-12)
    assert rep.r_squared == pytest.approx(1, abs=1e-12)
    assert rep.response == "ln_gdp"


def test_glm_matches_transform_then_ols():
    rng = np.random.default_rng(7)
    X = rng.normal(size=(30, 2))
    y = np.exp(1 + X @ [0.3, -0.2] + 0.1 * rng.normal(size=30))
    rep = fit_log_glm(design(X, y))
    ref = normal_equations(X, np.log(y))
    np.testing.assert_allclose(np.r_[rep.intercept, rep.coef], ref, atol=1e-10)


def test_glm_rejects_nonpositive():
    with pytest.raises(NonPositiveResponse):
        fit_log_glm(design([0, 1, 2, 3], [1, 2, 0, 4]))


def test_ridge_zero_is_ols():
    rng = np.random.default_rng(8)
    X = rng.normal(size=(20, 3))
    D = design(X, X @ [1, 2, 3] + rng.normal(size=20))
    np.testing.assert_allclose(fit_ridge(D, 0.0).coef, fit_ols(D).coef, atol=1e-10)


def test_ridge_closed_form_on_standardized_problem():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(15, 2))
    X = (X - X.mean(0)) / X.std(0)
    y = X @ [1.0, -0.5] + rng.normal(size=15)
    y = y - y.mean()
    rep = fit_ridge(design(X, y), 1.0)
    ref = np.linalg.solve(X.T @ X + np.eye(2), X.T @ y)
    np.testing.assert_allclose(rep.coef, ref, atol=1e-10)
    assert rep.intercept == pytest.approx(0, abs=1e-12)


def test_ridge_small_positive_lambda_approaches_ols():
    rng = np.random.default_rng(10)
    X = rng.normal(size=(20, 3))
    D = design(X, X @ [1, 2, 3] + rng.normal(size=20))
    np.testing.assert_allclose(fit_ridge(D, 1e-9).coef, fit_ols(D).coef, atol=1e-8)


def test_lasso_at_lambda_max_is_null_model():
    rng = np.random.default_rng(11)
    X = rng.normal(size=(30, 4))
    D = design(X, X @ [2, 0, -1, 0.5] + rng.normal(size=30))
    lmax = lasso_lambda_max(D)
    for lam in (lmax, 2 * lmax):
        rep = fit_lasso(D, lam)
        assert np.all(rep.coef == 0.0)
        assert rep.selected_features == []
        assert rep.intercept == pytest.approx(D.y.mean())
    assert fit_lasso(D, 0.99 * lmax).selected_features


def test_lasso_univariate_soft_threshold(kernels):
    rng = np.random.default_rng(12)
    x = rng.normal(size=40)
    y = 1.5 * x + rng.normal(size=40)
    xs = (x - x.mean()) / x.std()
    yc = y - y.mean()
    for lam in (0.0, 5.0, 30.0):
        rep = fit_lasso(design(x, y), lam)
        z = xs @ yc
        expected = np.sign(z) * max(abs(z) - lam / 2, 0.0) / (xs @ xs)
        assert rep.coef[0] * x.std() == pytest.approx(expected, abs=1e-9)


def test_lasso_zero_lambda_converges_to_ols():
    rng = np.random.default_rng(13)
    X = rng.normal(size=(40, 3))
    D = design(X, X @ [1, -2, 0.5] + rng.normal(size=40))
    np.testing.assert_allclose(fit_lasso(D, 0.0).coef, fit_ols(D).coef, atol=1e-6)


def test_lasso_objective_trace_non_increasing(kernels):
    rng = np.random.default_rng(14)
    X = rng.normal(size=(50, 6))
    X[:, 1] = X[:, 0] + 0.1 * X[:, 1]
    D = design(X, X @ [1, 1, 0, 0, 2, -1] + rng.normal(size=50))
    rep = fit_lasso(D, 10.0)
    tr = np.array(rep.objective_trace)
    assert np.all(np.diff(tr) <= 1e-12 * tr[0])


def test_regularization_paths_monotone():
    rng = np.random.default_rng(15)
    X = rng.normal(size=(40, 5))
    X[:, 2] += X[:, 0]
    D = design(X, X @ [1, 0.5, -1, 0, 2] + rng.normal(size=40))
    ols_r2 = fit_ols(D).r_squared
    grid = np.r_[0, np.logspace(-2, 3, 19)]
    norms, r2 = [], []
    for lam in grid:
        rep = fit_ridge(D, lam)
        norms.append(np.linalg.norm(rep.coef * X.std(0)))
        r2.append(rep.r_squared)
    assert np.all(np.diff(norms) <= 1e-12)
    assert all(ols_r2 + 1e-12 >= r >= 0 for r in r2)
    lmax = lasso_lambda_max(D)
    counts = [len(fit_lasso(D, lam).selected_features) for lam in lmax * np.linspace(0.05, 1, 20)]
    assert all(a >= b for a, b in zip(counts, counts[1:]))


def brute_loo(D, fit, grid):
    out = []
    for lam in grid:
        errs = []
        for i in range(D.n_obs):
            keep = np.arange(D.n_obs) != i
            sub = DesignMatrix(D.X[keep], D.y[keep], D.columns)
            rep = fit(sub, lam)
            errs.append(D.y[i] - (rep.intercept + D.X[i] @ rep.coef))
        out.append(np.sqrt(np.mean(np.square(errs))))
    return np.array(out)


@pytest.mark.parametrize("method,fit", [("ridge", fit_ridge), ("lasso", fit_lasso)])
def test_calibrate_matches_brute_force_loo(method, fit):
    rng = np.random.default_rng(16)
    X = rng.normal(size=(15, 3))
    D = design(X, rng.normal(size=15))
    grid = [0.0, 1.0, 10.0, 100.0, 1e4, 1e6]
    best, scores = calibrate_lambda(D, method, grid)
    ref = brute_loo(D, fit, grid)
    np.testing.assert_allclose(scores, ref, rtol=1e-10)
    tied = [g for g, s in zip(grid, ref) if s <= ref.min() * (1 + 1e-12)]
    assert best == max(tied)


def test_calibrate_pure_noise_prefers_full_shrinkage():
    rng = np.random.default_rng(17)
    X = rng.normal(size=(20, 4))
    D = design(X, rng.normal(size=20))
    lmax = lasso_lambda_max(D)
    grid = [0.0, 0.1 * lmax, 0.5 * lmax, 10 * lmax, 20 * lmax]
    best, scores = calibrate_lambda(D, "lasso", grid)
    assert scores[-1] == scores[-2]
    assert best == grid[-1]


def test_calibrate_noiseless_prefers_smallest():
    rng = np.random.default_rng(18)
    X = rng.normal(size=(15, 2))
    D = design(X, 1 + X @ [1, 2])
    best, _ = calibrate_lambda(D, "ridge", [0.0, 0.1, 1.0, 10.0])
    assert best == 0.0


def test_calibrate_singleton_grid():
    rng = np.random.default_rng(19)
    X = rng.normal(size=(8, 2))
    best, scores = calibrate_lambda(design(X, rng.normal(size=8)), "ridge", [0.0])
    assert best == 0.0 and scores.shape == (1,)


def test_diagnostics_exact_fit():
    x = np.array([0.0, 1, 2, 3, 4])
    D = design(x, 2 + 3 * x)
    rep = fit_ols(D)
    dg = diagnostics(rep, D)
    np.testing.assert_allclose(dg.residuals, 0, atol=1e-12)
    assert dg.leverage.sum() == pytest.approx(2, abs=1e-12)


def test_diagnostics_residuals_uncorrelated_with_predictors():
    rng = np.random.default_rng(20)
    X = rng.normal(size=(40, 3))
    D = design(X, X @ [1, 2, 3] + rng.normal(size=40))
    dg = diagnostics(fit_ols(D), D)
    assert np.all(np.abs(dg.correlation[-1, :-1]) < 1e-10)
    assert dg.theoretical_quantiles.shape == (40,)
    assert np.all(np.diff(dg.theoretical_quantiles) > 0)


def test_leverage_duplicate_point_against_hat_matrix():
    x = np.array([-1.0, 2.0, 2.0])
    D = design(x, [0.3, 1.0, 1.4])
    rep = fit_ols(D)
    A = np.column_stack([np.ones(3), x])
    H = A @ np.linalg.inv(A.T @ A) @ A.T
    np.testing.assert_allclose(rep.leverage, np.diag(H), atol=1e-12)
    assert rep.leverage[1] == pytest.approx(rep.leverage[0] / 2, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.floats(0.01, 100), st.floats(-50, 50))
def test_standardized_invariant_under_affine_rescale(seed, a, b):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(20, 3))
    y = X @ [1, -1, 0.5] + rng.normal(size=20)
    base = standardize_coefficients(fit_ols(design(X, y)), design(X, y))
    X2 = X.copy()
    X2[:, 0] = a * X2[:, 0] + b
    again = standardize_coefficients(fit_ols(design(X2, y)), design(X2, y))
    np.testing.assert_allclose(again, base, atol=1e-8)


def test_report_json_uses_feature_names():
    rng = np.random.default_rng(21)
    names = ["I_C", "O_C", "N_C", "R_C", "I_K", "O_K", "N_K", "R_K"]
    X = rng.normal(size=(30, 8))
    D = DesignMatrix(X, X @ np.arange(8) + 1, names)
    d = fit_ols(D).to_dict()
    assert list(d["coefficients"]) == ["intercept", *names]
    assert set(d["standardized_coefficients"]) == set(names)


@pytest.mark.parametrize("frac", [0.0, 1e-6, 1e-3, 0.1])
def test_lasso_kkt_on_ill_conditioned_design(frac, kernels):
    rng = np.random.default_rng(22)
    x1 = rng.normal(size=14)
    X = np.column_stack([x1, x1 + 1e-4 * rng.normal(size=14), rng.normal(size=(14, 3))])
    D = design(X, 1 + X @ [1.0, 2.0, -1.0, 0.5, 0.0])
    lam = frac * lasso_lambda_max(D)
    rep = fit_lasso(D, lam)
    # optimality certificate on the standardized problem
    Xs = (X - X.mean(0)) / X.std(0)
    b = rep.coef * X.std(0)
    g = Xs.T @ (D.y - D.y.mean() - Xs @ b)
    tol = 1e-7 * max(1.0, np.abs(Xs.T @ (D.y - D.y.mean())).max())
    on = b != 0
    np.testing.assert_allclose(g[on], lam / 2 * np.sign(b[on]), atol=tol)
    assert np.all(np.abs(g[~on]) <= lam / 2 + tol)
