import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from copula_da.copula import EIG_FLOOR, estimate_correlation, gaussian_copula_density, gcr_fit, gcr_predict
from copula_da.errors import InvalidInputError
from copula_da.regressors import nmse


def _assert_correlation(R):
    assert np.max(np.abs(R - R.T)) <= 1e-12
    np.testing.assert_array_equal(np.diag(R), 1.0)
    assert np.linalg.eigvalsh(R)[0] >= EIG_FLOOR


def test_identical_columns_are_floored(rng):
    z = rng.standard_normal(100)
    R = estimate_correlation(np.column_stack([z, z, rng.standard_normal(100)]))
    _assert_correlation(R)
    assert R[0, 1] < 1.0
    assert R[0, 1] > 0.999


def test_independent_columns_near_zero():
    Z = np.random.default_rng(7).standard_normal((10_000, 4))
    R = estimate_correlation(Z)
    off = R[~np.eye(4, dtype=bool)]
    assert np.max(np.abs(off)) < 0.05


def test_one_dimension():
    assert estimate_correlation(np.arange(5.0)[:, None]).tolist() == [[1.0]]


def test_needs_two_rows():
    with pytest.raises(InvalidInputError):
        estimate_correlation(np.ones((1, 3)))


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 40), st.integers(1, 12), st.integers(0, 2 ** 32 - 1), st.booleans())
def test_correlation_invariants(n, D, seed, rank_deficient):
    r = np.random.default_rng(seed)
    Z = r.standard_normal((n, D))
    if rank_deficient and D > 1:
        Z[:, -1] = Z[:, 0] * 2.0
        Z[:, 0] = 0.0 if D > 2 else Z[:, 0]
    _assert_correlation(estimate_correlation(Z))


def test_density_identity_is_one():
    assert gaussian_copula_density([0.3, 0.9, 0.01], np.eye(3)) == pytest.approx(1.0, abs=1e-14)


def test_density_at_center():
    R = np.array([[1.0, 0.5], [0.5, 1.0]])
    # tau = 0 so the density is |R|^{-1/2}; 1/sqrt(0.75) to 40 digits via mpmath
    assert gaussian_copula_density([0.5, 0.5], R) == pytest.approx(1.154700538379251529, rel=1e-14)


@pytest.mark.parametrize("u", [[0.0, 0.5], [0.5, 1.0]])
def test_density_rejects_boundary(u):
    with pytest.raises(InvalidInputError):
        gaussian_copula_density(u, np.eye(2))


def test_density_dimension_mismatch():
    with pytest.raises(InvalidInputError):
        gaussian_copula_density([0.5, 0.5, 0.5], np.eye(2))


def test_density_matches_mvn_ratio(rng):
    from scipy.stats import multivariate_normal, norm

    R = np.array([[1.0, 0.3, -0.2], [0.3, 1.0, 0.4], [-0.2, 0.4, 1.0]])
    u = np.array([0.2, 0.7, 0.55])
    z = norm.ppf(u)
    expected = multivariate_normal(np.zeros(3), R).pdf(z) / np.prod(norm.pdf(z))
    assert gaussian_copula_density(u, R) == pytest.approx(expected, rel=1e-10)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(1e-9, 1 - 1e-9), min_size=1, max_size=8))
def test_density_identity_property(u):
    assert gaussian_copula_density(u, np.eye(len(u))) == pytest.approx(1.0, abs=1e-12)


def test_gcr_copy_of_feature(rng):
    X = rng.standard_normal((200, 3))
    model = gcr_fit(X, X[:, 0].copy())
    assert model.joint_R[0, 3] >= 0.99


def test_gcr_independent_labels():
    r = np.random.default_rng(3)
    X = r.standard_normal((10_000, 3))
    y = r.permutation(X[:, 0] + X[:, 1])
    model = gcr_fit(X, y)
    assert np.max(np.abs(model.joint_R[:3, 3])) <= 0.05


def test_gcr_needs_two_samples():
    with pytest.raises(InvalidInputError):
        gcr_fit(np.ones((1, 2)), [1.0])


def test_gcr_independence_predicts_median(rng):
    X = rng.standard_normal((51, 2))
    y = rng.standard_normal(51)
    model = gcr_fit(X, y)
    from dataclasses import replace

    model = replace(model, joint_R=np.eye(3))
    np.testing.assert_allclose(gcr_predict(model, rng.standard_normal((5, 2))), np.median(y))


def test_gcr_monotone_one_dimensional(rng):
    x = np.sort(rng.uniform(0, 5, 40))
    y = np.exp(x) + np.arange(40) * 1e-3
    model = gcr_fit(x[:, None], y)
    pred = gcr_predict(model, x[:, None])
    for i in range(1, 39):
        assert y[i - 1] <= pred[i] <= y[i + 1]


def test_gcr_beats_linear_on_monotone_nonlinearity():
    r = np.random.default_rng(11)
    x = r.standard_normal((400, 1)) * 1.5
    y = np.exp(x[:, 0]) + 0.05 * r.standard_normal(400)
    pred_gcr = gcr_predict(gcr_fit(x, y), x)
    A = np.column_stack([np.ones(400), x])
    pred_lin = A @ np.linalg.lstsq(A, y, rcond=None)[0]
    assert nmse(pred_gcr, y) < nmse(pred_lin, y)


def test_gcr_predictions_within_label_range(rng):
    X = rng.standard_normal((100, 3))
    y = X @ [1.0, -2.0, 0.5] + rng.standard_normal(100)
    pred = gcr_predict(gcr_fit(X, y), rng.standard_normal((200, 3)) * 10)
    assert pred.min() >= y.min() and pred.max() <= y.max()


def test_gcr_rank_invariance(rng):
    X = rng.standard_normal((150, 3))
    y = X[:, 0] - X[:, 2] ** 2 + 0.1 * rng.standard_normal(150)
    X_new = rng.standard_normal((40, 3))
    g = lambda A: np.column_stack([np.exp(A[:, 0]), A[:, 1] ** 3, 3 * A[:, 2] - 1])
    a = gcr_predict(gcr_fit(X, y), X_new)
    b = gcr_predict(gcr_fit(g(X), y), g(X_new))
    np.testing.assert_array_equal(a, b)


def test_gcr_predict_dimension_mismatch(rng):
    model = gcr_fit(rng.standard_normal((10, 2)), rng.standard_normal(10))
    with pytest.raises(InvalidInputError):
        gcr_predict(model, np.ones((3, 3)))
