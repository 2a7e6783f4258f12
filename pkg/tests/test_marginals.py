import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from copula_da.errors import InvalidInputError
from copula_da.marginals import (fit_copula_view, fit_marginal, normal_cdf, probit,
                                 to_copula_space)

# sqrt(2) * erfinv(0.95), mpmath at 40 digits
PROBIT_0975 = 1.959963984540054235524594430520551527956

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)
samples = st.lists(finite, min_size=2, max_size=60)


def test_fit_marginal_sorts():
    m = fit_marginal([3, 1, 2, 4])
    assert m.sorted_values.tolist() == [1, 2, 3, 4]
    assert m.n == 4


def test_fit_marginal_degenerate_pair_allowed():
    m = fit_marginal([5, 5])
    assert m.sorted_values.tolist() == [5, 5] and m.n == 2


@pytest.mark.parametrize("bad", [[1.0, np.nan], [1.0], [], [0.0, np.inf]])
def test_fit_marginal_rejects(bad):
    with pytest.raises(InvalidInputError):
        fit_marginal(bad)


def test_fitted_marginal_is_read_only():
    m = fit_marginal([2.0, 1.0])
    with pytest.raises(ValueError):
        m.sorted_values[0] = 7.0


@pytest.mark.parametrize("x, expected", [(2, 0.4), (0, 0.2), (100, 0.8), (2.5, 0.4), (4, 0.8)])
def test_cdf_plotting_positions(x, expected):
    assert fit_marginal([1, 2, 3, 4]).cdf(x) == pytest.approx(expected, abs=1e-15)


def test_cdf_ties_take_max_rank():
    m = fit_marginal([1, 2, 2, 2, 5])
    assert m.cdf(2) == pytest.approx(4 / 6)


def test_cdf_rejects_non_finite():
    with pytest.raises(InvalidInputError):
        fit_marginal([1, 2]).cdf(np.nan)


@pytest.mark.parametrize("u, expected", [(0.4, 2.0), (0.5, 2.5), (0.2, 1.0), (0.8, 4.0),
                                         (0.1, 1.0), (0.95, 4.0)])
def test_inverse_cdf_hand_values(u, expected):
    # plotting positions of [1, 2, 3, 4] are 0.2, 0.4, 0.6, 0.8; flat outside
    assert fit_marginal([1, 2, 3, 4]).inverse_cdf(u) == pytest.approx(expected, abs=1e-14)


@pytest.mark.parametrize("u", [1e-6, 0.3, 0.5, 0.999])
def test_inverse_cdf_constant_sample(u):
    assert fit_marginal([5, 5]).inverse_cdf(u) == 5.0


@pytest.mark.parametrize("u", [0.0, 1.0, -0.1, 1.5])
def test_inverse_cdf_rejects_levels_outside_open_interval(u):
    with pytest.raises(InvalidInputError):
        fit_marginal([1, 2, 3]).inverse_cdf(u)


def test_probit_values():
    assert probit(0.5) == 0.0
    assert probit(0.975) == pytest.approx(PROBIT_0975, abs=1e-6)
    assert probit(0.975) == pytest.approx(PROBIT_0975, abs=1e-14)
    assert normal_cdf(0.0) == 0.5


def test_probit_matches_mpmath_in_tails():
    import mpmath as mp

    mp.mp.dps = 30
    for u in (1e-9, 1e-5, 0.01, 0.02425, 0.3, 0.7, 0.99, 1 - 1e-7):
        exact = float(mp.sqrt(2) * mp.erfinv(2 * mp.mpf(u) - 1))
        assert probit(u) == pytest.approx(exact, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("u", [0.0, 1.0, -1e-3, 2.0, np.nan])
def test_probit_domain(u):
    with pytest.raises(InvalidInputError):
        probit(u)


def test_probit_is_vectorized_and_antisymmetric():
    u = np.linspace(0.001, 0.999, 999)
    z = probit(u)
    assert z.shape == u.shape
    assert np.all(np.diff(z) > 0)
    assert np.max(np.abs(z + probit(1 - u))) < 1e-12


def test_to_copula_space_single_column():
    view = fit_copula_view(np.array([[1.0], [2.0], [3.0], [4.0]]))
    np.testing.assert_array_equal(view.Z[:, 0], probit(np.array([0.2, 0.4, 0.6, 0.8])))
    assert view.R.tolist() == [[1.0]]


def test_to_copula_space_dimension_mismatch():
    X = np.ones((5, 2))
    with pytest.raises(InvalidInputError):
        to_copula_space(X, [fit_marginal([1, 2])])


def test_constant_column_gives_finite_constant_scores(rng):
    X = np.column_stack([rng.standard_normal(30), np.full(30, 7.0)])
    view = fit_copula_view(X)
    assert np.all(np.isfinite(view.Z))
    assert np.all(view.Z[:, 1] == view.Z[0, 1])
    assert view.Z[0, 1] == pytest.approx(probit(30 / 31))
    assert np.linalg.eigvalsh(view.R)[0] >= 1e-6


def test_rank_invariance_bitwise(rng):
    X = rng.standard_normal((300, 4))
    G = np.column_stack([np.exp(X[:, 0]), X[:, 1] ** 3, 0.5 * X[:, 2] + 9, np.arctan(X[:, 3])])
    a, b = fit_copula_view(X), fit_copula_view(G)
    assert np.array_equal(a.Z, b.Z)
    assert np.array_equal(a.R, b.R)


@settings(max_examples=200, deadline=None)
@given(samples)
def test_round_trip_on_samples(values):
    m = fit_marginal(values)
    for v in values:
        u = m.cdf(v)
        assert 0.0 < u < 1.0
        back = m.inverse_cdf(u)
        assert m.sorted_values[0] <= back <= m.sorted_values[-1]
        assert abs(m.cdf(back) - u) <= 1e-12


@settings(max_examples=200, deadline=None)
@given(samples, st.lists(finite, min_size=1, max_size=30))
def test_cdf_bounds_and_monotone(values, queries):
    m = fit_marginal(values)
    q = np.sort(np.asarray(queries))
    u = m.cdf(q)
    n = len(values)
    assert np.all(u >= 1 / (n + 1)) and np.all(u <= n / (n + 1))
    assert np.all(np.diff(u) >= 0)


@settings(max_examples=100, deadline=None)
@given(samples, arrays(float, 20, elements=st.floats(1e-6, 1 - 1e-6)))
def test_inverse_cdf_monotone_and_in_range(values, levels):
    m = fit_marginal(values)
    out = m.inverse_cdf(np.sort(levels))
    assert np.all(np.diff(out) >= 0)
    assert np.all(out >= m.sorted_values[0]) and np.all(out <= m.sorted_values[-1])


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 200), st.integers(0, 2 ** 32 - 1))
def test_scores_bounded_by_clamp(n, seed):
    X = np.random.default_rng(seed).standard_normal((n, 2))
    view = fit_copula_view(X)
    assert view.Z.max() <= probit(n / (n + 1))
    assert view.Z.min() >= probit(1 / (n + 1))


def test_round_trip_grid_small():
    u = np.linspace(1e-9, 1 - 1e-9, 10_001)
    assert np.max(np.abs(normal_cdf(probit(u)) - u)) <= 1e-12
