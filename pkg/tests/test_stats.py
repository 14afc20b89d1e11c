import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from stabsel.stats import (
    RankDeficientError,
    bh_fdr,
    betainc,
    check_rank,
    independent_columns,
    ols_tstats,
    t_cdf,
    t_sf2,
)

from oracles import bh_bruteforce, t_two_sided_quad


@pytest.mark.parametrize("t", [0.5, 1.0, 2.0, 4.0])
@pytest.mark.parametrize("df", [3, 10, 30, 100])
def test_t_sf2_matches_quadrature(t, df):
    assert t_sf2(t, df) == pytest.approx(t_two_sided_quad(t, df), abs=1e-10)


def test_t_sf2_hand_values():
    assert t_sf2(0.0, 7) == 1.0
    assert t_sf2(2.0, 10) == pytest.approx(0.0734, abs=1e-4)
    assert t_sf2(-2.0, 10) == t_sf2(2.0, 10)
    # df = 1 is Cauchy: P(|T| > 1) = 1/2
    assert t_sf2(1.0, 1) == pytest.approx(0.5, abs=1e-12)


def test_t_cdf_symmetry():
    assert t_cdf(0.0, 5) == 0.5
    for t in (0.3, 1.7, 6.0):
        assert t_cdf(t, 5) + t_cdf(-t, 5) == pytest.approx(1.0, abs=1e-14)


def test_betainc_closed_forms():
    # I_x(1, b) = 1 - (1-x)^b, I_x(a, 1) = x^a
    for x in (0.1, 0.5, 0.93):
        assert betainc(1.0, 3.0, x) == pytest.approx(1 - (1 - x) ** 3, rel=1e-13)
        assert betainc(2.5, 1.0, x) == pytest.approx(x**2.5, rel=1e-13)
    assert betainc(2.0, 3.0, 0.0) == 0.0 and betainc(2.0, 3.0, 1.0) == 1.0


def test_ols_matches_normal_equations():
    rng = np.random.default_rng(0)
    N, k = 40, 3
    X = rng.standard_normal((N, k))
    y = 1.0 + X @ np.array([0.5, 0.0, -1.0]) + 0.3 * rng.standard_normal(N)
    res = ols_tstats(X, y)
    A = np.column_stack([np.ones(N), X])
    coef = np.linalg.solve(A.T @ A, A.T @ y)
    r = y - A @ coef
    s2 = r @ r / (N - k - 1)
    se = np.sqrt(s2 * np.diag(np.linalg.inv(A.T @ A)))
    np.testing.assert_allclose(res.coefficients, coef[1:], rtol=1e-10)
    np.testing.assert_allclose(res.tstats, coef[1:] / se[1:], rtol=1e-10)
    np.testing.assert_allclose(res.pvalues, [t_sf2(t, N - k - 1) for t in res.tstats], rtol=1e-12)
    assert res.df_resid == N - k - 1


def test_ols_perfect_fit_gives_zero_p():
    rng = np.random.default_rng(1)
    X = rng.standard_normal((20, 2))
    res = ols_tstats(X, 3.0 * X[:, 0])
    assert res.pvalues[0] <= 1e-12


def test_ols_rank_deficient():
    rng = np.random.default_rng(2)
    x = rng.standard_normal(20)
    with pytest.raises(RankDeficientError):
        ols_tstats(np.column_stack([x, 2 * x]), rng.standard_normal(20))
    with pytest.raises(ValueError):
        ols_tstats(rng.standard_normal((3, 2)), rng.standard_normal(3))


def test_independent_columns_drops_duplicates():
    rng = np.random.default_rng(3)
    x = rng.standard_normal((15, 3))
    A = np.column_stack([x[:, 0], x[:, 1], x[:, 0] + x[:, 1], x[:, 2]])
    keep = independent_columns(A)
    assert len(keep) == 3 and check_rank(A[:, keep])
    assert not check_rank(A)


def test_bh_examples():
    np.testing.assert_allclose(bh_fdr([0.01, 0.03, 0.04, 0.5]), [0.04, 0.16 / 3, 0.16 / 3, 0.5], rtol=1e-15)
    assert bh_fdr([0.2]).tolist() == [0.2]
    np.testing.assert_array_equal(bh_fdr([0.3] * 5), [0.3] * 5)
    assert bh_fdr([]).size == 0
    with pytest.raises(ValueError):
        bh_fdr([0.1, -0.1])


def test_bh_not_clipped_at_one():
    # pseudo-p-values may exceed 1
    np.testing.assert_allclose(bh_fdr([5.0, 40.0]), [10.0, 40.0])


@settings(max_examples=300, deadline=None)
@given(st.lists(st.floats(0.0, 50.0, allow_nan=False), min_size=1, max_size=8))
def test_bh_matches_bruteforce(p):
    assert bh_fdr(p).tolist() == bh_bruteforce(p)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=8))
def test_bh_monotone_in_rank(p):
    adj = bh_fdr(p)
    order = np.argsort(p, kind="stable")
    assert np.all(np.diff(adj[order]) >= 0)
    # p * m / m may round one ulp low
    assert np.all(adj >= np.asarray(p) * (1 - 1e-15))
