import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from crossmarket import stats
from crossmarket.stats import (DegenerateSeries, LengthMismatch, NonpositivePrice, acf,
                               ar2_garch11_loglik, bidask_spread_series, compute_basis_series,
                               excess_kurtosis, fit_ar2_garch11, fit_gev, gev_logpdf, gev_pwm,
                               log_return_series, normal_loglik, numerical_gradient, ols_slope,
                               simulate_ar2_garch11)


# -- series helpers --------------------------------------------------------------

def test_basis_examples():
    assert np.all(compute_basis_series(np.full(5, 3000.0), np.full(5, 3000.0)) == 0)
    assert compute_basis_series(np.array([3010.0]), np.array([3000.0]))[0] == 10
    with pytest.raises(LengthMismatch):
        compute_basis_series(np.zeros(3), np.zeros(4))


def test_ols_slope_of_converging_basis():
    rng = np.random.default_rng(0)
    y = np.linspace(30, 0, 500) + rng.normal(0, 3, 500)
    x = np.arange(500.0)
    want = np.polyfit(x, y, 1)[0]
    assert ols_slope(y) == pytest.approx(want, rel=1e-9)
    assert ols_slope(y) < 0


def test_log_returns():
    assert np.all(log_return_series([5.0] * 4) == 0)
    assert log_return_series([10, 10.1])[0] == pytest.approx(math.log(1.01))
    assert log_return_series([10, 10.1])[0] == pytest.approx(0.00995, abs=1e-5)
    with pytest.raises(NonpositivePrice):
        log_return_series([1.0, 0.0, 2.0])


@given(arrays(float, st.integers(2, 50), elements=st.floats(0.1, 1000)))
def test_log_returns_telescope(p):
    assert log_return_series(p).sum() == pytest.approx(math.log(p[-1] / p[0]), abs=1e-9)


def test_spread_series():
    s = bidask_spread_series([3000.0, np.nan, 2999.8], [3000.2, 3000.4, np.nan])
    assert s.spreads == pytest.approx([0.2]) and s.skipped == 2


# -- acf and kurtosis against brute force ------------------------------------------

def brute_acf(x, k):
    n = len(x)
    m = sum(x) / n
    den = sum((v - m) ** 2 for v in x)
    return sum((x[t] - m) * (x[t + k] - m) for t in range(n - k)) / den


def brute_kurtosis(x):
    n = len(x)
    m = sum(x) / n
    m2 = sum((v - m) ** 2 for v in x) / n
    m4 = sum((v - m) ** 4 for v in x) / n
    return m4 / m2 ** 2 - 3


@settings(max_examples=50)
@given(arrays(float, st.integers(20, 1000), elements=st.floats(-1, 1)), st.integers(1, 15))
def test_acf_matches_brute_force(x, lags):
    if np.ptp(x) < 1e-6:
        return
    got = acf(x, lags)
    want = [brute_acf(list(x), k) for k in range(1, lags + 1)]
    np.testing.assert_allclose(got.values, want, rtol=1e-9, atol=1e-12)
    assert got.band == pytest.approx(1.96 / math.sqrt(len(x)))


@settings(max_examples=50)
@given(arrays(float, st.integers(4, 1000), elements=st.floats(-1, 1)))
def test_kurtosis_matches_brute_force(x):
    if np.ptp(x) < 1e-6:
        return
    assert excess_kurtosis(x) == pytest.approx(brute_kurtosis(list(x)), rel=1e-9, abs=1e-9)


def test_acf_alternating_series():
    x = np.tile([1.0, -1.0], 500)
    assert acf(x, 2).values[0] == pytest.approx(-1.0, abs=2e-3)
    assert acf(x, 2).values[1] == pytest.approx(1.0, abs=3e-3)


def test_acf_white_noise_inside_band():
    x = np.random.default_rng(4).standard_normal(100_000)
    res = acf(x, 50)
    assert res.band == pytest.approx(0.0062, abs=1e-4)
    # 5% of lags may poke out by chance; allow a binomial margin
    assert res.outside_band().sum() <= 6
    assert np.all(np.abs(res.values) < 2 * res.band)


def test_acf_errors():
    with pytest.raises(DegenerateSeries):
        acf(np.ones(50), 5)
    with pytest.raises(ValueError):
        acf(np.arange(5.0), 5)


def test_kurtosis_examples():
    z = np.random.default_rng(1).standard_normal(1_000_000)
    se = math.sqrt(24 / len(z))
    assert abs(excess_kurtosis(z)) < 3 * se
    assert excess_kurtosis(np.tile([1.0, -1.0], 50)) == pytest.approx(-2.0)
    t5 = np.random.default_rng(2).standard_t(5, 1_000_000)
    # 6 / (nu - 4); the sample estimate converges slowly for nu = 5
    assert excess_kurtosis(t5) == pytest.approx(6.0, abs=1.5)
    with pytest.raises(DegenerateSeries):
        excess_kurtosis(np.ones(10))


# -- AR(2)-GARCH(1,1) -------------------------------------------------------------

@pytest.fixture(scope="module")
def garch_sample():
    rng = np.random.default_rng(11)
    return simulate_ar2_garch11(50_000, -0.3, -0.1, 1e-9, 0.10, 0.85, rng)


def test_garch_recovers_parameters(garch_sample):
    fit = fit_ar2_garch11(garch_sample)
    assert fit.converged
    assert fit.alpha == pytest.approx(0.10, abs=0.05)
    assert fit.beta == pytest.approx(0.85, abs=0.05)
    assert fit.a == pytest.approx(-0.3, abs=0.05) and fit.b == pytest.approx(-0.1, abs=0.05)
    assert fit.c == pytest.approx(1e-9, rel=0.5)
    assert fit.tstat("beta") > 3
    assert all(fit.stderr[k] > 0 for k in stats.GARCH_PARAMS)


def test_garch_is_scale_invariant(garch_sample):
    a = fit_ar2_garch11(garch_sample)
    b = fit_ar2_garch11(garch_sample * 100)
    assert b.beta == pytest.approx(a.beta, abs=1e-3)
    assert b.c == pytest.approx(a.c * 1e4, rel=0.02)
    assert b.loglik == pytest.approx(a.loglik - (a.n - 2) * math.log(100), abs=0.5)


def test_garch_optimum_has_zero_gradient(garch_sample):
    fit = fit_ar2_garch11(garch_sample)
    scale = garch_sample.std()
    r = garch_sample / scale
    th = np.array([fit.a, fit.b, fit.c / scale ** 2, fit.alpha, fit.beta])
    f = lambda t: ar2_garch11_loglik(t, r)
    g = numerical_gradient(f, th, np.full(5, 1e-5) * np.maximum(np.abs(th), 1e-3))
    # interior optimum: gradient per observation is negligible
    assert np.all(np.abs(g) / len(r) < 1e-3)


def test_garch_on_iid_returns():
    r = np.random.default_rng(3).standard_normal(20_000) * 1e-3
    fit = fit_ar2_garch11(r)
    assert fit.alpha < 0.02
    # constant-variance AR(2) by least squares
    X = np.column_stack([r[1:-1], r[:-2]])
    coef, *_ = np.linalg.lstsq(X, r[2:], rcond=None)
    e = r[2:] - X @ coef
    ll0 = -0.5 * len(e) * (math.log(2 * math.pi * e.var()) + 1)
    # likelihood-ratio statistic below the 5% chi-square(2) critical value
    assert 2 * (fit.loglik - ll0) < 5.99


def test_garch_degenerate():
    with pytest.raises(DegenerateSeries):
        fit_ar2_garch11(np.zeros(1000))


# -- GEV ---------------------------------------------------------------------------

def test_gev_recovers_gumbel():
    x = np.random.default_rng(6).gumbel(2.0, 0.5, 10_000)
    fit = fit_gev(x)
    assert -0.05 < fit.shape < 0.05
    assert fit.loc == pytest.approx(2.0, abs=0.03) and fit.scale == pytest.approx(0.5, abs=0.03)
    assert fit.loglik >= fit.start_loglik - 1e-6
    assert fit.ks < 0.02


def test_gev_block_maxima_of_exponentials():
    m = np.random.default_rng(7).exponential(1.0, (5_000, 200)).max(axis=1)
    assert abs(fit_gev(m).shape) < 0.05


def test_gev_frechet_shape():
    from scipy.stats import genextreme
    # scipy's c is the negated shape
    x = genextreme.rvs(-0.2, loc=0, scale=1, size=10_000, random_state=8)
    assert fit_gev(x).shape == pytest.approx(0.2, abs=0.05)


def test_gev_loglik_matches_scipy():
    from scipy.stats import genextreme
    x = np.linspace(-1, 4, 50)
    for xi in (-0.3, 0.0, 0.25):
        np.testing.assert_allclose(gev_logpdf(x, 0.2, 1.3, xi),
                                   genextreme.logpdf(x, -xi, loc=0.2, scale=1.3), rtol=1e-9)


def test_gev_beats_normal_on_skewed_heavy_tails():
    x = np.random.default_rng(9).lognormal(0, 0.6, 5000)
    fit = fit_gev(x)
    assert fit.beats_normal and fit.loglik > normal_loglik(x)


def test_gev_mle_agrees_with_scipy():
    from scipy.stats import genextreme
    x = np.random.default_rng(12).standard_t(3, 5000)
    c, loc, scale = genextreme.fit(x)
    fit = fit_gev(x)
    assert fit.loglik >= genextreme.logpdf(x, c, loc, scale).sum() - 1e-3
    assert fit.shape == pytest.approx(-c, abs=1e-3)


def test_gev_pwm_start_is_close():
    x = np.random.default_rng(10).gumbel(0, 1, 20_000)
    loc, scale, shape = gev_pwm(x)
    assert abs(shape) < 0.05 and loc == pytest.approx(0, abs=0.05) and scale == pytest.approx(1, abs=0.05)


def test_gev_degenerate():
    with pytest.raises(DegenerateSeries):
        fit_gev(np.ones(100))
