"""Distribution-level checks: closed forms, stability at the shape switch,
and cross-validation against independent implementations (scipy, bisection,
quadrature)."""

import math

import numpy as np
import pytest
from scipy import integrate, stats

from evakit.distributions import (
    XI_TOL,
    DomainError,
    GevParams,
    GpdParams,
    gev_cdf,
    gev_logpdf,
    gev_quantile,
    gev_sample,
    gpd_cdf,
    gpd_logpdf,
    gpd_quantile,
    support_bounds,
)

GEV_GRID = [
    GevParams(0.0, 1.0, 0.0),
    GevParams(0.0, 1.0, 0.2),
    GevParams(0.0, 1.0, -0.2),
    GevParams(10.0, 3.5, 0.05),
    GevParams(-4.0, 0.7, -0.45),
    GevParams(100.0, 25.0, 0.5),
]

GPD_GRID = [
    GpdParams(0.0, 1.0, 0.0),
    GpdParams(30.0, 14.0, 0.05),
    GpdParams(5.0, 2.0, -0.3),
    GpdParams(-2.0, 0.5, 0.4),
]


def test_gumbel_cdf_at_location():
    # F(mu) = exp(-1) for xi = 0
    assert gev_cdf(GevParams(0.0, 1.0, 0.0), 0.0) == pytest.approx(math.exp(-1.0), abs=1e-15)


def test_gev_cdf_against_scipy():
    # scipy's genextreme uses the opposite sign convention for the shape
    x = np.linspace(-3.0, 30.0, 200)
    for p in GEV_GRID:
        ours = gev_cdf(p, x)
        ref = stats.genextreme.cdf(x, c=-p.xi, loc=p.mu, scale=p.sigma)
        np.testing.assert_allclose(ours, ref, atol=1e-12)


def test_gev_logpdf_against_scipy():
    for p in GEV_GRID:
        lo, hi = support_bounds(p).lower, support_bounds(p).upper
        x = np.linspace(max(lo, p.mu - 4 * p.sigma) + 1e-6, min(hi, p.mu + 15 * p.sigma) - 1e-6, 97)
        ours = gev_logpdf(p, x)
        ref = stats.genextreme.logpdf(x, c=-p.xi, loc=p.mu, scale=p.sigma)
        np.testing.assert_allclose(ours, ref, atol=1e-10)


def test_gpd_against_scipy():
    # genpareto with loc=u is exactly the conditional-on-exceedance law
    for p in GPD_GRID:
        hi = support_bounds(p).upper
        x = np.linspace(p.u, min(hi, p.u + 20 * p.sigma_u) - 1e-9, 150)
        np.testing.assert_allclose(
            gpd_cdf(p, x), stats.genpareto.cdf(x, c=p.xi, loc=p.u, scale=p.sigma_u), atol=1e-12
        )
        np.testing.assert_allclose(
            gpd_logpdf(p, x),
            stats.genpareto.logpdf(x, c=p.xi, loc=p.u, scale=p.sigma_u),
            atol=1e-10,
        )


def test_gev_quantile_matches_bisection():
    # invert the cdf by bisection as an independent oracle
    for p in GEV_GRID:
        for prob in (0.001, 0.1, 0.5, 0.9, 0.999, 1.0 - 1e-6):
            q = gev_quantile(p, prob)
            lo, hi = p.mu - 60 * p.sigma, p.mu + 1e6 * p.sigma
            b = support_bounds(p)
            lo, hi = max(lo, b.lower + 1e-12), min(hi, b.upper)
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if gev_cdf(p, mid) < prob:
                    lo = mid
                else:
                    hi = mid
            assert abs(q - 0.5 * (lo + hi)) < 1e-7 * max(1.0, abs(q))


def test_gev_quantile_cdf_roundtrip():
    probs = np.array([1e-5, 1e-3, 0.2, 0.5, 0.8, 1 - 1e-3, 1 - 1e-6])
    for p in GEV_GRID:
        x = gev_quantile(p, probs)
        np.testing.assert_allclose(gev_cdf(p, x), probs, rtol=1e-10, atol=1e-12)


def test_gpd_quantile_cdf_roundtrip():
    probs = np.array([1e-5, 1e-3, 0.5, 1 - 1e-3, 1 - 1e-8])
    for p in GPD_GRID:
        x = gpd_quantile(p, probs)
        np.testing.assert_allclose(gpd_cdf(p, x), probs, rtol=1e-10, atol=1e-12)


@pytest.mark.parametrize("xi", [-0.5, -0.2, -0.05, 0.0, 0.05, 0.2, 0.5])
def test_gev_density_integrates_to_one(xi):
    p = GevParams(2.0, 1.5, xi)
    b = support_bounds(p)
    total, err = integrate.quad(
        lambda x: math.exp(gev_logpdf(p, x)), b.lower, b.upper, limit=200
    )
    assert abs(total - 1.0) < 1e-6, f"xi={xi}: integral={total} (err est {err})"


@pytest.mark.parametrize("xi", [-0.4, 0.0, 0.3])
def test_gpd_density_integrates_to_one(xi):
    p = GpdParams(10.0, 2.0, xi)
    b = support_bounds(p)
    total, _ = integrate.quad(lambda x: math.exp(gpd_logpdf(p, x)), b.lower, b.upper, limit=200)
    assert abs(total - 1.0) < 1e-6


def test_shape_switch_is_continuous():
    # values just either side of the Gumbel switch must agree closely
    x = np.array([-1.0, 0.0, 1.5, 4.0])
    probs = np.array([0.01, 0.5, 0.99])
    for xi_small in (XI_TOL * 2, -XI_TOL * 2):
        near = GevParams(0.0, 1.0, xi_small)
        at = GevParams(0.0, 1.0, 0.0)
        np.testing.assert_allclose(gev_cdf(near, x), gev_cdf(at, x), atol=1e-6)
        np.testing.assert_allclose(gev_quantile(near, probs), gev_quantile(at, probs), atol=1e-6)
        np.testing.assert_allclose(gev_logpdf(near, x), gev_logpdf(at, x), atol=1e-6)
        nearg = GpdParams(0.0, 1.0, xi_small)
        atg = GpdParams(0.0, 1.0, 0.0)
        np.testing.assert_allclose(gpd_cdf(nearg, x + 1.5), gpd_cdf(atg, x + 1.5), atol=1e-6)
        np.testing.assert_allclose(
            gpd_quantile(nearg, probs), gpd_quantile(atg, probs), atol=1e-6
        )


def test_support_bounds():
    b = support_bounds(GevParams(0.0, 1.0, 0.0))
    assert b.lower == -np.inf and b.upper == np.inf
    b = support_bounds(GevParams(0.0, 2.0, 0.5))
    assert b.lower == pytest.approx(-4.0) and b.upper == np.inf
    b = support_bounds(GevParams(0.0, 2.0, -0.5))
    assert b.lower == -np.inf and b.upper == pytest.approx(4.0)
    b = support_bounds(GpdParams(10.0, 2.0, -0.25))
    assert b.lower == 10.0 and b.upper == pytest.approx(18.0)
    b = support_bounds(GpdParams(10.0, 2.0, 0.0))
    assert b.lower == 10.0 and b.upper == np.inf


def test_gev_cdf_clamps_outside_support():
    heavy = GevParams(0.0, 1.0, 0.5)      # lower bound -2
    assert gev_cdf(heavy, -5.0) == 0.0
    bounded = GevParams(0.0, 1.0, -0.5)   # upper bound 2
    assert gev_cdf(bounded, 3.0) == 1.0
    assert gev_logpdf(bounded, 3.0) == -np.inf


def test_gpd_rejects_below_threshold():
    p = GpdParams(5.0, 1.0, 0.1)
    with pytest.raises(DomainError):
        gpd_cdf(p, 4.999)
    with pytest.raises(DomainError):
        gpd_logpdf(p, 0.0)


def test_invalid_params_rejected():
    with pytest.raises(DomainError):
        gev_cdf(GevParams(0.0, -1.0, 0.0), 0.0)
    with pytest.raises(DomainError):
        gev_quantile(GevParams(0.0, 1.0, 0.0), 1.0)
    with pytest.raises(DomainError):
        gpd_quantile(GpdParams(0.0, 1.0, 0.0), 0.0)
    with pytest.raises(DomainError):
        gev_cdf(GevParams(np.nan, 1.0, 0.0), 0.0)


def test_gev_sample_deterministic_and_distributed():
    p = GevParams(3.0, 2.0, 0.0)
    a = gev_sample(p, 5000, seed=42)
    b = gev_sample(p, 5000, seed=42)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, gev_sample(p, 5000, seed=43))
    # Gumbel mean is mu + gamma*sigma; MC error ~ sigma*1.28/sqrt(n)
    big = gev_sample(p, 200_000, seed=7)
    assert abs(big.mean() - (3.0 + np.euler_gamma * 2.0)) < 0.05
    # KS against scipy's rv as a distributional check
    ks = stats.kstest(gev_sample(GevParams(1.0, 2.0, 0.2), 20_000, seed=11),
                      stats.genextreme(c=-0.2, loc=1.0, scale=2.0).cdf)
    assert ks.pvalue > 1e-4
