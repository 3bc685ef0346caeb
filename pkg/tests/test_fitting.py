"""Likelihood and fitting checks.

Oracles used here are coded independently of the production likelihoods:
an analytic point-process gradient (vs finite differences of the production
code), a GPD + Poisson-count factorization of the point-process likelihood,
and simulation recovery from known parameters.
"""

import math

import numpy as np
import pytest
from scipy.optimize import minimize

from evakit.distributions import DomainError, GevParams, gev_logpdf, gev_quantile, gev_sample
from evakit.fitting import (
    SENTINEL,
    FitResult,
    OptimizerSettings,
    fit_gev,
    fit_pot,
    gev_negloglik,
    initial_params,
    pp_negloglik,
)


# ---------------------------------------------------------------- likelihoods

def test_single_point_gumbel_negloglik():
    # -logpdf at the location of a standard Gumbel is exactly 1
    assert gev_negloglik(GevParams(0.0, 1.0, 0.0), [0.0]) == pytest.approx(1.0, abs=1e-14)


def test_invalid_scale_hits_sentinel():
    assert gev_negloglik(GevParams(0.0, -1.0, 0.1), [1.0, 2.0]) == SENTINEL
    assert pp_negloglik(GevParams(0.0, -1.0, 0.1), [2.0], u=1.0, n_years=10) == SENTINEL


def test_support_violation_hits_sentinel():
    # xi < 0 bounds the upper tail at mu - sigma/xi = 2
    assert gev_negloglik(GevParams(0.0, 1.0, -0.5), [1.0, 3.0]) == SENTINEL
    # threshold outside support: 1 + xi*(u-mu)/sigma <= 0
    assert pp_negloglik(GevParams(10.0, 1.0, 0.5), [3.5], u=3.0, n_years=5) == SENTINEL


def test_gev_negloglik_matches_logpdf_sum():
    rng = np.random.default_rng(2)
    for _ in range(100):
        p = GevParams(rng.normal(0, 5), rng.uniform(0.5, 4.0), rng.uniform(-0.4, 0.4))
        x = gev_sample(p, 50, seed=int(rng.integers(1 << 31)))
        assert gev_negloglik(p, x) == pytest.approx(-np.sum(gev_logpdf(p, x)), rel=1e-12)


def test_pp_intensity_term_at_threshold():
    # mu = u, xi = 0: the intensity integral is exactly n_years
    y = np.array([1.5, 2.0, 3.0])
    sigma = 1.7
    got = pp_negloglik(GevParams(1.0, sigma, 0.0), y, u=1.0, n_years=25)
    expected = 25.0 + y.size * math.log(sigma) + np.sum((y - 1.0) / sigma)
    assert got == pytest.approx(expected, rel=1e-13)


def _gpd_negloglik(sigma_u, xi, excess):
    """Independently coded conditional GPD negative log-likelihood."""
    n = excess.size
    if sigma_u <= 0:
        return SENTINEL
    if abs(xi) < 1e-8:
        return n * math.log(sigma_u) + np.sum(excess) / sigma_u
    w = 1.0 + xi * excess / sigma_u
    if np.any(w <= 0):
        return SENTINEL
    return n * math.log(sigma_u) + (1.0 / xi + 1.0) * np.sum(np.log(w))


def test_pp_factorizes_into_gpd_plus_poisson():
    # L_pp = [n_years*lam - n*log(lam)] + L_gpd with lam = (1+xi*(u-mu)/sigma)^(-1/xi),
    # sigma_u = sigma + xi*(u-mu); an exact identity, checked to 1e-8.
    rng = np.random.default_rng(7)
    checked = 0
    while checked < 100:
        mu = rng.normal(0, 3)
        sigma = rng.uniform(0.5, 3.0)
        xi = rng.uniform(-0.35, 0.35)
        u = mu + rng.uniform(0.5, 3.0) * sigma
        wu = 1.0 + xi * (u - mu) / sigma
        if wu <= 0:
            continue
        lam = wu ** (-1.0 / xi) if abs(xi) >= 1e-8 else math.exp(-(u - mu) / sigma)
        sigma_u = sigma + xi * (u - mu)
        # draw exceedances from the implied conditional GPD so supports agree
        v = rng.random(40)
        if abs(xi) >= 1e-8:
            excess = sigma_u * ((1 - v) ** (-xi) - 1) / xi
        else:
            excess = -sigma_u * np.log1p(-v)
        y = u + excess
        lhs = pp_negloglik(GevParams(mu, sigma, xi), y, u=u, n_years=12.0)
        rhs = 12.0 * lam - y.size * math.log(lam) + _gpd_negloglik(sigma_u, xi, excess)
        assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-8)
        checked += 1


def _pp_grad(mu, sigma, xi, y, u, n_years):
    """Analytic gradient of the point-process negative log-likelihood."""
    n = y.size
    A = 1.0 + xi * (u - mu) / sigma
    B = 1.0 + xi * (y - mu) / sigma
    lam = A ** (-1.0 / xi)
    d_mu = n_years * lam / (sigma * A) - (1.0 + xi) / sigma * np.sum(1.0 / B)
    d_sigma = (
        n_years * lam * (u - mu) / (sigma**2 * A)
        + n / sigma
        - (1.0 + xi) / sigma**2 * np.sum((y - mu) / B)
    )
    dlam_dxi = lam * (math.log(A) / xi**2 - (u - mu) / (sigma * xi * A))
    d_xi = n_years * dlam_dxi + np.sum(
        -np.log(B) / xi**2 + (1.0 / xi + 1.0) * ((y - mu) / sigma) / B
    )
    return np.array([d_mu, d_sigma, d_xi])


def test_pp_gradient_matches_finite_differences():
    rng = np.random.default_rng(11)
    checked = 0
    while checked < 100:
        mu = rng.normal(0, 2)
        sigma = rng.uniform(0.8, 3.0)
        xi = rng.uniform(-0.3, 0.4)
        if abs(xi) < 0.02:
            continue  # analytic form above is for xi != 0
        u = mu + rng.uniform(1.0, 2.5) * sigma
        if 1.0 + xi * (u - mu) / sigma <= 0.2:
            continue
        v = rng.random(60)
        sigma_u = sigma + xi * (u - mu)
        excess = sigma_u * ((1 - v) ** (-xi) - 1) / xi
        y = u + excess
        if np.any(1.0 + xi * (y - mu) / sigma <= 0.2):
            continue
        analytic = _pp_grad(mu, sigma, xi, y, u, 15.0)
        fd = np.empty(3)
        x0 = np.array([mu, sigma, xi])
        for i in range(3):
            h = 1e-6 * max(1.0, abs(x0[i]))
            xp, xm = x0.copy(), x0.copy()
            xp[i] += h
            xm[i] -= h
            fp = pp_negloglik(GevParams(*xp), y, u, 15.0)
            fm = pp_negloglik(GevParams(*xm), y, u, 15.0)
            fd[i] = (fp - fm) / (2 * h)
        np.testing.assert_allclose(fd, analytic, rtol=1e-5, atol=1e-7 * np.abs(analytic).max())
        checked += 1


def test_likelihood_input_errors():
    with pytest.raises(DomainError):
        gev_negloglik(GevParams(0.0, 1.0, 0.0), [])
    with pytest.raises(DomainError):
        pp_negloglik(GevParams(0.0, 1.0, 0.0), [0.5, 2.0], u=1.0, n_years=10)  # 0.5 <= u
    with pytest.raises(DomainError):
        pp_negloglik(GevParams(0.0, 1.0, 0.0), [2.0], u=1.0, n_years=0.5)


# -------------------------------------------------------------- initial point

def test_initial_params_gumbel_moments():
    x = gev_sample(GevParams(0.0, 1.0, 0.0), 100_000, seed=3)
    p0 = initial_params(x)
    assert abs(p0.mu) < 0.02
    assert abs(p0.sigma - 1.0) < 0.02
    assert p0.xi == 0.0


def test_initial_params_constant_data_rejected():
    with pytest.raises(DomainError):
        initial_params([1.0, 1.0, 1.0])


def test_initial_params_exceedance_rate():
    # Gumbel start must reproduce the observed rate n/n_years at the threshold
    y = np.array([10.5, 11.0, 12.0, 10.2, 13.5, 10.8])
    p0 = initial_params(y, "exceedances", u=10.0, n_years=3.0)
    rate = math.exp(-(10.0 - p0.mu) / p0.sigma)
    assert rate == pytest.approx(y.size / 3.0, rel=1e-12)


# ------------------------------------------------------------------- fit_gev

def test_fit_gev_recovers_truth():
    truth = GevParams(10.0, 2.0, 0.1)
    fit = fit_gev(gev_sample(truth, 10_000, seed=1))
    assert fit.converged
    se = fit.se()
    assert se is not None
    for est, tru, s in zip((fit.params.mu, fit.params.sigma, fit.params.xi),
                           (truth.mu, truth.sigma, truth.xi), se):
        assert abs(est - tru) < 3 * s, f"estimate {est} vs truth {tru} (se {s})"


def test_fit_gev_gumbel_shape_near_zero():
    fit = fit_gev(gev_sample(GevParams(0.0, 1.0, 0.0), 10_000, seed=5))
    assert fit.converged
    assert abs(fit.params.xi) < 0.05


def test_fit_gev_is_a_local_optimum():
    m = gev_sample(GevParams(3.0, 1.5, -0.1), 500, seed=9)
    fit = fit_gev(m)
    # refitting from the optimum cannot improve beyond tolerance
    again = fit_gev(m)
    assert abs(again.neg_loglik - fit.neg_loglik) < 1e-6 * max(1.0, abs(fit.neg_loglik))
    # and the optimum beats the moment start
    p0 = initial_params(m)
    assert fit.neg_loglik <= gev_negloglik(p0, m) + 1e-9
    # perturbing any parameter increases the objective
    for dmu, dsig, dxi in ((0.05, 0, 0), (0, 0.05, 0), (0, 0, 0.02)):
        p = GevParams(fit.params.mu + dmu, fit.params.sigma + dsig, fit.params.xi + dxi)
        assert gev_negloglik(p, m) >= fit.neg_loglik


def test_fit_gev_floor():
    with pytest.raises(DomainError, match="10"):
        fit_gev(np.arange(9.0))
    assert isinstance(fit_gev(gev_sample(GevParams(0, 1, 0), 10, seed=2)), FitResult)


def test_fit_gev_result_shape():
    fit = fit_gev(gev_sample(GevParams(5.0, 2.0, 0.2), 300, seed=13))
    assert fit.n_used == 300 and fit.n_years == 300.0
    assert fit.covariance.shape == (3, 3)
    np.testing.assert_allclose(fit.covariance, fit.covariance.T)
    assert np.all(np.diag(fit.covariance) >= 0)
    assert fit.n_restarts_used >= 1


def test_fit_gev_interval_coverage():
    # 95% normal intervals from the delta-method SEs should cover the truth
    # for 90-99% of replicates (n=1000 is close to asymptotia at xi=0.1)
    truth = GevParams(20.0, 5.0, 0.1)
    z = 1.959963984540054
    hits = np.zeros(3)
    n_rep = 500
    usable = 0
    for rep in range(n_rep):
        fit = fit_gev(gev_sample(truth, 1000, seed=10_000 + rep))
        se = fit.se()
        if not fit.converged or se is None:
            continue
        usable += 1
        est = np.array([fit.params.mu, fit.params.sigma, fit.params.xi])
        tru = np.array([truth.mu, truth.sigma, truth.xi])
        hits += (np.abs(est - tru) <= z * se).astype(float)
    assert usable >= 490, f"only {usable}/{n_rep} usable fits"
    coverage = hits / usable
    assert np.all(coverage >= 0.90) and np.all(coverage <= 0.99), coverage


# ------------------------------------------------------------------- fit_pot

def _simulate_pot(u, sigma_u, xi, rate, n_years, seed):
    """Daily-like record whose exceedances of u are GPD(sigma_u, xi) at the given rate."""
    rng = np.random.default_rng(seed)
    n_exc = rng.poisson(rate * n_years)
    v = rng.random(n_exc)
    if abs(xi) < 1e-12:
        excess = -sigma_u * np.log1p(-v)
    else:
        excess = sigma_u * ((1 - v) ** (-xi) - 1) / xi
    below = rng.uniform(u - 5 * sigma_u, u, size=int(rate * n_years * 4))
    return np.concatenate([u + excess, below])


def test_fit_pot_recovers_gpd_scale_and_shape():
    u, sigma_u, xi = 50.0, 3.0, 0.15
    daily = _simulate_pot(u, sigma_u, xi, rate=50.0, n_years=200, seed=21)
    fit = fit_pot(daily, u=u, n_years=200)
    assert fit.converged
    p = fit.params
    sigma_u_hat = p.sigma + p.xi * (u - p.mu)
    # delta-method SE for sigma_u from the (mu, sigma, xi) covariance
    g = np.array([-p.xi, 1.0, u - p.mu])
    se_sigma_u = math.sqrt(g @ fit.covariance @ g)
    se_xi = fit.se()[2]
    assert abs(sigma_u_hat - sigma_u) < 3 * se_sigma_u
    assert abs(p.xi - xi) < 3 * se_xi


def test_fit_pot_errors():
    with pytest.raises(DomainError, match="exceedances"):
        fit_pot(np.full(100, 1.0), u=2.0, n_years=10)  # nothing above u
    with pytest.raises(DomainError, match="19"):
        fit_pot(np.concatenate([np.full(19, 3.0), np.zeros(50)]), u=2.0, n_years=10)


def test_fit_pot_permutation_invariant():
    daily = _simulate_pot(10.0, 2.0, 0.1, rate=30.0, n_years=50, seed=33)
    a = fit_pot(daily, u=10.0, n_years=50)
    rng = np.random.default_rng(0)
    b = fit_pot(rng.permutation(daily), u=10.0, n_years=50)
    assert a.params == b.params
    assert a.neg_loglik == b.neg_loglik


def _gev_from_gpd_poisson(u, lam, sigma_u, xi):
    """Push (rate, GPD) forward to the GEV-equivalent annual-maximum triple."""
    if abs(xi) < 1e-8:
        return GevParams(u + sigma_u * math.log(lam), sigma_u, 0.0)
    sigma = sigma_u * lam**xi
    mu = u - sigma * (lam ** (-xi) - 1.0) / xi
    return GevParams(mu, sigma, xi)


def test_pp_fit_equals_gpd_poisson_fit():
    # Fit the same exceedance set two ways: the production point-process fit,
    # and an independent 2-parameter GPD fit plus the closed-form Poisson rate.
    # The implied 1-in-T levels must agree to 1e-6 relative.
    u, n_years = 40.0, 150.0
    daily = _simulate_pot(u, 4.0, 0.12, rate=20.0, n_years=n_years, seed=55)
    fit = fit_pot(daily, u=u, n_years=n_years)
    assert fit.converged

    excess = daily[daily > u] - u
    lam = excess.size / n_years

    def nll(theta):
        return _gpd_negloglik(math.exp(theta[0]), theta[1], excess)

    res = minimize(nll, np.array([math.log(excess.std()), 0.05]), method="Nelder-Mead",
                   options=dict(xatol=1e-10, fatol=1e-12, maxiter=4000, maxfev=8000))
    alt = _gev_from_gpd_poisson(u, lam, math.exp(res.x[0]), res.x[1])
    for T in (10.0, 100.0, 1000.0):
        a = gev_quantile(fit.params, 1.0 - 1.0 / T)
        b = gev_quantile(alt, 1.0 - 1.0 / T)
        assert abs(a - b) <= 1e-6 * abs(b), f"T={T}: {a} vs {b}"


def test_optimizer_settings_validation():
    with pytest.raises(DomainError):
        OptimizerSettings(tol=0.0)
    with pytest.raises(DomainError):
        OptimizerSettings(max_iterations=0)
    s = OptimizerSettings(restarts=0)
    fit = fit_gev(gev_sample(GevParams(0, 1, 0.1), 200, seed=4), settings=s)
    assert fit.n_restarts_used == 0
