"""Maximum-likelihood fitting of GEV (block maxima) and point-process
(threshold exceedance) models.

Both fits return GEV-equivalent parameters: the point-process likelihood for
exceedances of a threshold u over n_years of record is parametrized directly
by the (mu, sigma, xi) of the corresponding annual-maximum GEV, which is what
makes block-maxima and threshold fits of the same record directly comparable.

The optimizer works on (mu, log sigma, xi) so the scale stays positive, and
support violations return a large finite sentinel instead of inf so the
simplex can retreat from bad regions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .distributions import XI_TOL, DomainError, GevParams

# Finite stand-in for +inf in likelihoods (keeps the simplex well-defined).
SENTINEL = 1e30

# Termination tolerances for a single simplex run.  The cross-restart
# objective-change test in _minimize_with_restarts decides `converged`;
# these just make each run grind the simplex down far enough that two
# independent parametrizations of the same likelihood agree to ~1e-8.
_XATOL = 1e-9
_FATOL = 1e-12


@dataclass(frozen=True)
class OptimizerSettings:
    """Simplex search settings.

    initial_steps are the simplex displacements for (mu, log_sigma, xi); the
    mu displacement is multiplied by the current scale estimate so the simplex
    has a sensible size whatever the units of the data.
    """

    max_iterations: int = 2000          # per simplex run
    tol: float = 1e-10                  # relative objective-change tolerance across restarts
    restarts: int = 2                   # re-inflated simplex runs after the first
    initial_steps: tuple[float, float, float] = (0.5, 0.25, 0.1)

    def __post_init__(self):
        if self.tol <= 0:
            raise DomainError(f"tolerance must be positive, got {self.tol}")
        if self.max_iterations < 1:
            raise DomainError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.restarts < 0:
            raise DomainError(f"restarts must be >= 0, got {self.restarts}")


@dataclass
class FitResult:
    """Outcome of a maximum-likelihood fit, in GEV-equivalent parameters."""

    params: GevParams
    covariance: np.ndarray | None   # 3x3 over (mu, sigma, xi); None if Hessian unusable
    neg_loglik: float
    n_used: int                     # maxima or exceedances entering the likelihood
    n_years: float                  # effective years of record
    converged: bool
    n_restarts_used: int

    def se(self) -> np.ndarray | None:
        """Per-parameter standard errors, or None without a covariance."""
        if self.covariance is None:
            return None
        return np.sqrt(np.diag(self.covariance))


def gev_negloglik(p: GevParams, maxima) -> float:
    """Negative GEV log-likelihood; SENTINEL for invalid scale or support violation."""
    m = np.asarray(maxima, dtype=float)
    if m.size == 0:
        raise DomainError("maxima must be non-empty")
    if not np.all(np.isfinite(m)):
        raise DomainError("maxima must be finite")
    if not (math.isfinite(p.mu) and math.isfinite(p.sigma) and math.isfinite(p.xi)):
        return SENTINEL
    if p.sigma <= 0:
        return SENTINEL
    z = (m - p.mu) / p.sigma
    n = m.size
    if abs(p.xi) < XI_TOL:
        with np.errstate(over="ignore"):
            nll = n * math.log(p.sigma) + np.sum(z) + np.sum(np.exp(-z))
    else:
        w = 1.0 + p.xi * z
        if np.any(w <= 0):
            return SENTINEL
        logw = np.log(w)
        with np.errstate(over="ignore"):
            nll = (
                n * math.log(p.sigma)
                + (1.0 / p.xi + 1.0) * np.sum(logw)
                + np.sum(np.exp(-logw / p.xi))
            )
    return float(nll) if np.isfinite(nll) else SENTINEL


def pp_negloglik(p: GevParams, exceedances, u: float, n_years: float) -> float:
    """Negative log-likelihood of the point-process exceedance model.

    n_years * [1 + xi*(u-mu)/sigma]^(-1/xi)          (intensity integral)
      + n*log(sigma) + (1/xi + 1) * sum log[1 + xi*(y_i-mu)/sigma]

    with the Gumbel-limit form when |xi| < XI_TOL.  SENTINEL on support
    violation at the threshold or at any exceedance.
    """
    y = np.asarray(exceedances, dtype=float)
    if y.size == 0:
        raise DomainError("exceedances must be non-empty")
    if not np.all(np.isfinite(y)):
        raise DomainError("exceedances must be finite")
    if np.any(y <= u):
        raise DomainError("all exceedances must be strictly above the threshold")
    if n_years < 1:
        raise DomainError(f"n_years must be >= 1, got {n_years}")
    if not (math.isfinite(p.mu) and math.isfinite(p.sigma) and math.isfinite(p.xi)):
        return SENTINEL
    if p.sigma <= 0:
        return SENTINEL
    n = y.size
    if abs(p.xi) < XI_TOL:
        with np.errstate(over="ignore"):
            nll = (
                n_years * math.exp(min((p.mu - u) / p.sigma, 700.0))
                + n * math.log(p.sigma)
                + np.sum((y - p.mu) / p.sigma)
            )
    else:
        wu = 1.0 + p.xi * (u - p.mu) / p.sigma
        wy = 1.0 + p.xi * (y - p.mu) / p.sigma
        if wu <= 0 or np.any(wy <= 0):
            return SENTINEL
        with np.errstate(over="ignore"):
            nll = (
                n_years * math.exp(-math.log(wu) / p.xi)
                + n * math.log(p.sigma)
                + (1.0 / p.xi + 1.0) * np.sum(np.log(wy))
            )
    return float(nll) if np.isfinite(nll) else SENTINEL


def initial_params(data, mode: str = "block-maxima", u: float | None = None,
                   n_years: float | None = None) -> GevParams:
    """Moment-based Gumbel starting point.

    sigma0 = sqrt(6)*sd/pi and mu0 = mean - gamma*sigma0 are exact for Gumbel
    data.  In 'exceedances' mode mu0 is instead placed so the implied annual
    exceedance rate of u under the Gumbel start equals the observed n/n_years.
    """
    d = np.asarray(data, dtype=float)
    if d.size < 2 or not np.all(np.isfinite(d)):
        raise DomainError("need at least 2 finite values to initialize")
    sd = float(np.std(d, ddof=1))
    if sd == 0.0:
        raise DomainError("data are constant; cannot form a scale estimate")
    sigma0 = math.sqrt(6.0) * sd / math.pi
    if mode == "block-maxima":
        mu0 = float(np.mean(d)) - np.euler_gamma * sigma0
    elif mode == "exceedances":
        if u is None or n_years is None:
            raise DomainError("exceedances mode requires u and n_years")
        # Gumbel rate over u is exp(-(u-mu)/sigma); solve for mu at rate n/n_years
        mu0 = u + sigma0 * math.log(d.size / n_years)
    else:
        raise DomainError(f"unknown mode {mode!r}")
    return GevParams(mu0, sigma0, 0.0)


def _theta_to_params(theta: np.ndarray) -> GevParams | None:
    if not np.all(np.isfinite(theta)) or abs(theta[1]) > 500.0:
        return None
    return GevParams(float(theta[0]), math.exp(float(theta[1])), float(theta[2]))


def _make_simplex(x0: np.ndarray, steps) -> np.ndarray:
    sim = np.tile(x0, (4, 1))
    scale = math.exp(min(float(x0[1]), 500.0))
    offsets = (steps[0] * scale, steps[1], steps[2])
    for i in range(3):
        sim[i + 1, i] += offsets[i]
    return sim


def _minimize_with_restarts(fun, theta0: np.ndarray, settings: OptimizerSettings):
    """Simplex search with re-inflated restarts from the incumbent.

    Returns (theta, fval, converged, n_restarts_used).  converged means the
    last restart improved the objective by less than the relative tolerance;
    with restarts=0 it falls back to the single run's own termination status.
    """
    best_x = np.asarray(theta0, dtype=float)
    res = minimize(
        fun, best_x, method="Nelder-Mead",
        options=dict(
            maxiter=settings.max_iterations, maxfev=4 * settings.max_iterations,
            xatol=_XATOL, fatol=_FATOL,
            initial_simplex=_make_simplex(best_x, settings.initial_steps),
        ),
    )
    best_x, best_f = np.asarray(res.x, dtype=float), float(res.fun)
    if settings.restarts == 0:
        return best_x, best_f, bool(res.success), 0
    converged = False
    used = 0
    for r in range(1, settings.restarts + 1):
        used = r
        res = minimize(
            fun, best_x, method="Nelder-Mead",
            options=dict(
                maxiter=settings.max_iterations, maxfev=4 * settings.max_iterations,
                xatol=_XATOL, fatol=_FATOL,
                initial_simplex=_make_simplex(best_x, settings.initial_steps),
            ),
        )
        change = best_f - float(res.fun)
        if float(res.fun) < best_f:
            best_x, best_f = np.asarray(res.x, dtype=float), float(res.fun)
        if change < settings.tol * max(1.0, abs(best_f)):
            converged = True
            break
    return best_x, best_f, converged, used


def _fd_hessian(fun, x: np.ndarray) -> np.ndarray | None:
    """Central-difference Hessian with steps max(1e-4*|x_i|, 1e-6).

    Returns None if any probe lands in the sentinel region (optimum too close
    to a support boundary for the stencil).
    """
    h = np.maximum(1e-4 * np.abs(x), 1e-6)
    n = x.size
    H = np.empty((n, n))
    f0 = fun(x)
    evals = [f0]

    def f_at(dx):
        v = fun(x + dx)
        evals.append(v)
        return v

    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h[i]
        H[i, i] = (f_at(ei) - 2.0 * f0 + f_at(-ei)) / h[i] ** 2
    for i in range(n):
        for j in range(i + 1, n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = h[i]
            ej[j] = h[j]
            val = (f_at(ei + ej) - f_at(ei - ej) - f_at(-ei + ej) + f_at(-ei - ej)) / (
                4.0 * h[i] * h[j]
            )
            H[i, j] = H[j, i] = val
    if any(abs(v) >= 0.5 * SENTINEL for v in evals) or not np.all(np.isfinite(H)):
        return None
    return H


def _covariance_from_theta(fun, theta: np.ndarray) -> np.ndarray | None:
    """Inverse Hessian in (mu, log sigma, xi), pushed to (mu, sigma, xi)."""
    H = _fd_hessian(fun, theta)
    if H is None:
        return None
    try:
        cov_theta = np.linalg.inv(H)
    except np.linalg.LinAlgError:
        return None
    sigma = math.exp(float(theta[1]))
    J = np.diag([1.0, sigma, 1.0])
    cov = J @ cov_theta @ J.T
    cov = 0.5 * (cov + cov.T)
    if not np.all(np.isfinite(cov)) or np.any(np.diag(cov) < 0):
        return None
    return cov


def _fit(objective, theta0, settings, n_used, n_years) -> FitResult:
    theta, fval, converged, used = _minimize_with_restarts(objective, theta0, settings)
    params = _theta_to_params(theta)
    if params is None:  # optimizer diverged into the sentinel plateau
        params = _theta_to_params(theta0)
        return FitResult(params, None, float(objective(theta0)), n_used, n_years, False, used)
    cov = _covariance_from_theta(objective, theta)
    return FitResult(params, cov, fval, n_used, n_years, converged, used)


def fit_gev(maxima, settings: OptimizerSettings | None = None,
            min_maxima: int = 10) -> FitResult:
    """Fit a GEV to block maxima by maximum likelihood."""
    m = np.asarray(maxima, dtype=float)
    if m.size < min_maxima:
        raise DomainError(f"need at least {min_maxima} maxima, got {m.size}")
    if not np.all(np.isfinite(m)):
        raise DomainError("maxima must be finite")
    m = np.sort(m)  # canonical summation order: result independent of input order
    settings = settings or OptimizerSettings()
    p0 = initial_params(m, "block-maxima")
    theta0 = np.array([p0.mu, math.log(p0.sigma), 0.0])

    def objective(theta):
        p = _theta_to_params(theta)
        return SENTINEL if p is None else gev_negloglik(p, m)

    return _fit(objective, theta0, settings, n_used=int(m.size), n_years=float(m.size))


def fit_pot(daily, u: float, n_years: float,
            settings: OptimizerSettings | None = None,
            min_exceedances: int = 20) -> FitResult:
    """Fit the point-process exceedance model to daily values above u.

    Values are filtered to strict exceedances of u; the result is the
    GEV-equivalent parameter triple for annual maxima of the same process.
    """
    d = np.asarray(daily, dtype=float)
    if not np.all(np.isfinite(d)):
        raise DomainError("daily values must be finite")
    if n_years < 1:
        raise DomainError(f"n_years must be >= 1, got {n_years}")
    y = np.sort(d[d > u])  # canonical order: fit independent of input ordering
    if y.size < min_exceedances:
        raise DomainError(
            f"need at least {min_exceedances} exceedances of u={u}, got {y.size}"
        )
    settings = settings or OptimizerSettings()
    p0 = initial_params(y, "exceedances", u=u, n_years=n_years)
    theta0 = np.array([p0.mu, math.log(p0.sigma), 0.0])

    def objective(theta):
        p = _theta_to_params(theta)
        return SENTINEL if p is None else pp_negloglik(p, y, u, n_years)

    return _fit(objective, theta0, settings, n_used=int(y.size), n_years=float(n_years))
