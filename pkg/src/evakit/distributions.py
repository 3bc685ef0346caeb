"""GEV and GPD distribution functions, stable through the shape -> 0 limit.

Shape parameter convention (climate standard, Coles-style):
    xi > 0  heavy unbounded upper tail
    xi = 0  light unbounded tail (Gumbel / exponential branch)
    xi < 0  bounded upper tail at mu - sigma/xi (GEV) or u + sigma_u/|xi| (GPD)

The GPD here is conditional on exceedance: cdf/logpdf/quantile describe
X | X > u, so gpd_cdf(p, u) == 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Below this |xi| the Gumbel/exponential branch is used: the (1+xi*z)^(-1/xi)
# term loses all precision to cancellation around the double-precision scale.
XI_TOL = 1e-8


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


@dataclass(frozen=True)
class GevParams:
    """GEV parameter triple."""

    mu: float     # location, units of the variable
    sigma: float  # scale > 0, same units
    xi: float     # shape, dimensionless

    def validate(self) -> "GevParams":
        if not (math.isfinite(self.mu) and math.isfinite(self.sigma) and math.isfinite(self.xi)):
            raise DomainError(f"GEV parameters must be finite, got {self}")
        if self.sigma <= 0:
            raise DomainError(f"GEV scale must be positive, got sigma={self.sigma}")
        return self

    def is_valid(self) -> bool:
        try:
            self.validate()
        except DomainError:
            return False
        return True


@dataclass(frozen=True)
class GpdParams:
    """GPD parameter triple; sigma_u is the threshold-dependent scale."""

    u: float        # threshold
    sigma_u: float  # scale > 0
    xi: float       # shape

    def validate(self) -> "GpdParams":
        if not (math.isfinite(self.u) and math.isfinite(self.sigma_u) and math.isfinite(self.xi)):
            raise DomainError(f"GPD parameters must be finite, got {self}")
        if self.sigma_u <= 0:
            raise DomainError(f"GPD scale must be positive, got sigma_u={self.sigma_u}")
        return self


@dataclass(frozen=True)
class SupportBounds:
    """Support interval; unbounded ends are +-inf."""

    lower: float
    upper: float

    def contains(self, x) -> np.ndarray | bool:
        return (np.asarray(x) >= self.lower) & (np.asarray(x) <= self.upper)


def support_bounds(p: GevParams | GpdParams) -> SupportBounds:
    """Support of the distribution; finite end only where xi bounds the tail."""
    if isinstance(p, GevParams):
        p.validate()
        if abs(p.xi) < XI_TOL:
            return SupportBounds(-np.inf, np.inf)
        endpoint = p.mu - p.sigma / p.xi
        if p.xi > 0:
            return SupportBounds(endpoint, np.inf)
        return SupportBounds(-np.inf, endpoint)
    p.validate()
    if p.xi < -XI_TOL:
        return SupportBounds(p.u, p.u - p.sigma_u / p.xi)
    return SupportBounds(p.u, np.inf)


def _check_finite(x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite")
    return arr


def _maybe_scalar(result: np.ndarray, like) -> np.ndarray | float:
    if np.isscalar(like) or np.ndim(like) == 0:
        return float(result)
    return result


def gev_cdf(p: GevParams, x) -> np.ndarray | float:
    """GEV cdf exp{-[1 + xi*(x-mu)/sigma]^(-1/xi)}.

    Returns exactly 0 below a finite lower bound and 1 above a finite upper
    bound instead of raising; likelihood code handles support explicitly.
    """
    p.validate()
    xa = _check_finite(x, "x")
    z = (xa - p.mu) / p.sigma
    if abs(p.xi) < XI_TOL:
        with np.errstate(over="ignore"):  # exp(-z) -> inf gives cdf 0, the right limit
            out = np.exp(-np.exp(-z))
    else:
        w = 1.0 + p.xi * z
        inside = w > 0
        out = np.empty_like(z)
        out[~inside] = 0.0 if p.xi > 0 else 1.0
        # (1+xi*z)^(-1/xi) evaluated as exp(-log1p(xi*z)/xi) for stability
        out[inside] = np.exp(-np.exp(-np.log1p(p.xi * z[inside]) / p.xi))
    return _maybe_scalar(out, x)


def gev_quantile(p: GevParams, prob) -> np.ndarray | float:
    """Inverse GEV cdf; prob must lie strictly inside (0, 1)."""
    p.validate()
    pr = np.asarray(prob, dtype=float)
    if np.any(~np.isfinite(pr)) or np.any(pr <= 0.0) or np.any(pr >= 1.0):
        raise DomainError("prob must lie in the open interval (0, 1)")
    w = np.log(-np.log(pr))
    if abs(p.xi) < XI_TOL:
        out = p.mu - p.sigma * w
    else:
        # (-log prob)^(-xi) - 1 == expm1(-xi * w)
        out = p.mu + p.sigma * np.expm1(-p.xi * w) / p.xi
    return _maybe_scalar(out, prob)


def gev_logpdf(p: GevParams, x) -> np.ndarray | float:
    """Log density of the GEV; -inf outside the support."""
    p.validate()
    xa = _check_finite(x, "x")
    z = (xa - p.mu) / p.sigma
    log_sigma = math.log(p.sigma)
    if abs(p.xi) < XI_TOL:
        with np.errstate(over="ignore"):  # overflow far below mu -> -inf log density
            out = -log_sigma - z - np.exp(-z)
    else:
        w = 1.0 + p.xi * z
        inside = w > 0
        out = np.full_like(z, -np.inf)
        logw = np.log1p(p.xi * z[inside])
        t = np.exp(-logw / p.xi)
        out[inside] = -log_sigma - (1.0 / p.xi + 1.0) * logw - t
    return _maybe_scalar(out, x)


def gpd_cdf(p: GpdParams, x) -> np.ndarray | float:
    """Conditional-on-exceedance cdf 1 - [1 + xi*(x-u)/sigma_u]^(-1/xi)."""
    p.validate()
    xa = _check_finite(x, "x")
    if np.any(xa < p.u):
        raise DomainError(f"x below threshold u={p.u}")
    y = (xa - p.u) / p.sigma_u
    if abs(p.xi) < XI_TOL:
        out = -np.expm1(-y)
    else:
        w = 1.0 + p.xi * y
        inside = w > 0
        out = np.ones_like(y)  # beyond a finite upper bound the cdf is 1
        out[inside] = -np.expm1(-np.log1p(p.xi * y[inside]) / p.xi)
    return _maybe_scalar(out, x)


def gpd_quantile(p: GpdParams, prob) -> np.ndarray | float:
    """Inverse of gpd_cdf; prob strictly inside (0, 1)."""
    p.validate()
    pr = np.asarray(prob, dtype=float)
    if np.any(~np.isfinite(pr)) or np.any(pr <= 0.0) or np.any(pr >= 1.0):
        raise DomainError("prob must lie in the open interval (0, 1)")
    # (1-prob)^(-xi) - 1 == expm1(-xi * log1p(-prob))
    w = np.log1p(-pr)
    if abs(p.xi) < XI_TOL:
        out = p.u - p.sigma_u * w
    else:
        out = p.u + p.sigma_u * np.expm1(-p.xi * w) / p.xi
    return _maybe_scalar(out, prob)


def gpd_logpdf(p: GpdParams, x) -> np.ndarray | float:
    """Log density of the conditional-on-exceedance GPD; -inf beyond a bounded tail."""
    p.validate()
    xa = _check_finite(x, "x")
    if np.any(xa < p.u):
        raise DomainError(f"x below threshold u={p.u}")
    y = (xa - p.u) / p.sigma_u
    log_sigma = math.log(p.sigma_u)
    if abs(p.xi) < XI_TOL:
        out = -log_sigma - y
    else:
        w = 1.0 + p.xi * y
        inside = w > 0
        out = np.full_like(y, -np.inf)
        out[inside] = -log_sigma - (1.0 / p.xi + 1.0) * np.log1p(p.xi * y[inside])
    return _maybe_scalar(out, x)


def gev_sample(p: GevParams, n: int, seed: int) -> np.ndarray:
    """Inverse-cdf sample of size n, deterministic for a given seed."""
    p.validate()
    if n < 0:
        raise DomainError(f"sample size must be >= 0, got {n}")
    if n == 0:
        return np.empty(0)
    rng = np.random.default_rng(seed)
    u = rng.random(n)
    # random() can return exactly 0; keep u inside the open interval
    np.clip(u, 1e-300, None, out=u)
    return np.asarray(gev_quantile(p, u), dtype=float).reshape(n)
