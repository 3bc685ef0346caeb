"""1-in-T AEP values (return levels) and their delta-method uncertainty.

T is in block units of the fit -- annual blocks throughout -- so the 1-in-T
value is the quantile with annual exceedance probability 1/T.  Uncertainty is
propagated on the (mu, sigma, xi) scale from the fit covariance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import XI_TOL, DomainError, GevParams, gev_quantile
from .fitting import FitResult


@dataclass(frozen=True)
class AepEstimate:
    """1-in-T value with delta-method standard error."""

    period_T: float
    value: float
    se: float | None                    # None when the fit covariance is unavailable
    relative_uncertainty: float | None  # se/value; None when se missing or value <= 0


def _check_period(T: float) -> None:
    if not (math.isfinite(T) and T > 1.0):
        raise DomainError(f"return period must be > 1 year, got {T}")


def return_level(p: GevParams, T: float) -> float:
    """Quantile with annual exceedance probability 1/T."""
    _check_period(T)
    return float(gev_quantile(p, 1.0 - 1.0 / T))


def return_level_gradient(p: GevParams, T: float) -> np.ndarray:
    """Analytic (d/dmu, d/dsigma, d/dxi) of the 1-in-T value.

    With y = -log(1 - 1/T), w = log y, a = y^(-xi):
        dz/dmu    = 1
        dz/dsigma = (a - 1)/xi          -> -w        as xi -> 0
        dz/dxi    = -sigma*(w*a + (a-1)/xi)/xi -> sigma*w^2/2 as xi -> 0
    """
    p.validate()
    _check_period(T)
    y = -math.log1p(-1.0 / T)
    w = math.log(y)
    if abs(p.xi) < XI_TOL:
        return np.array([1.0, -w, p.sigma * w * w / 2.0])
    a = math.exp(-p.xi * w)
    g = math.expm1(-p.xi * w) / p.xi
    return np.array([1.0, g, -p.sigma * (w * a + g) / p.xi])


def aep_with_uncertainty(fit: FitResult, T: float) -> AepEstimate:
    """Delta-method AEP estimate from a converged fit.

    se = sqrt(g' Sigma g) with g the return-level gradient and Sigma the
    (mu, sigma, xi) covariance.  A missing covariance yields se=None rather
    than an error; relative uncertainty is undefined (None) unless value > 0.
    """
    _check_period(T)
    if not fit.converged:
        raise DomainError("fit did not converge; refusing to quote an AEP value")
    value = return_level(fit.params, T)
    if fit.covariance is None:
        return AepEstimate(float(T), value, None, None)
    g = return_level_gradient(fit.params, T)
    var = float(g @ fit.covariance @ g)
    se = math.sqrt(max(var, 0.0))
    rel = se / value if value > 0 else None
    return AepEstimate(float(T), value, se, rel)
