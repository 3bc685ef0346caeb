"""Model-free AEP estimates: annual-maxima extraction and empirical quantiles.

These are the validation yardstick for the parametric fits -- with enough
years of record the empirical (1 - 1/T) quantile of annual maxima needs no
extrapolation at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .distributions import DomainError
from .series import DailySeries


@dataclass
class AnnualMaxima:
    """One maximum per calendar year; Feb 29 values were discarded first."""

    values: np.ndarray
    years: np.ndarray
    cell_id: str
    source_had_leap_days: bool

    @property
    def n_years(self) -> int:
        return self.values.size


def annual_maxima(series: DailySeries) -> AnnualMaxima:
    """Max over each year's 365 retained days (leap days dropped first)."""
    leap_mask = series.leap_day_mask()
    values = np.empty(series.n_years)
    years = np.empty(series.n_years, dtype=int)
    for i, (year, sl) in enumerate(series.year_slices()):
        vals = series.values[sl]
        keep = ~leap_mask[sl]
        values[i] = np.max(vals[keep])
        years[i] = year
    return AnnualMaxima(values, years, series.cell_id, series.with_leap_days)


def empirical_aep(maxima, T: float, min_years_factor: float = 2.0) -> float:
    """Empirical 1-in-T value from annual maxima.

    Linear interpolation of the empirical CDF with plotting positions
    i/(n+1).  Requires n >= min_years_factor*T so the target probability
    stays interior to the plotting positions (no tail extrapolation).
    """
    m = maxima.values if isinstance(maxima, AnnualMaxima) else np.asarray(maxima, dtype=float)
    if not (math.isfinite(T) and T > 1.0):
        raise DomainError(f"return period must be > 1 year, got {T}")
    n = m.size
    required = int(math.ceil(min_years_factor * T))
    if n < required:
        raise DomainError(
            f"empirical 1-in-{T:g} needs at least {required} years, have {n}"
        )
    order = np.sort(m)
    positions = np.arange(1, n + 1) / (n + 1.0)
    return float(np.interp(1.0 - 1.0 / T, positions, order))
