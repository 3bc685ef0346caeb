"""Season-stratified point-process fits and their max-combination.

Two stratification approaches:
  1. the full-year thresholds are reused per season (dropping the two
     highest-threshold schedule entries), so seasons compete for the same
     exceedances and quiet seasons may have none;
  2. each season gets its own threshold chosen so it contributes the same
     number of exceedances as the full-year analysis.

Each calendar year counts as one block of every season (n_years = record
years), so a seasonal AEP is an annual exceedance probability and the
overall value is the max over seasons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .aep import AepEstimate, aep_with_uncertainty
from .distributions import DomainError
from .fitting import FitResult, OptimizerSettings, fit_pot
from .series import DailySeries, _MONTH_OF_DAY_365
from .thresholds import ThresholdSchedule, select_exceedances


class Season(Enum):
    """Meteorological seasons, in the fixed tie-break order."""

    DJF = 0
    MAM = 1
    JJA = 2
    SON = 3


_SEASON_OF_MONTH = {
    12: Season.DJF, 1: Season.DJF, 2: Season.DJF,
    3: Season.MAM, 4: Season.MAM, 5: Season.MAM,
    6: Season.JJA, 7: Season.JJA, 8: Season.JJA,
    9: Season.SON, 10: Season.SON, 11: Season.SON,
}


def assign_season(day_of_year: int) -> Season:
    """Season of a day 1..365 of the no-leap calendar."""
    if not 1 <= day_of_year <= 365:
        raise DomainError(f"day_of_year must be in 1..365, got {day_of_year}")
    return _SEASON_OF_MONTH[int(_MONTH_OF_DAY_365[day_of_year - 1])]


def season_masks(series: DailySeries) -> dict[Season, np.ndarray]:
    """Boolean mask over series.values for each season.

    December is pooled with the January-February of the same calendar year
    (the analysis is stationary, so year-splitting is immaterial); Feb 29,
    when present, lands in DJF with the rest of February.
    """
    months = series.month_of_day()
    return {
        season: np.isin(months, [m for m, s in _SEASON_OF_MONTH.items() if s is season])
        for season in Season
    }


@dataclass
class SeasonFit:
    """One season's threshold fit; fit is None when the season is absent
    (too few exceedances) or infeasible."""

    season: Season
    threshold: float
    fit: FitResult | None
    aep: dict[float, AepEstimate]
    note: str = ""


@dataclass
class SeasonalResult:
    """Per-season fits for one schedule entry plus the max-combined AEP."""

    approach: int                       # 1 or 2
    count: int                          # full-year exceedance count driving the entry
    tail_probability: float             # nan when entries were given as bare counts
    seasons: dict[Season, SeasonFit]
    combined: dict[float, AepEstimate]  # empty when no season produced an estimate


def combine_seasonal(estimates: dict[Season, AepEstimate]) -> AepEstimate:
    """Overall AEP value = the largest seasonal value.

    The SE is carried over from the winning season; ties break by season
    order DJF < MAM < JJA < SON.  (Multiplying seasonal non-exceedance
    probabilities would be the probabilistically exact combination; the max
    is a deliberate, slightly conservative simplification.)
    """
    if not estimates:
        raise DomainError("no seasonal estimates to combine")
    best = None
    for season in Season:
        est = estimates.get(season)
        if est is None:
            continue
        if best is None or est.value > best.value:
            best = est
    return best


def _fit_one_season(season: Season, values: np.ndarray, threshold: float,
                    n_years: float, periods_T, settings,
                    min_exceedances: int) -> SeasonFit:
    exc = values[values > threshold]
    if exc.size < min_exceedances:
        return SeasonFit(season, threshold, None, {},
                         f"{exc.size} exceedances, below floor {min_exceedances}")
    try:
        fit = fit_pot(exc, u=threshold, n_years=n_years,
                      settings=settings, min_exceedances=min_exceedances)
    except DomainError as e:
        return SeasonFit(season, threshold, None, {}, str(e))
    aep = {}
    if fit.converged:
        aep = {float(T): aep_with_uncertainty(fit, T) for T in periods_T}
    return SeasonFit(season, threshold, fit, aep)


def _combined_over_periods(seasons: dict[Season, SeasonFit], periods_T):
    combined = {}
    for T in periods_T:
        per_season = {
            s: sf.aep[float(T)] for s, sf in seasons.items() if float(T) in sf.aep
        }
        if per_season:
            combined[float(T)] = combine_seasonal(per_season)
    return combined


def seasonal_fit_approach1(series: DailySeries, schedule: ThresholdSchedule,
                           periods_T, settings: OptimizerSettings | None = None,
                           min_exceedances: int = 20,
                           drop_highest: int = 2) -> list[SeasonalResult]:
    """Seasonal fits at the full-year thresholds.

    The drop_highest smallest-count schedule entries are excluded: at those
    thresholds single seasons routinely fall below the fit floor.
    """
    if len(schedule.exceedance_counts) <= drop_highest:
        raise DomainError(
            f"schedule has only {len(schedule.exceedance_counts)} entries; "
            f"cannot drop {drop_highest}"
        )
    masks = season_masks(series)
    season_values = {s: series.values[m] for s, m in masks.items()}
    n_years = float(series.n_years)
    results = []
    keep = len(schedule.exceedance_counts) - drop_highest
    for q, n in zip(schedule.tail_probabilities[:keep],
                    schedule.exceedance_counts[:keep]):
        threshold, _ = select_exceedances(series.values, n)
        fits = {
            s: _fit_one_season(s, season_values[s], threshold, n_years,
                               periods_T, settings, min_exceedances)
            for s in Season
        }
        results.append(SeasonalResult(1, n, q, fits,
                                      _combined_over_periods(fits, periods_T)))
    return results


def seasonal_fit_approach2(series: DailySeries, counts, periods_T,
                           settings: OptimizerSettings | None = None,
                           min_exceedances: int = 20) -> list[SeasonalResult]:
    """Seasonal fits with per-season thresholds at the full-year counts.

    counts may be a ThresholdSchedule (tail probabilities carried through)
    or a plain iterable of exceedance counts.
    """
    if isinstance(counts, ThresholdSchedule):
        entries = list(zip(counts.tail_probabilities, counts.exceedance_counts))
    else:
        entries = [(math.nan, int(n)) for n in counts]
    masks = season_masks(series)
    season_values = {s: series.values[m] for s, m in masks.items()}
    n_years = float(series.n_years)
    results = []
    for q, n in entries:
        fits = {}
        for s in Season:
            vals = season_values[s]
            try:
                threshold, _ = select_exceedances(vals, n)
            except DomainError as e:
                fits[s] = SeasonFit(s, math.nan, None, {}, str(e))
                continue
            fits[s] = _fit_one_season(s, vals, threshold, n_years,
                                      periods_T, settings, min_exceedances)
        results.append(SeasonalResult(2, n, q, fits,
                                      _combined_over_periods(fits, periods_T)))
    return results
