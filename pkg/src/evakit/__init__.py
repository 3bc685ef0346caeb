"""Extreme value analysis for huge ensembles of daily series.

Fit GEV distributions to block maxima or point-process models above high
thresholds, turn the fits into 1-in-T annual exceedance probability values
with delta-method uncertainty, sweep thresholds, stratify by season, check
against empirical quantiles, and generate synthetic storm-type-mixture
ensembles with known truth.
"""

from .aep import AepEstimate, aep_with_uncertainty, return_level, return_level_gradient
from .distributions import (DomainError, GevParams, GpdParams, SupportBounds,
                            gev_cdf, gev_logpdf, gev_quantile, gev_sample,
                            gpd_cdf, gpd_logpdf, gpd_quantile, support_bounds)
from .empirical import AnnualMaxima, annual_maxima, empirical_aep
from .estimators import GevAep, PotAep
from .fitting import (FitResult, OptimizerSettings, fit_gev, fit_pot,
                      gev_negloglik, initial_params, pp_negloglik)
from .pipeline import (PipelineConfig, ReportRow, analyze_cell, load_config,
                       run_pipeline, write_report)
from .seasonal import (Season, SeasonFit, SeasonalResult, assign_season,
                       combine_seasonal, season_masks, seasonal_fit_approach1,
                       seasonal_fit_approach2)
from .series import DailySeries, is_leap_year, year_length
from .storage import (index_store, iter_store, read_cell_at, read_csv,
                      read_store, write_store)
from .synth import (Baseline, MixtureSpec, StormType, TruthRecord,
                    generate_cell, preset, spec_from_json, spec_to_json,
                    true_quantile)
from .thresholds import (StabilityRow, SweepRow, ThresholdSchedule,
                         build_schedule, run_sweep, select_exceedances,
                         stability_report)

__version__ = "0.1.0"

__all__ = [
    "AepEstimate", "AnnualMaxima", "Baseline", "DailySeries", "DomainError",
    "FitResult", "GevAep", "GevParams", "GpdParams", "MixtureSpec",
    "OptimizerSettings", "PipelineConfig", "PotAep", "ReportRow", "Season",
    "SeasonFit", "SeasonalResult", "StabilityRow", "StormType", "SupportBounds",
    "SweepRow", "ThresholdSchedule", "TruthRecord", "aep_with_uncertainty",
    "analyze_cell", "annual_maxima", "assign_season", "build_schedule",
    "combine_seasonal", "empirical_aep", "fit_gev", "fit_pot", "generate_cell",
    "gev_cdf", "gev_logpdf", "gev_negloglik", "gev_quantile", "gev_sample",
    "gpd_cdf", "gpd_logpdf", "gpd_quantile", "index_store", "initial_params",
    "is_leap_year", "iter_store", "load_config", "pp_negloglik", "preset",
    "read_cell_at", "read_csv", "read_store", "return_level",
    "return_level_gradient", "run_pipeline", "run_sweep", "season_masks",
    "seasonal_fit_approach1", "seasonal_fit_approach2", "select_exceedances",
    "spec_from_json", "spec_to_json", "stability_report", "support_bounds",
    "true_quantile", "write_report", "write_store", "year_length",
]
