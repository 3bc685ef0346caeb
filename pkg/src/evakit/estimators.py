"""scikit-learn style wrappers around the block-maxima and threshold fitters.

Both estimators follow the fit/predict contract: fit() consumes a sample,
predict() maps return periods (in years) to 1-in-T daily values.  They are
clone()-able and work inside sklearn tooling; X is a 1-D sample (or single
column), not a feature matrix.
"""

from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .aep import aep_with_uncertainty, return_level
from .fitting import fit_gev, fit_pot
from .pipeline import REFERENCE_TAIL_PROBABILITY
from .thresholds import select_exceedances
from .validation import check_positive, check_return_periods, check_sample


class _ReturnLevelMixin:
    """predict / aep shared by both estimators; expects self.result_."""

    def predict(self, X) -> np.ndarray:
        """1-in-T values for an array of return periods T (years)."""
        check_is_fitted(self)
        T = check_return_periods(X)
        return np.array([return_level(self.result_.params, t) for t in T])

    def aep(self, T):
        """AepEstimate (value, se, relative uncertainty) for one period."""
        check_is_fitted(self)
        return aep_with_uncertainty(self.result_, float(T))

    def _finish_fit(self, result):
        self.result_ = result
        self.mu_ = result.params.mu if result.params is not None else math.nan
        self.sigma_ = result.params.sigma if result.params is not None else math.nan
        self.xi_ = result.params.xi if result.params is not None else math.nan
        self.converged_ = result.converged
        return self


class GevAep(_ReturnLevelMixin, BaseEstimator):
    """Annual-exceedance estimates from a GEV fit to block maxima.

    Parameters
    ----------
    settings : OptimizerSettings, optional
        Simplex configuration forwarded to the fitter.
    min_maxima : int
        Fewest block maxima accepted.
    """

    def __init__(self, settings=None, min_maxima=10):
        self.settings = settings
        self.min_maxima = min_maxima

    def fit(self, X, y=None):
        """Fit to a sample of block (annual) maxima."""
        maxima = check_sample(X, "X", min_len=1)
        return self._finish_fit(
            fit_gev(maxima, settings=self.settings, min_maxima=self.min_maxima))


class PotAep(_ReturnLevelMixin, BaseEstimator):
    """Annual-exceedance estimates from a point-process fit above a threshold.

    The threshold is chosen from the data at fit time: the value whose
    exceedance count matches ceil(n_observations * tail_probability).

    Parameters
    ----------
    n_years : float
        Years spanned by the daily record given to fit().
    tail_probability : float
        Fraction of daily observations above the threshold.
    settings : OptimizerSettings, optional
    min_exceedances : int
    """

    def __init__(self, n_years=None, tail_probability=REFERENCE_TAIL_PROBABILITY,
                 settings=None, min_exceedances=20):
        self.n_years = n_years
        self.tail_probability = tail_probability
        self.settings = settings
        self.min_exceedances = min_exceedances

    def fit(self, X, y=None):
        """Fit to a full daily record (1-D)."""
        daily = check_sample(X, "X", min_len=2)
        n_years = check_positive(self.n_years, "n_years")
        q = check_positive(self.tail_probability, "tail_probability")
        count = int(math.ceil(round(daily.size * q, 9)))
        threshold, exc = select_exceedances(daily, count)
        self.threshold_ = threshold
        self.n_exceedances_ = exc.size
        return self._finish_fit(
            fit_pot(exc, u=threshold, n_years=n_years, settings=self.settings,
                    min_exceedances=self.min_exceedances))
