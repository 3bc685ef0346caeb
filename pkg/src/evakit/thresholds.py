"""Log-spaced threshold schedule, exceedance selection, and the threshold
sweep: refitting the point-process model at every schedule entry and
reporting stability of shape and AEP estimates against a reference count."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .aep import AepEstimate, aep_with_uncertainty
from .distributions import DomainError
from .fitting import FitResult, OptimizerSettings, fit_pot


@dataclass(frozen=True)
class ThresholdSchedule:
    """Descending tail probabilities and the exceedance count for each."""

    tail_probabilities: tuple[float, ...]
    exceedance_counts: tuple[int, ...]
    n_observations: int


def build_schedule(N: int, q_max: float = 1e-3, q_min: float = 1e-5,
                   k: int = 10) -> ThresholdSchedule:
    """k tail probabilities log-spaced from q_max down to q_min (inclusive),
    with exceedance counts ceil(N*q)."""
    if k < 1:
        raise DomainError(f"need at least 1 schedule point, got k={k}")
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N}")
    if k == 1:
        if q_max != q_min:
            raise DomainError(
                f"a single-entry schedule needs q_max == q_min, "
                f"got ({q_max}, {q_min})"
            )
        if not (0.0 < q_max < 1.0):
            raise DomainError(f"require 0 < q < 1, got {q_max}")
        q = np.array([q_max])
    else:
        if not (0.0 < q_min < q_max < 1.0):
            raise DomainError(
                f"require 0 < q_min < q_max < 1, got ({q_min}, {q_max})")
        q = np.logspace(math.log10(q_max), math.log10(q_min), k)
        q[0], q[-1] = q_max, q_min  # endpoints exact, not 10**log10(q) roundtrips
    # round at 9 decimals before ceil so N*q that is an integer up to float
    # noise (e.g. 1e6 * 1e-3) does not get bumped to the next count
    counts = tuple(int(math.ceil(round(N * qj, 9))) for qj in q)
    if any(a <= b for a, b in zip(counts, counts[1:])):
        raise DomainError(
            f"schedule counts {counts} not strictly decreasing; "
            f"N={N} is too small for this probability grid"
        )
    return ThresholdSchedule(tuple(float(v) for v in q), counts, int(N))


def select_exceedances(daily, n: int) -> tuple[float, np.ndarray]:
    """Threshold at the (n+1)-th largest value, plus all strictly greater values.

    For continuous data this yields exactly n exceedances; with ties at the
    threshold the strict-exceedance count differs and the returned array's
    length is the actual count.
    """
    d = np.asarray(daily, dtype=float)
    if n < 1:
        raise DomainError(f"exceedance count must be >= 1, got {n}")
    if n >= d.size:
        raise DomainError(f"count {n} not below series length {d.size}")
    kth = d.size - n - 1
    threshold = float(np.partition(d, kth)[kth])
    return threshold, d[d > threshold]


@dataclass
class SweepRow:
    """One schedule entry of a threshold sweep."""

    tail_probability: float
    count: int                       # scheduled count; actual is fit.n_used
    threshold: float
    fit: FitResult | None            # None when the entry could not be fitted
    aep: dict[float, AepEstimate]    # per requested T; empty unless converged
    note: str = ""


def run_sweep(daily, n_years: float, schedule: ThresholdSchedule,
              periods_T, settings: OptimizerSettings | None = None,
              min_exceedances: int = 20) -> list[SweepRow]:
    """Point-process fit at every schedule threshold.

    Failures (too few exceedances, non-convergence) become rows with
    fit=None or converged=False; the sweep itself never aborts.
    """
    d = np.asarray(daily, dtype=float)
    rows: list[SweepRow] = []
    for q, n in zip(schedule.tail_probabilities, schedule.exceedance_counts):
        try:
            threshold, exc = select_exceedances(d, n)
        except DomainError as e:
            rows.append(SweepRow(q, n, math.nan, None, {}, str(e)))
            continue
        try:
            fit = fit_pot(exc, u=threshold, n_years=n_years,
                          settings=settings, min_exceedances=min_exceedances)
        except DomainError as e:
            rows.append(SweepRow(q, n, threshold, None, {}, str(e)))
            continue
        note = "" if fit.n_used == n else f"ties at threshold: {fit.n_used} exceedances"
        aep = {}
        if fit.converged:
            aep = {float(T): aep_with_uncertainty(fit, T) for T in periods_T}
        rows.append(SweepRow(q, n, threshold, fit, aep, note))
    return rows


@dataclass
class StabilityRow:
    """Shape difference and AEP ratios of one sweep row against the reference."""

    count: int
    tail_probability: float
    d_xi: float | None
    aep_ratio: dict[float, float | None]


def stability_report(rows: list[SweepRow],
                     reference_count: int = 499) -> list[StabilityRow]:
    """Each row's xi and AEP values relative to the reference-count row."""
    ref = next(
        (r for r in rows
         if r.count == reference_count and r.fit is not None and r.fit.converged),
        None,
    )
    if ref is None:
        raise DomainError(
            f"no converged sweep row with reference count {reference_count}"
        )
    out = []
    for r in rows:
        if r.fit is None or not r.fit.converged:
            out.append(StabilityRow(r.count, r.tail_probability, None,
                                    {T: None for T in ref.aep}))
            continue
        ratios: dict[float, float | None] = {}
        for T, ref_est in ref.aep.items():
            est = r.aep.get(T)
            if est is None or ref_est.value == 0:
                ratios[T] = None
            else:
                ratios[T] = est.value / ref_est.value
        out.append(StabilityRow(r.count, r.tail_probability,
                                r.fit.params.xi - ref.fit.params.xi, ratios))
    return out
