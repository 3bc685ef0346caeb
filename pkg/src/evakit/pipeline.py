"""Experiment orchestration: config files, per-cell parallel analysis, reports.

A pipeline run is a pure function of (input store, config): the report files
are byte-identical across repeated runs and across worker counts.  Per-cell
analysis failures are recorded as rows with converged=false; only I/O and
configuration problems abort the run.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields

from .aep import AepEstimate, aep_with_uncertainty
from .distributions import DomainError
from .empirical import annual_maxima, empirical_aep
from .fitting import FitResult, fit_gev
from .seasonal import seasonal_fit_approach1, seasonal_fit_approach2
from .storage import index_store, read_cell_at
from .thresholds import build_schedule, run_sweep

METHODS = ("gev", "pot", "seasonal-1", "seasonal-2", "empirical")

WORKERS_ENV = "EVAKIT_WORKERS"

# tail probability of the 499-count reference threshold on the 10560-year
# no-leap record; shorter records map it to their nearest schedule entry
REFERENCE_TAIL_PROBABILITY = 499.0 / 3_856_800.0


class ConfigError(Exception):
    """Bad configuration file or option values."""


# ------------------------------------------------------------- configuration

@dataclass
class PipelineConfig:
    input: str = ""
    output: str = ""
    methods: tuple[str, ...] = ("pot",)
    q_max: float = 1e-3
    q_min: float = 1e-5
    n_thresholds: int = 10
    periods: tuple[float, ...] = (10.0, 100.0, 1000.0)
    reference_q: float = REFERENCE_TAIL_PROBABILITY
    workers: int = 0                # 0 = take EVAKIT_WORKERS, else 1
    seed: int = 0                   # recorded for manifests; analysis is
                                    # deterministic and does not consume it

    def validate(self) -> None:
        if not self.input:
            raise ConfigError("config must name an input store (input=...)")
        if not self.output:
            raise ConfigError("config must name an output directory (output=...)")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(
                f"unknown method(s) {', '.join(bad)}; choose from {', '.join(METHODS)}")
        if not self.methods:
            raise ConfigError("at least one method is required")
        if not self.periods:
            raise ConfigError("at least one return period is required")
        if any(T <= 1.0 for T in self.periods):
            raise ConfigError("return periods must be > 1 year")
        if self.n_thresholds < 1:
            raise ConfigError("n_thresholds must be >= 1")
        if self.workers < 0:
            raise ConfigError("workers must be >= 0")

    def resolved_workers(self) -> int:
        if self.workers > 0:
            return self.workers
        env = os.environ.get(WORKERS_ENV, "")
        if env:
            try:
                n = int(env)
            except ValueError:
                raise ConfigError(f"{WORKERS_ENV}={env!r} is not an integer")
            if n < 1:
                raise ConfigError(f"{WORKERS_ENV} must be >= 1, got {n}")
            return n
        return 1


_LIST_KEYS = {"methods", "periods"}


def parse_config_file(path: str) -> dict[str, str]:
    """Read a key=value manifest; '#' starts a comment, blank lines ignored."""
    raw: dict[str, str] = {}
    try:
        with open(path) as f:
            for ln, line in enumerate(f, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path} line {ln}: expected key=value, "
                                      f"got {line!r}")
                key, _, value = line.partition("=")
                key = key.strip()
                if key in raw:
                    raise ConfigError(f"{path} line {ln}: duplicate key {key!r}")
                raw[key] = value.strip()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}")
    return raw


def build_config(raw: dict[str, str]) -> PipelineConfig:
    """Coerce raw string settings into a PipelineConfig."""
    known = {f.name: f.type for f in fields(PipelineConfig)}
    unknown = [k for k in raw if k not in known]
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    kwargs: dict = {}
    for key, text in raw.items():
        try:
            if key in _LIST_KEYS:
                parts = tuple(p.strip() for p in text.split(",") if p.strip())
                kwargs[key] = (parts if key == "methods"
                               else tuple(float(p) for p in parts))
            elif key in ("n_thresholds", "workers", "seed"):
                kwargs[key] = int(text)
            elif key in ("q_max", "q_min", "reference_q"):
                kwargs[key] = float(text)
            else:
                kwargs[key] = text
        except ValueError:
            raise ConfigError(f"config key {key!r}: cannot parse {text!r}")
    return PipelineConfig(**kwargs)


def load_config(path: str | None, overrides: dict[str, str]) -> PipelineConfig:
    """Config file merged with CLI overrides; overrides win."""
    raw = parse_config_file(path) if path else {}
    raw.update({k: v for k, v in overrides.items() if v is not None})
    cfg = build_config(raw)
    cfg.validate()
    return cfg


# -------------------------------------------------------------- report rows

@dataclass(frozen=True)
class ReportRow:
    """One (cell, method, threshold, return period) result."""

    cell: str
    method: str
    tail_probability: float | None      # None for annual-block methods
    threshold: float | None
    n_used: int
    period_T: float
    mu: float | None
    sigma: float | None
    xi: float | None
    se_xi: float | None
    aep_value: float | None
    aep_se: float | None
    aep_rel_uncertainty: float | None
    converged: bool
    note: str = ""


_CSV_FIELDS = [f.name for f in fields(ReportRow)]


def _row_sort_key(r: ReportRow):
    # annual rows first, then thresholds in schedule order (largest q first)
    q = -r.tail_probability if r.tail_probability is not None else -math.inf
    return (r.cell, r.method, q, r.period_T)


def _clean(x) -> float | None:
    if x is None:
        return None
    x = float(x)
    return x if math.isfinite(x) else None


def _aep_fields(est: AepEstimate | None):
    if est is None:
        return None, None, None
    return _clean(est.value), _clean(est.se), _clean(est.relative_uncertainty)


def _fit_fields(fit: FitResult | None):
    if fit is None or fit.params is None:
        return None, None, None, None
    se_xi = None
    if fit.covariance is not None:
        se_xi = _clean(math.sqrt(max(fit.covariance[2, 2], 0.0)))
    return (_clean(fit.params.mu), _clean(fit.params.sigma),
            _clean(fit.params.xi), se_xi)


# ---------------------------------------------------------- per-cell analysis

def _rows_gev(series, cfg: PipelineConfig) -> list[ReportRow]:
    rows = []
    try:
        fit = fit_gev(annual_maxima(series).values)
        err = ""
    except DomainError as e:
        fit, err = None, str(e)
    mu, sigma, xi, se_xi = _fit_fields(fit)
    for T in cfg.periods:
        est = None
        if fit is not None and fit.converged:
            est = aep_with_uncertainty(fit, T)
        v, se, rel = _aep_fields(est)
        rows.append(ReportRow(series.cell_id, "gev", None, None,
                              0 if fit is None else fit.n_used, float(T),
                              mu, sigma, xi, se_xi, v, se, rel,
                              fit is not None and fit.converged, err))
    return rows


def _rows_empirical(series, cfg: PipelineConfig) -> list[ReportRow]:
    rows = []
    maxima = annual_maxima(series)
    for T in cfg.periods:
        try:
            value, note, ok = empirical_aep(maxima, T), "", True
        except DomainError as e:
            value, note, ok = None, str(e), False
        rows.append(ReportRow(series.cell_id, "empirical", None, None,
                              maxima.n_years, float(T), None, None, None, None,
                              _clean(value), None, None, ok, note))
    return rows


def _rows_pot(series, schedule, cfg: PipelineConfig) -> list[ReportRow]:
    rows = []
    for sw in run_sweep(series.values, float(series.n_years), schedule,
                        cfg.periods):
        mu, sigma, xi, se_xi = _fit_fields(sw.fit)
        converged = sw.fit is not None and sw.fit.converged
        for T in cfg.periods:
            v, se, rel = _aep_fields(sw.aep.get(float(T)))
            rows.append(ReportRow(series.cell_id, "pot", sw.tail_probability,
                                  _clean(sw.threshold),
                                  0 if sw.fit is None else sw.fit.n_used,
                                  float(T), mu, sigma, xi, se_xi, v, se, rel,
                                  converged, sw.note))
    return rows


def _rows_seasonal(series, schedule, cfg: PipelineConfig,
                   approach: int) -> list[ReportRow]:
    method = f"seasonal-{approach}"
    try:
        if approach == 1:
            results = seasonal_fit_approach1(series, schedule, cfg.periods)
        else:
            results = seasonal_fit_approach2(series, schedule, cfg.periods)
    except DomainError as e:
        return [ReportRow(series.cell_id, method, None, None, 0, float(T),
                          None, None, None, None, None, None, None, False,
                          str(e))
                for T in cfg.periods]
    rows = []
    for res in results:
        n_used = sum(sf.fit.n_used for sf in res.seasons.values()
                     if sf.fit is not None and sf.fit.converged)
        notes = "; ".join(f"{sf.season.name}: {sf.note}"
                          for sf in res.seasons.values() if sf.note)
        q = None if math.isnan(res.tail_probability) else res.tail_probability
        for T in cfg.periods:
            v, se, rel = _aep_fields(res.combined.get(float(T)))
            rows.append(ReportRow(series.cell_id, method, q, None, n_used,
                                  float(T), None, None, None, None, v, se, rel,
                                  v is not None, notes))
    return rows


def analyze_cell(series, cfg: PipelineConfig) -> list[ReportRow]:
    """All requested analyses for one cell, as report rows."""
    rows = []
    needs_schedule = any(m in cfg.methods
                         for m in ("pot", "seasonal-1", "seasonal-2"))
    schedule, sched_err = None, ""
    if needs_schedule:
        try:
            schedule = build_schedule(series.values.size, cfg.q_max, cfg.q_min,
                                      cfg.n_thresholds)
        except DomainError as e:
            sched_err = str(e)
    for method in cfg.methods:
        if method == "gev":
            rows.extend(_rows_gev(series, cfg))
        elif method == "empirical":
            rows.extend(_rows_empirical(series, cfg))
        elif schedule is None:
            rows.extend(ReportRow(series.cell_id, method, None, None, 0,
                                  float(T), None, None, None, None, None, None,
                                  None, False, sched_err)
                        for T in cfg.periods)
        elif method == "pot":
            rows.extend(_rows_pot(series, schedule, cfg))
        elif method == "seasonal-1":
            rows.extend(_rows_seasonal(series, schedule, cfg, 1))
        else:
            rows.extend(_rows_seasonal(series, schedule, cfg, 2))
    return rows


def _analyze_cell_at(path: str, offset: int, cfg: PipelineConfig):
    return analyze_cell(read_cell_at(path, offset), cfg)


# ------------------------------------------------------------- report output

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _row_record(r: ReportRow) -> dict:
    d = {}
    for name in _CSV_FIELDS:
        v = getattr(r, name)
        if name == "tail_probability" and v is None:
            v = "annual"
        d[name] = v
    return d


def write_report(rows: list[ReportRow], outdir: str,
                 reference_q: float = REFERENCE_TAIL_PROBABILITY) -> list[str]:
    """Emit report.csv, report.json and the figure-analogue scatter files.

    Returns the paths written.  Everything here is computed from the rows
    alone, so the outputs are reproducible from report.json by itself.
    """
    os.makedirs(outdir, exist_ok=True)
    paths = []

    path = os.path.join(outdir, "report.csv")
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(_CSV_FIELDS)
        for r in rows:
            rec = _row_record(r)
            w.writerow([_fmt(rec[name]) for name in _CSV_FIELDS])
    paths.append(path)

    path = os.path.join(outdir, "report.json")
    with open(path, "w", newline="\n") as f:
        json.dump([_row_record(r) for r in rows], f, indent=2)
        f.write("\n")
    paths.append(path)

    for name, table in (
        ("fit_vs_empirical.csv", _table_fit_vs_empirical(rows, reference_q)),
        ("stability_vs_reference.csv", _table_stability(rows, reference_q)),
        ("seasonal_vs_fullyear.csv", _table_seasonal(rows, reference_q)),
        ("relative_uncertainty_vs_shape.csv", _table_rel_unc(rows, reference_q)),
    ):
        path = os.path.join(outdir, name)
        with open(path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(table[0])
            for row in table[1]:
                w.writerow([_fmt(v) for v in row])
        paths.append(path)
    return paths


def _pot_reference_rows(rows, reference_q):
    """The converged pot row nearest the reference tail probability, per
    (cell, period)."""
    best: dict[tuple[str, float], ReportRow] = {}
    for r in rows:
        if r.method != "pot" or not r.converged or r.tail_probability is None:
            continue
        key = (r.cell, r.period_T)
        d = abs(math.log(r.tail_probability) - math.log(reference_q))
        cur = best.get(key)
        if cur is None or d < abs(math.log(cur.tail_probability)
                                  - math.log(reference_q)):
            best[key] = r
    return best


def _table_fit_vs_empirical(rows, reference_q):
    header = ("cell", "period_T", "pot_value", "empirical_value")
    ref = _pot_reference_rows(rows, reference_q)
    emp = {(r.cell, r.period_T): r for r in rows
           if r.method == "empirical" and r.converged}
    out = []
    for key in sorted(ref):
        if key in emp and ref[key].aep_value is not None:
            out.append((key[0], key[1], ref[key].aep_value,
                        emp[key].aep_value))
    return header, out


def _table_stability(rows, reference_q):
    header = ("cell", "tail_probability", "n_used", "period_T", "d_xi",
              "aep_ratio")
    ref = _pot_reference_rows(rows, reference_q)
    out = []
    for r in rows:
        if r.method != "pot" or not r.converged or r.tail_probability is None:
            continue
        anchor = ref.get((r.cell, r.period_T))
        if anchor is None or anchor.xi is None or r.xi is None:
            continue
        ratio = None
        if r.aep_value is not None and anchor.aep_value:
            ratio = r.aep_value / anchor.aep_value
        out.append((r.cell, r.tail_probability, r.n_used, r.period_T,
                    r.xi - anchor.xi, ratio))
    return header, out


def _table_seasonal(rows, reference_q):
    header = ("cell", "method", "period_T", "seasonal_value", "fullyear_value",
              "ratio")
    ref = _pot_reference_rows(rows, reference_q)
    out = []
    for r in rows:
        if (r.method not in ("seasonal-1", "seasonal-2") or not r.converged
                or r.tail_probability is None or r.aep_value is None):
            continue
        anchor = ref.get((r.cell, r.period_T))
        if anchor is None or anchor.tail_probability != r.tail_probability:
            continue
        if anchor.aep_value:
            out.append((r.cell, r.method, r.period_T, r.aep_value,
                        anchor.aep_value, r.aep_value / anchor.aep_value))
    return header, out


def _table_rel_unc(rows, reference_q):
    header = ("cell", "period_T", "xi", "se_xi", "relative_uncertainty")
    ref = _pot_reference_rows(rows, reference_q)
    out = []
    for key in sorted(ref):
        r = ref[key]
        if r.xi is not None and r.aep_rel_uncertainty is not None:
            out.append((r.cell, r.period_T, r.xi, r.se_xi,
                        r.aep_rel_uncertainty))
    return header, out


# --------------------------------------------------------------- entry point

def run_pipeline(cfg: PipelineConfig) -> list[str]:
    """Analyze every cell in the input store and write the report files.

    Cells are processed independently over a bounded worker pool; rows are
    assembled in deterministic order no matter how the work was scheduled.
    """
    cfg.validate()
    workers = cfg.resolved_workers()
    index = index_store(cfg.input)
    if workers <= 1 or len(index) <= 1:
        per_cell = [_analyze_cell_at(cfg.input, off, cfg) for _, off in index]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_analyze_cell_at, cfg.input, off, cfg)
                       for _, off in index]
            per_cell = [fut.result() for fut in futures]
    rows = [r for cell_rows in per_cell for r in cell_rows]
    rows.sort(key=_row_sort_key)
    return write_report(rows, cfg.output, cfg.reference_q)
