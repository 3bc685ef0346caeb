"""Synthetic daily ensembles from storm-type mixtures with known tail truth.

Each day of a no-leap year draws at most one storm type according to
per-season occurrence probabilities; the remainder is a quiet day (zero for
precipitation, the seasonal baseline for temperature-like variables).  Daily
values use a counter-based RNG (splitmix64 finalizer over a per-day counter),
so any day of any cell is reproducible on its own and generation is safe to
parallelize or chunk arbitrarily: exactly two uniforms are consumed per day
(type selection, magnitude) no matter which type occurs.

Ground truth for the 1-in-T value comes from brute-force Monte Carlo over
annual maxima (true_quantile), never from the fitted models.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import special

from .distributions import (
    XI_TOL,
    DomainError,
    GevParams,
    GpdParams,
    gev_quantile,
    gpd_quantile,
)
from .seasonal import Season, assign_season
from .series import DailySeries

_KINDS = ("gamma", "gpd", "gev", "constant")

# season index (0..3) for each day of the no-leap year
_SEASON_IDX_365 = np.array([assign_season(d).value for d in range(1, 366)], dtype=np.int8)
_DAYS_PER_SEASON = np.bincount(_SEASON_IDX_365, minlength=4)  # [90, 92, 92, 91]


@dataclass(frozen=True)
class Baseline:
    """Deterministic seasonal cycle added to every day's value.

    value(day) = mean + amplitude * cos(2*pi*(day - peak_day)/365)
    """

    mean: float = 0.0
    amplitude: float = 0.0
    peak_day: int = 196  # mid-July

    def value(self, day_of_year) -> np.ndarray:
        d = np.asarray(day_of_year, dtype=float)
        return self.mean + self.amplitude * np.cos(
            2.0 * math.pi * (d - self.peak_day) / 365.0
        )

    @property
    def is_flat(self) -> bool:
        return self.amplitude == 0.0


@dataclass(frozen=True)
class StormType:
    """One mixture component.

    probability: daily occurrence chance per season (DJF, MAM, JJA, SON).
    kind/params:
        gamma    {"shape", "scale"}
        gpd      {"threshold", "scale", "shape"}   (tail type; values >= threshold)
        gev      {"mu", "sigma", "xi"}
        constant {"value"}
    """

    name: str
    probability: tuple[float, float, float, float]
    kind: str
    params: dict

    def validate(self) -> "StormType":
        if self.kind not in _KINDS:
            raise DomainError(f"type {self.name!r}: unknown kind {self.kind!r}")
        if len(self.probability) != 4:
            raise DomainError(f"type {self.name!r}: need 4 seasonal probabilities")
        for p in self.probability:
            if not (0.0 <= p <= 1.0):
                raise DomainError(f"type {self.name!r}: probability {p} outside [0, 1]")
        p = self.params
        try:
            if self.kind == "gamma":
                ok = p["shape"] > 0 and p["scale"] > 0
            elif self.kind == "gpd":
                ok = p["scale"] > 0 and math.isfinite(p["threshold"]) \
                    and math.isfinite(p["shape"])
            elif self.kind == "gev":
                ok = p["sigma"] > 0 and math.isfinite(p["mu"]) and math.isfinite(p["xi"])
            else:
                ok = math.isfinite(p["value"])
        except KeyError as e:
            raise DomainError(f"type {self.name!r}: missing parameter {e}") from None
        if not ok:
            raise DomainError(f"type {self.name!r}: invalid {self.kind} parameters {p}")
        return self


@dataclass(frozen=True)
class MixtureSpec:
    """Storm-type mixture over a set of grid cells."""

    types: tuple[StormType, ...]
    n_cells: int = 1
    baseline: Baseline = field(default_factory=Baseline)
    jitter: float = 0.0        # relative per-cell perturbation of each type's scale
    variable: str = "precip"
    units: str = "mm/day"

    def validate(self) -> "MixtureSpec":
        if self.n_cells < 1:
            raise DomainError(f"n_cells must be >= 1, got {self.n_cells}")
        if not (0.0 <= self.jitter < 1.0):
            raise DomainError(f"jitter must be in [0, 1), got {self.jitter}")
        for t in self.types:
            t.validate()
        for s in range(4):
            total = sum(t.probability[s] for t in self.types)
            if total > 1.0 + 1e-12:
                raise DomainError(
                    f"season {Season(s).name}: occurrence probabilities sum to {total} > 1"
                )
        return self

    def active_types(self) -> tuple[StormType, ...]:
        """Types with any nonzero occurrence probability (others cannot fire)."""
        return tuple(t for t in self.types if any(p > 0 for p in t.probability))


@dataclass(frozen=True)
class TruthRecord:
    """Monte-Carlo ground truth for a 1-in-T value."""

    spec: MixtureSpec
    period_T: float
    value: float
    mc_se: float
    mc_years: int


# ---------------------------------------------------------------- counter RNG

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_JITTER_BASE = np.uint64(1) << np.uint64(40)  # counters beyond any day index


def _mix64(x: np.ndarray) -> np.ndarray:
    """splitmix64 finalizer, elementwise on uint64."""
    x = x.astype(np.uint64, copy=True)
    x ^= x >> np.uint64(30)
    x *= _M1
    x ^= x >> np.uint64(27)
    x *= _M2
    x ^= x >> np.uint64(31)
    return x


def _stream_key(seed: int, cell_index: int) -> np.uint64:
    # array ops throughout: numpy integer-scalar arithmetic warns on wraparound
    a = _mix64(np.array([seed & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64))
    b = _mix64(np.array([cell_index], dtype=np.uint64) + _GOLDEN)
    return _mix64(a + b)[0]


def _uniforms(key: np.uint64, counters: np.ndarray) -> np.ndarray:
    """Open-interval (0,1) uniforms at the given counters of the stream."""
    c = counters.astype(np.uint64)
    bits = _mix64(key + c * _GOLDEN)
    return ((bits >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


# ------------------------------------------------------------ magnitude draws

def _quantile(kind: str, params: dict, prob: np.ndarray) -> np.ndarray:
    """Inverse CDF of one storm type's magnitude distribution."""
    if kind == "gamma":
        return special.gammaincinv(params["shape"], prob) * params["scale"]
    if kind == "gpd":
        gp = GpdParams(params["threshold"], params["scale"], params["shape"])
        return np.asarray(gpd_quantile(gp, prob), dtype=float)
    if kind == "gev":
        gv = GevParams(params["mu"], params["sigma"], params["xi"])
        return np.asarray(gev_quantile(gv, prob), dtype=float)
    return np.full(np.shape(prob), params["value"], dtype=float)


def _quantile_at_power(kind: str, params: dict, log_u_over_n: np.ndarray) -> np.ndarray:
    """Inverse CDF at p = U^(1/n), given L = log(U)/n.

    Direct U**(1/n) rounds to 1.0 in double precision for large n, so each
    kind is evaluated from L with the tail expressed via expm1/log1p.
    """
    L = np.asarray(log_u_over_n, dtype=float)
    if kind == "gev":
        w = np.log(-L)  # log(-log p) with log p = L, exactly
        mu, sigma, xi = params["mu"], params["sigma"], params["xi"]
        if abs(xi) < XI_TOL:
            return mu - sigma * w
        return mu + sigma * np.expm1(-xi * w) / xi
    if kind == "constant":
        return np.full(L.shape, params["value"], dtype=float)
    q_upper = -np.expm1(L)  # 1 - p, accurate for p near 1
    if kind == "gpd":
        u0, scale, xi = params["threshold"], params["scale"], params["shape"]
        if abs(xi) < XI_TOL:
            return u0 - scale * np.log(q_upper)
        return u0 + scale * np.expm1(-xi * np.log(q_upper)) / xi
    # gamma: invert the upper incomplete gamma at q_upper
    return special.gammainccinv(params["shape"], q_upper) * params["scale"]


def _cell_type_params(spec: MixtureSpec, seed: int, cell_index: int) -> list[dict]:
    """Per-cell parameter dicts, with the scale-like entry jittered."""
    out = []
    scale_key = {"gamma": "scale", "gpd": "scale", "gev": "sigma", "constant": "value"}
    for i, t in enumerate(spec.types):
        p = dict(t.params)
        if spec.jitter > 0.0:
            key = _stream_key(seed, cell_index)
            u = float(_uniforms(key, np.array([_JITTER_BASE + np.uint64(i)]))[0])
            p[scale_key[t.kind]] *= 1.0 + spec.jitter * (2.0 * u - 1.0)
        out.append(p)
    return out


# ------------------------------------------------------------------ generation

def generate_cell(spec: MixtureSpec, n_years: int, seed: int,
                  cell_index: int = 0, start_year: int = 2001) -> DailySeries:
    """One cell's daily series on the no-leap calendar, deterministic in
    (spec, n_years, seed, cell_index)."""
    spec.validate()
    if n_years < 1:
        raise DomainError(f"n_years must be >= 1, got {n_years}")
    if not 0 <= cell_index < spec.n_cells:
        raise DomainError(f"cell_index {cell_index} outside 0..{spec.n_cells - 1}")
    n_days = 365 * n_years
    day = np.arange(n_days, dtype=np.uint64)
    key = _stream_key(seed, cell_index)
    u_type = _uniforms(key, day * np.uint64(2))
    u_mag = _uniforms(key, day * np.uint64(2) + np.uint64(1))

    season_idx = np.tile(_SEASON_IDX_365, n_years)
    doy = np.tile(np.arange(1, 366), n_years)
    values = np.asarray(spec.baseline.value(doy), dtype=float)

    params = _cell_type_params(spec, seed, cell_index)
    # cumulative probability edges per season: type i occupies [edges[s,i], edges[s,i+1])
    probs = np.array([t.probability for t in spec.types], dtype=float)  # (k, 4)
    edges = np.zeros((4, len(spec.types) + 1))
    if len(spec.types):
        edges[:, 1:] = np.cumsum(probs.T, axis=1)
    for i, t in enumerate(spec.types):
        mask = (u_type >= edges[season_idx, i]) & (u_type < edges[season_idx, i + 1])
        if np.any(mask):
            values[mask] += _quantile(t.kind, params[i], u_mag[mask])
    return DailySeries(
        cell_id=f"cell-{cell_index:03d}", values=values, start_year=start_year,
        with_leap_days=False, n_years=n_years, variable=spec.variable,
        units=spec.units,
    )


# ----------------------------------------------------------------- truth by MC

_CHUNK_YEARS_FAST = 100_000   # fixed so results never depend on memory
_CHUNK_YEARS_DAILY = 2_000


def _simulate_annual_maxima(spec: MixtureSpec, mc_years: int, seed: int) -> np.ndarray:
    """mc_years of annual maxima for the unjittered base spec."""
    rng = np.random.default_rng(seed)
    types = spec.active_types()
    if spec.baseline.is_flat:
        return _maxima_flat(spec, types, mc_years, rng)
    return _maxima_daily(spec, types, mc_years, rng)


def _maxima_flat(spec, types, mc_years, rng):
    # Group trick: conditional on the number of occurrences n of a type in a
    # season, the group maximum is Q(U^(1/n)) for a single uniform U.  The
    # year's maximum is the max over season x type groups (and the quiet-day
    # value when any day is quiet).
    k = len(types)
    out = np.empty(mc_years)
    done = 0
    while done < mc_years:
        m = min(_CHUNK_YEARS_FAST, mc_years - done)
        best = np.full(m, -np.inf)
        counts = []
        for s in range(4):
            pv = [t.probability[s] for t in types]
            pv.append(max(0.0, 1.0 - sum(pv)))  # clamp float dust; multinomial checks the sum
            counts.append(rng.multinomial(int(_DAYS_PER_SEASON[s]), pv, size=m))
        u = rng.random((m, 4, k)) if k else np.empty((m, 4, 0))
        np.clip(u, 2.0**-53, None, out=u)
        for s in range(4):
            quiet = counts[s][:, k] > 0
            best[quiet] = np.maximum(best[quiet], 0.0)
            for i, t in enumerate(types):
                n = counts[s][:, i]
                occ = n > 0
                if not np.any(occ):
                    continue
                L = np.log(u[occ, s, i]) / n[occ]
                best[occ] = np.maximum(best[occ], _quantile_at_power(t.kind, t.params, L))
        out[done:done + m] = spec.baseline.mean + best
        done += m
    return out


def _maxima_daily(spec, types, mc_years, rng):
    # day-varying baseline: simulate every day, a fixed-size chunk of years
    # at a time, and discard the dailies after taking each year's max
    k = len(types)
    probs = np.array([t.probability for t in types], dtype=float)
    edges = np.zeros((4, k + 1))
    if k:
        edges[:, 1:] = np.cumsum(probs.T, axis=1)
    base = np.asarray(spec.baseline.value(np.arange(1, 366)), dtype=float)
    lo = edges[_SEASON_IDX_365, :]          # (365, k+1)
    out = np.empty(mc_years)
    done = 0
    while done < mc_years:
        m = min(_CHUNK_YEARS_DAILY, mc_years - done)
        u_type = rng.random((m, 365))
        u_mag = rng.random((m, 365))
        np.clip(u_mag, 2.0**-53, None, out=u_mag)
        vals = np.broadcast_to(base, (m, 365)).copy()
        for i, t in enumerate(types):
            mask = (u_type >= lo[:, i]) & (u_type < lo[:, i + 1])
            if np.any(mask):
                vals[mask] += _quantile(t.kind, t.params, u_mag[mask])
        out[done:done + m] = vals.max(axis=1)
        done += m
    return out


def true_quantile(spec: MixtureSpec, T: float, mc_years: int, seed: int) -> TruthRecord:
    """Brute-force 1-in-T value: empirical quantile of mc_years simulated
    annual maxima, with the MC standard error from 10 contiguous batches."""
    spec.validate()
    if not (math.isfinite(T) and T > 1.0):
        raise DomainError(f"return period must be > 1 year, got {T}")
    if mc_years < max(T, 10.0):
        raise DomainError(
            f"mc_years={mc_years} too small for T={T:g} (and batching needs >= 10)"
        )
    maxima = _simulate_annual_maxima(spec, int(mc_years), seed)
    p = 1.0 - 1.0 / T

    def quantile(x):
        xs = np.sort(x)
        positions = np.arange(1, xs.size + 1) / (xs.size + 1.0)
        return float(np.interp(p, positions, xs))

    value = quantile(maxima)
    batches = np.array_split(maxima, 10)
    batch_q = np.array([quantile(b) for b in batches])
    mc_se = float(np.std(batch_q, ddof=1) / math.sqrt(len(batch_q)))
    return TruthRecord(spec, float(T), value, mc_se, int(mc_years))


# -------------------------------------------------------------------- presets

def preset(name: str) -> MixtureSpec:
    """Ready-made mixture specs.

    precip-mixture        frequent gamma-bulk convective type everywhere plus
                          a rare (about 2 events/year, JJA+SON only) GPD storm
                          type with a slightly heavy tail
    precip-homogeneous    every day drawn from a single GPD tail (xi = 0.1)
    temperature-bounded   seasonal sinusoid baseline plus bounded GEV noise
                          (xi = -0.2)

    Parameter values are tuned for directional behavior at desk scale, not to
    match any reanalysis product.
    """
    if name == "precip-mixture":
        return MixtureSpec(
            types=(
                StormType("convective-bulk", (0.35, 0.35, 0.35, 0.35), "gamma",
                          {"shape": 0.7, "scale": 8.0}),
                StormType("organized-storm", (0.0, 0.0, 2.0 / 92.0, 2.0 / 91.0), "gpd",
                          {"threshold": 10.0, "scale": 14.0, "shape": 0.05}),
            ),
            n_cells=100,
        )
    if name == "precip-homogeneous":
        return MixtureSpec(
            types=(
                StormType("single-tail", (1.0, 1.0, 1.0, 1.0), "gpd",
                          {"threshold": 0.0, "scale": 3.0, "shape": 0.1}),
            ),
            n_cells=100,
        )
    if name == "temperature-bounded":
        return MixtureSpec(
            types=(
                StormType("synoptic-noise", (1.0, 1.0, 1.0, 1.0), "gev",
                          {"mu": 0.0, "sigma": 2.0, "xi": -0.2}),
            ),
            n_cells=100,
            baseline=Baseline(mean=15.0, amplitude=10.0, peak_day=196),
            variable="tasmax",
            units="degC",
        )
    raise DomainError(
        f"unknown preset {name!r}; available: precip-mixture, "
        f"precip-homogeneous, temperature-bounded"
    )


# -------------------------------------------------------------- serialization

def spec_to_json(spec: MixtureSpec) -> str:
    d = asdict(spec)
    d["types"] = [asdict(t) for t in spec.types]
    return json.dumps(d, indent=2, sort_keys=True)


def spec_from_json(text: str) -> MixtureSpec:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise DomainError(f"malformed mixture spec: {e}") from None
    try:
        types = tuple(
            StormType(t["name"], tuple(t["probability"]), t["kind"], dict(t["params"]))
            for t in d["types"]
        )
        base = d.get("baseline", {})
        return MixtureSpec(
            types=types,
            n_cells=int(d.get("n_cells", 1)),
            baseline=Baseline(
                float(base.get("mean", 0.0)),
                float(base.get("amplitude", 0.0)),
                int(base.get("peak_day", 196)),
            ),
            jitter=float(d.get("jitter", 0.0)),
            variable=str(d.get("variable", "precip")),
            units=str(d.get("units", "mm/day")),
        ).validate()
    except (KeyError, TypeError, ValueError) as e:
        raise DomainError(f"malformed mixture spec: {e}") from None
