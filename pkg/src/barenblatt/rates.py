"""Decay-rate extraction from solver trajectories."""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .profiles import bump_data, log_tail_data
from .solver import SolverConfig, Trajectory, solve
from .special_functions import ModelParams

DEFAULT_WINDOW = (1e2, 1e4)
MIN_FIT_POINTS = 8
SLOPE_TOL = 0.10
MAX_BAND_RATIO = 20.0


@dataclass(frozen=True)
class DecaySeries:
    times: np.ndarray
    values: np.ndarray
    kind: str
    provenance: str = ""

    def __post_init__(self):
        if self.times.size == 0:
            raise ValueError("empty series")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    def window(self, window) -> tuple:
        lo, hi = window
        sel = (self.times >= lo * (1 - 1e-12)) & (self.times <= hi * (1 + 1e-12))
        if not sel.any():
            raise ValueError(f"no samples in window [{lo:g}, {hi:g}]")
        return self.times[sel], self.values[sel]


def extract_series(traj: Trajectory, kind: str = "sup") -> DecaySeries:
    """sup_r phi or phi at the origin, per output time."""
    if traj.times.size == 0:
        raise ValueError("trajectory has no output times")
    if kind == "sup":
        vals = traj.sup()
    elif kind == "origin":
        vals = traj.origin()
    else:
        raise ValueError(f"unknown series kind {kind!r}")
    return DecaySeries(traj.times.copy(), vals, kind, traj.config_hash)


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    window: tuple
    stderr: float
    max_log_residual: float
    points: int


def fit_rate(series: DecaySeries, window=DEFAULT_WINDOW) -> RateFit:
    """Least-squares slope of ln s against ln(t + 1) on ``window``."""
    t, s = series.window(window)
    if t.size < MIN_FIT_POINTS:
        raise ValueError(f"degenerate window: {t.size} points, need {MIN_FIT_POINTS}")
    if np.any(s <= 0):
        raise ValueError("series must be positive on the fit window")
    x = np.log(t + 1)
    y = np.log(s)
    fit = stats.linregress(x, y)
    resid = y - (fit.intercept + fit.slope * x)
    return RateFit(float(fit.slope), float(fit.intercept), (float(t[0]), float(t[-1])),
                   float(fit.stderr), float(np.max(np.abs(resid))), int(t.size))


@dataclass(frozen=True)
class BandCheck:
    """Range of (t+1)^p s(t) on a window.

    ``decay_factor`` is the start-to-end ratio of the weighted series; values
    above one mean it shrinks across the window.
    """

    exponent: float
    lo: float
    hi: float
    decay_factor: float
    max_ratio: float = MAX_BAND_RATIO

    @property
    def ratio(self) -> float:
        return self.hi / self.lo if self.lo > 0 else math.inf

    @property
    def passed(self) -> bool:
        return self.lo > 0 and self.ratio <= self.max_ratio


def band_check(series: DecaySeries, exponent: float, window=DEFAULT_WINDOW,
               max_ratio: float = MAX_BAND_RATIO) -> BandCheck:
    t, s = series.window(window)
    w = (t + 1) ** exponent * s
    decay = float(w[0] / w[-1]) if w[-1] > 0 else math.inf
    return BandCheck(exponent, float(w.min()), float(w.max()), decay, max_ratio)


# --------------------------------------------------------------------------
# Theorem suite
# --------------------------------------------------------------------------

FAMILIES = ("log-tail", "bump", "const-tail")


@dataclass(frozen=True)
class RowSpec:
    family: str
    gamma: float
    n: int
    D: float
    B: float
    window: tuple
    n_out: int
    n_xi: int


@dataclass
class SuiteRow:
    family: str
    gamma: float
    exponent: float
    p_sup: float
    p_origin: float
    band_lo: float
    band_hi: float
    slope_ok: bool
    band_ok: bool
    decays: bool
    exploratory: bool
    error: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        if self.error:
            return False
        if self.family == "log-tail" and not self.exploratory:
            return self.band_ok and self.slope_ok
        return self.band_ok

    def as_record(self) -> dict:
        return {"gamma": self.gamma, "p_sup": self.p_sup, "p_origin": self.p_origin,
                "band_lo": self.band_lo, "band_hi": self.band_hi,
                "pass": int(self.passed)}


def family_data(family: str, gamma: float, B: float = 1.0):
    if family == "log-tail":
        return log_tail_data(B, gamma)
    if family == "const-tail":
        return log_tail_data(B, 0.0)
    if family == "bump":
        return bump_data(B)
    raise ValueError(f"unknown family {family!r}")


def suite_config(window, n_out: int, n_xi: int) -> SolverConfig:
    ts = tuple(np.geomspace(window[0], window[1], n_out))
    return SolverConfig(t_end=window[1], n_xi=n_xi, output_times=ts)


def analyse(traj: Trajectory, family: str, gamma: float, window=DEFAULT_WINDOW) -> SuiteRow:
    """Fit both series and run the band check appropriate to the family."""
    sup = extract_series(traj, "sup")
    origin = extract_series(traj, "origin")
    p_sup = fit_rate(sup, window).slope
    p_org = fit_rate(origin, window).slope
    exploratory = family == "log-tail" and gamma >= 1
    if family == "log-tail" and not exploratory:
        exponent = gamma / 2
        band = band_check(origin, exponent, window)
        slope_ok = abs(p_org + exponent) <= SLOPE_TOL
    else:
        # only the universal t^{-1/2} ceiling is asserted
        exponent = 0.5
        band = band_check(sup, exponent, window)
        band = BandCheck(exponent, band.lo, band.hi, band.decay_factor, math.inf) \
            if family != "bump" else band
        slope_ok = True
    _, s = origin.window(window)
    decays = bool(s[-1] < 0.99 * s[0])
    return SuiteRow(family, gamma, exponent, p_sup, p_org, band.lo, band.hi,
                    slope_ok, band.passed, decays, exploratory)


def run_row(spec: RowSpec) -> SuiteRow:
    params = ModelParams(spec.n, spec.D, spec.gamma if spec.gamma > 0 else 0.5)
    try:
        data = family_data(spec.family, spec.gamma, spec.B)
        traj = solve(data, suite_config(spec.window, spec.n_out, spec.n_xi), params)
    except Exception as exc:  # rows fail independently
        nan = math.nan
        return SuiteRow(spec.family, spec.gamma, nan, nan, nan, nan, nan, False, False,
                        False, spec.gamma >= 1, error=f"{type(exc).__name__}: {exc}")
    return analyse(traj, spec.family, spec.gamma, spec.window)


def worker_count() -> int:
    env = os.environ.get("BARENBLATT_THREADS")
    avail = os.cpu_count() or 1
    if env:
        try:
            return max(1, min(int(env), avail))
        except ValueError:
            pass
    return avail


def theorem_suite(n: int = 5, D: float = 1.0, family: str = "log-tail",
                  gammas=(0.25, 0.5, 0.75), *, B: float = 1.0, window=DEFAULT_WINDOW,
                  n_out: int = 16, n_xi: int = 2048, workers: int | None = None) -> list:
    """One solver run per gamma; rows come back in sweep order."""
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    specs = [RowSpec(family, float(g), n, D, B, tuple(window), n_out, n_xi) for g in gammas]
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(specs) == 1:
        return [run_row(s) for s in specs]
    with ProcessPoolExecutor(max_workers=min(workers, len(specs))) as pool:
        return list(pool.map(run_row, specs))
