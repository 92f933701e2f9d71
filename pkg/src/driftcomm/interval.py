"""Symbol-interval search for the one-symbol-ISI and no-ISI operating modes."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelParams, hitting_cdf
from .modulation import Mode


@dataclass(frozen=True)
class IsiCriteria:
    """Current-interval hit threshold ``A`` and tail ratio ``epsilon``."""

    A: float = 0.8
    epsilon: float = 0.001

    def __post_init__(self):
        if not 0.0 < self.A < 1.0:
            raise ValueError("A must lie strictly between 0 and 1")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")


@dataclass(frozen=True)
class SearchGrid:
    """Log-spaced scan from ``t_min`` to ``t_max`` with relative step ``resolution``,
    followed by bisection down to ``rtol``."""

    t_min: float = 1e-4
    t_max: float = 1e6
    resolution: float = 1e-2
    rtol: float = 1e-9

    def __post_init__(self):
        if not (0 < self.t_min < self.t_max) or not math.isfinite(self.t_max):
            raise ValueError("search grid needs 0 < t_min < t_max < inf")
        if not self.resolution > 0 or not self.rtol > 0:
            raise ValueError("resolution and rtol must be positive")

    def points(self) -> np.ndarray:
        count = int(math.ceil(math.log(self.t_max / self.t_min) / math.log1p(self.resolution))) + 1
        return np.geomspace(self.t_min, self.t_max, count)


@dataclass(frozen=True)
class IntervalResult:
    Ts: float
    mode: Mode
    p_hit_current: float
    p_residual: float
    criteria_met: bool


def _check_ts(Ts) -> None:
    if np.any(np.asarray(Ts) <= 0) or np.any(np.isnan(Ts)):
        raise ValueError("symbol interval must be positive")


def interval_probabilities(Ts: float, ch: ChannelParams) -> tuple[float, float]:
    """Per-molecule probabilities of arriving in the current interval and, for a
    molecule released one interval earlier, of arriving in this one."""
    _check_ts(Ts)
    if math.isinf(Ts):
        return float(hitting_cdf(math.inf, ch)), 0.0
    f1, f2 = hitting_cdf(np.array([Ts, 2.0 * Ts]), ch)
    return float(f1), float(max(f2 - f1, 0.0))


def _isi_ok(ts: np.ndarray, ch: ChannelParams, crit: IsiCriteria) -> np.ndarray:
    f1 = hitting_cdf(ts, ch)
    f2 = hitting_cdf(2.0 * ts, ch)
    f3 = hitting_cdf(3.0 * ts, ch)
    return (f1 > crit.A) & (f3 - f2 < crit.epsilon * f1)


def isi_conditions_hold(Ts: float, ch: ChannelParams, crit: IsiCriteria = IsiCriteria()) -> bool:
    _check_ts(Ts)
    return bool(_isi_ok(np.asarray(float(Ts)), ch, crit))


def _first_true(pred, grid: SearchGrid) -> float:
    """Smallest scan point where ``pred`` holds, pulled back by bisection toward the
    preceding (failing) point.  inf if the scan never succeeds."""
    ts = grid.points()
    ok = pred(ts)
    hits = np.flatnonzero(ok)
    if hits.size == 0:
        return math.inf
    i = int(hits[0])
    if i == 0:
        return float(ts[0])
    lo, hi = float(ts[i - 1]), float(ts[i])
    while hi - lo > grid.rtol * hi:
        mid = 0.5 * (lo + hi)
        if pred(np.asarray(mid)):
            hi = mid
        else:
            lo = mid
    return hi


def _result(Ts: float, mode: Mode, ch: ChannelParams, met: bool) -> IntervalResult:
    if math.isinf(Ts):
        return IntervalResult(math.inf, mode, float(hitting_cdf(math.inf, ch)), 0.0, met)
    p_cur, p_res = interval_probabilities(Ts, ch)
    return IntervalResult(Ts, mode, p_cur, p_res, met)


def optimize_interval_one_isi(ch: ChannelParams, crit: IsiCriteria = IsiCriteria(),
                              grid: SearchGrid = SearchGrid()) -> IntervalResult:
    """Shortest interval for which one-symbol ISI is tolerable."""
    Ts = _first_true(lambda t: _isi_ok(t, ch, crit), grid)
    return _result(Ts, Mode.ONE_ISI, ch, met=math.isfinite(Ts))


def optimize_interval_no_isi(ch: ChannelParams, delta: float = 1e-6,
                             grid: SearchGrid = SearchGrid()) -> IntervalResult:
    """Shortest interval after which at most ``delta`` of the molecules are still in flight.

    Without drift a fraction of molecules is outstanding on any finite horizon,
    so the result is the infinite sentinel.
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie strictly between 0 and 1")
    if not ch.has_drift:
        return _result(math.inf, Mode.NO_ISI, ch, met=False)
    Ts = _first_true(lambda t: 1.0 - hitting_cdf(t, ch) <= delta, grid)
    return _result(Ts, Mode.NO_ISI, ch, met=math.isfinite(Ts))
