"""Pairwise dynamic workload (PDW) and a simplified dynamic-density counter.

PDW is (1/d) * (1 - d_dot / d_dot_max): it grows as a pair closes in and
when the closure is fast. Dynamic density only counts speed changes and
unsafe proximities per time window; it is a reduced stand-in used for
comparison, not a full implementation of the original sector metric.
"""
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class PairKinematics:
    d: float
    d_dot: float
    d_dot_max: float

    def __post_init__(self):
        if not (math.isfinite(self.d) and self.d > 0):
            raise DomainError(f"separation d must be > 0 (got {self.d!r})")
        if not (math.isfinite(self.d_dot_max) and self.d_dot_max > 0):
            raise DomainError(f"d_dot_max must be > 0 (got {self.d_dot_max!r})")
        if not abs(self.d_dot) < self.d_dot_max:
            raise DomainError(f"|d_dot| = {abs(self.d_dot)!r} must be below "
                              f"d_dot_max = {self.d_dot_max!r}")


def pdw(k):
    return (1.0 - k.d_dot / k.d_dot_max) / k.d


def pdw_grad_d(k):
    return -(1.0 - k.d_dot / k.d_dot_max) / k.d**2


def pdw_grad_ddot(k):
    return -1.0 / (k.d * k.d_dot_max)


def pdw_array(d, d_dot, d_dot_max):
    """Vectorised PDW; NaN where the inputs leave the admissible domain."""
    d = np.asarray(d, dtype=float)
    d_dot = np.asarray(d_dot, dtype=float)
    ok = (d > 0) & (np.abs(d_dot) < d_dot_max)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (1.0 - d_dot / d_dot_max) / d
    return np.where(ok, out, np.nan)


def min_max_normalize(series):
    """Affine map onto [0, 1]. A constant series maps to all zeros."""
    s = np.asarray(series, dtype=float)
    lo, hi = np.min(s), np.max(s)
    if hi == lo:
        return np.zeros_like(s)
    return (s - lo) / (hi - lo)


@dataclass(frozen=True)
class DensitySeries:
    window_start: np.ndarray
    counts: np.ndarray
    window: float

    def on_grid(self, t):
        """Piecewise-constant expansion onto sample times ``t``."""
        idx = np.floor((np.asarray(t) - self.window_start[0]) / self.window).astype(int)
        idx = np.clip(idx, 0, len(self.counts) - 1)
        return self.counts[idx]


def dynamic_density(trace, window=120.0, speed_change_threshold=1.0, unsafe_distance=1000.0):
    """Per-window count of speed-changing aircraft plus pairs in unsafe proximity.

    An aircraft counts in a window when its airspeed range over the window,
    including the sample just before it, exceeds ``speed_change_threshold``.
    """
    t = np.asarray(trace.t)
    if len(t) < 2:
        raise DomainError("dynamic density needs a trace with at least two samples")
    if not window > 0:
        raise DomainError(f"window must be > 0 (got {window!r})")
    v = np.asarray(trace.v)
    d = np.asarray(trace.d)
    n_win = int(math.ceil((t[-1] - t[0]) / window + 1e-12))
    n_win = max(n_win, 1)
    idx = np.floor((t - t[0]) / window + 1e-9).astype(int)
    idx = np.minimum(idx, n_win - 1)
    counts = np.zeros(n_win, dtype=int)
    for w in range(n_win):
        rows = np.flatnonzero(idx == w)
        if rows.size == 0:
            continue
        lo = max(rows[0] - 1, 0)
        seg = v[lo:rows[-1] + 1]
        changed = (seg.max(axis=0) - seg.min(axis=0)) > speed_change_threshold
        dseg = d[rows]
        with np.errstate(invalid="ignore"):
            close = np.any(dseg < unsafe_distance, axis=0)
        counts[w] = int(changed.sum() + close.sum())
    starts = t[0] + window * np.arange(n_win)
    return DensitySeries(starts, counts, float(window))


@dataclass(frozen=True)
class MetricTable:
    t: np.ndarray
    pdw_raw: np.ndarray
    pdw_norm: np.ndarray
    dd_raw: np.ndarray
    dd_norm: np.ndarray

    columns = ("t", "pdw_raw", "pdw_norm", "dd_raw", "dd_norm")

    def rows(self):
        return zip(self.t, self.pdw_raw, self.pdw_norm, self.dd_raw, self.dd_norm)


def metric_table(trace, d_dot_max, pair=0, window=120.0, speed_change_threshold=1.0,
                 unsafe_distance=1000.0):
    """PDW and dynamic density of one pair on the trace time grid, raw and normalised."""
    raw = pdw_array(trace.d[:, pair], trace.ddot[:, pair], d_dot_max)
    if np.any(~np.isfinite(raw)):
        bad = int(np.flatnonzero(~np.isfinite(raw))[0])
        raise DomainError(f"PDW undefined at t={trace.t[bad]:.6g} s: need d > 0 and "
                          f"|d_dot| < d_dot_max ({d_dot_max} m/s)")
    dd = dynamic_density(trace, window, speed_change_threshold, unsafe_distance)
    dd_raw = dd.on_grid(trace.t).astype(float)
    return MetricTable(np.asarray(trace.t), raw, min_max_normalize(raw), dd_raw,
                       min_max_normalize(dd_raw))
