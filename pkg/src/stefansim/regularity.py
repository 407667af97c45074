"""Empirical Hölder-exponent estimation from sampled paths.

The q-th order structure function S_q(l) = mean |v(. + l) - v(.)|^q scales
like l^(qH) for an H-Hölder path, so the exponent is read off as the
least-squares slope of log S_q against log l over dyadic lags, divided
by q.  Increments are pooled over an interior window that drops 10%
margins along each axis, matching the local nature of the regularity
statements being checked (1/4- in time, 1/2- in space for the profiles,
1/4- for the boundary derivative).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InsufficientData
from .grids import Field

TIME = "time"
SPACE = "space"

#: fraction trimmed from each end of every axis before pooling increments
WINDOW_MARGIN = 0.1

DEFAULT_LAG_RANGE = (2, 64)

#: fewest pooled increments tolerated at the largest lag
MIN_INCREMENTS = 100


@dataclass
class HolderEstimate:
    """Fitted scaling exponent with its regression standard error."""

    exponent: float
    stderr: float
    lag_range: tuple
    q: float
    axis: str
    n_paths: int = 1
    degenerate: bool = False

    def to_json_dict(self) -> dict:
        return {
            "axis": self.axis,
            "q": float(self.q),
            "exponent": float(self.exponent),
            "stderr": float(self.stderr),
            "n_paths": int(self.n_paths),
        }


def _as_values(path) -> np.ndarray:
    if isinstance(path, Field):
        return path.values
    arr = np.asarray(path, dtype=float)
    if arr.ndim == 1:
        return arr[:, None]
    if arr.ndim == 2:
        return arr
    raise ValueError("path must be a Field, a 1-D series or a 2-D array")


def _interior(values: np.ndarray) -> np.ndarray:
    out = values
    for axis in range(2):
        n = out.shape[axis]
        lo = int(np.floor(WINDOW_MARGIN * n))
        hi = n - lo
        if axis == 0:
            out = out[lo:hi, :]
        else:
            # never trim away a degenerate second axis (1-D series)
            if n > 1:
                out = out[:, lo:hi]
    return out


def structure_function(path, axis: str, lags, q: float):
    """Mean q-th absolute increment per lag, pooled over the interior window.

    Returns a list of (lag, S_q(lag)) pairs; lags are in grid units.
    """
    if q not in (1, 2):
        raise ValueError(f"supported moment orders are q in {{1, 2}}, got {q}")
    values = _interior(_as_values(path))
    ax = 0 if axis == TIME else 1
    n = values.shape[ax]
    out = []
    for lag in lags:
        lag = int(lag)
        if lag < 1 or lag >= n:
            raise InsufficientData(f"lag {lag} outside series of length {n}")
        if ax == 0:
            diffs = values[lag:, :] - values[:-lag, :]
        else:
            diffs = values[:, lag:] - values[:, :-lag]
        if diffs.size < MIN_INCREMENTS:
            raise InsufficientData(
                f"only {diffs.size} increments at lag {lag}; need {MIN_INCREMENTS}"
            )
        out.append((lag, float(np.mean(np.abs(diffs) ** q))))
    return out


def dyadic_lags(lag_range) -> list:
    lo, hi = int(lag_range[0]), int(lag_range[1])
    lags = []
    lag = 1
    while lag <= hi:
        if lag >= lo:
            lags.append(lag)
        lag *= 2
    if len(lags) < 4:
        raise ValueError(f"lag range {lag_range} spans {len(lags)} dyadic lags; need >= 4")
    return lags


def _fit_loglog(lags, s_values, q, axis, lag_range, n_paths) -> HolderEstimate:
    s = np.asarray(s_values, dtype=float)
    if np.any(s <= 0.0):
        return HolderEstimate(exponent=float("nan"), stderr=float("nan"),
                              lag_range=tuple(lag_range), q=q, axis=axis,
                              n_paths=n_paths, degenerate=True)
    lx = np.log(np.asarray(lags, dtype=float))
    ly = np.log(s)
    n = len(lx)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + intercept)
    denom = np.sum((lx - lx.mean()) ** 2)
    if n > 2:
        slope_se = np.sqrt(np.sum(resid**2) / (n - 2) / denom)
    else:
        slope_se = 0.0
    return HolderEstimate(exponent=float(slope / q), stderr=float(slope_se / q),
                          lag_range=tuple(lag_range), q=q, axis=axis,
                          n_paths=n_paths)


def estimate_holder(path, axis: str, q: float = 2,
                    lag_range=DEFAULT_LAG_RANGE) -> HolderEstimate:
    """Least-squares scaling exponent of one path along an axis."""
    lags = dyadic_lags(lag_range)
    pairs = structure_function(path, axis, lags, q)
    return _fit_loglog([p[0] for p in pairs], [p[1] for p in pairs],
                       q, axis, lag_range, n_paths=1)


def estimate_holder_ensemble(paths, axis: str, q: float = 2,
                             lag_range=DEFAULT_LAG_RANGE) -> HolderEstimate:
    """Pool structure functions across ensemble members, then fit once."""
    paths = list(paths)
    if not paths:
        raise InsufficientData("empty ensemble")
    lags = dyadic_lags(lag_range)
    acc = np.zeros(len(lags))
    for path in paths:
        pairs = structure_function(path, axis, lags, q)
        acc += np.array([p[1] for p in pairs])
    acc /= len(paths)
    return _fit_loglog(lags, acc, q, axis, lag_range, n_paths=len(paths))


def boundary_holder(p_prime_series, q: float = 2,
                    lag_range=DEFAULT_LAG_RANGE) -> HolderEstimate:
    """Exponent of the boundary-derivative series p'(t)."""
    series = np.asarray(p_prime_series, dtype=float)
    if series.ndim != 1:
        raise ValueError("boundary series must be one-dimensional")
    return estimate_holder(series, TIME, q=q, lag_range=lag_range)


def boundary_holder_ensemble(series_list, q: float = 2,
                             lag_range=DEFAULT_LAG_RANGE) -> HolderEstimate:
    return estimate_holder_ensemble([np.asarray(s, dtype=float) for s in series_list],
                                    TIME, q=q, lag_range=lag_range)
