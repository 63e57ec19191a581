"""Statistics behind the figures: smoothing, cross-seed aggregation.

Everything here is a pure function of the parsed CSV columns, so any number
shown in a figure can be recomputed directly from the logs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .logs import RunLogSet

DEFAULT_SMOOTHING_WINDOW = 50


def trailing_moving_average(values, window: int = DEFAULT_SMOOTHING_WINDOW) -> np.ndarray:
    """Mean of the trailing `window` entries at each index.

    Indices before a full window average everything seen so far, so the
    output has the input's length and starts at the raw first value.
    """
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"expected a 1-d series, got shape {v.shape}")
    out = np.empty_like(v)
    warm = min(window - 1, len(v))
    for t in range(warm):
        out[t] = v[: t + 1].mean()
    if len(v) >= window:
        windows = np.lib.stride_tricks.sliding_window_view(v, window)
        out[window - 1:] = windows.mean(axis=1)
    return out


@dataclass(frozen=True)
class CurveStats:
    """Smoothed per-seed curves and their cross-seed envelope."""

    episodes: np.ndarray      # x axis, shape (T,)
    per_seed: np.ndarray      # smoothed series, shape (n_seeds, T)
    mean: np.ndarray          # cross-seed mean, shape (T,)
    lo: np.ndarray            # cross-seed minimum, shape (T,)
    hi: np.ndarray            # cross-seed maximum, shape (T,)


def curve_stats(logs: RunLogSet, metric_name: str,
                smoothing_window: int = DEFAULT_SMOOTHING_WINDOW) -> CurveStats:
    """Smooth each seed's series, then aggregate pointwise across seeds.

    The band [lo, hi] is the pointwise min/max of the smoothed per-seed
    curves, so it encloses every one of them by construction.
    """
    per_seed = np.stack([
        trailing_moving_average(logs.metric(metric_name, seed), smoothing_window)
        for seed in logs.seeds])
    if "episode" in logs.columns:
        episodes = logs.series[logs.seeds[0]]["episode"]
    else:
        episodes = np.arange(per_seed.shape[1], dtype=np.float64)
    return CurveStats(episodes=episodes, per_seed=per_seed,
                      mean=per_seed.mean(axis=0),
                      lo=per_seed.min(axis=0),
                      hi=per_seed.max(axis=0))


def final_values(logs: RunLogSet, metric_name: str) -> np.ndarray:
    """Last-episode raw value of the metric, one entry per seed (seed order)."""
    return np.asarray([logs.metric(metric_name, seed)[-1] for seed in logs.seeds])
