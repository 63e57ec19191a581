"""Offline figure rendering for training-run logs.

Consumes run directories written by the experiment harness (per-seed metric
CSVs plus a manifest.json) and renders two figure shapes: training curves
(per-episode mean across seeds with a min-max band, moving-average smoothed)
and final bars (mean of the last episode's metric across seeds with min-max
whiskers). Every statistic shown is recomputable from the CSVs alone.

Run as a script::

    python3 -m reporting --logs RUN_DIR [RUN_DIR ...] --metric NAME --out FILE
"""

from .logs import (EmptyLogDirectoryError, InconsistentColumnsError,
                   MismatchedEnvironmentsError, MissingMetricError,
                   ReportingError, RunLogSet, load_run_logs)
from .stats import (CurveStats, curve_stats, final_values,
                    trailing_moving_average)
from .render import render_curves, render_final_bars

__all__ = [
    "CurveStats",
    "EmptyLogDirectoryError",
    "InconsistentColumnsError",
    "MismatchedEnvironmentsError",
    "MissingMetricError",
    "ReportingError",
    "RunLogSet",
    "curve_stats",
    "final_values",
    "load_run_logs",
    "render_curves",
    "render_final_bars",
    "trailing_moving_average",
]
