"""Figure rendering: training curves and final bars.

Rendering reads the logs, computes stats via the stats module, and writes a
single image file. It never writes into the log directories, and rerunning
with the same inputs reproduces the same image.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .logs import (MismatchedEnvironmentsError, RunLogSet, load_run_logs)
from .stats import DEFAULT_SMOOTHING_WINDOW, curve_stats, final_values

_BAND_ALPHA = 0.25


def _as_log_sets(log_dirs) -> list[RunLogSet]:
    if isinstance(log_dirs, (str, os.PathLike)):
        log_dirs = [log_dirs]
    return [load_run_logs(str(d)) for d in log_dirs]


def _check_same_environment(log_sets) -> str:
    envs = {ls.environment for ls in log_sets}
    if len(envs) > 1:
        raise MismatchedEnvironmentsError(
            "runs come from different environments: "
            + ", ".join(f"{ls.directory}={ls.environment}" for ls in log_sets))
    return next(iter(envs))


def render_curves(log_dir, metric_name: str,
                  smoothing_window: int = DEFAULT_SMOOTHING_WINDOW,
                  out_path: str | None = None) -> str:
    """Render the training-curve figure for one or more run directories.

    Each run contributes a smoothed cross-seed mean line plus a min-max band
    over its seeds; with a single seed the band collapses onto the line.
    Returns the written image path.
    """
    log_sets = _as_log_sets(log_dir)
    environment = _check_same_environment(log_sets)
    if out_path is None:
        out_path = f"{metric_name}_curves.png"

    fig, ax = plt.subplots(figsize=(7.0, 4.2))
    for ls in log_sets:
        stats = curve_stats(ls, metric_name, smoothing_window)
        line, = ax.plot(stats.episodes, stats.mean,
                        label=f"{ls.algorithm} ({len(ls.seeds)} seeds)")
        ax.fill_between(stats.episodes, stats.lo, stats.hi,
                        color=line.get_color(), alpha=_BAND_ALPHA,
                        linewidth=0)
    ax.set_xlabel("episode")
    ax.set_ylabel(metric_name)
    ax.set_title(f"{environment}: {metric_name} "
                 f"(window {smoothing_window} trailing mean, min-max band)")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="best")
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
    return out_path


def render_final_bars(log_dirs_by_algorithm, metric_name: str = "normalized_return",
                      out_path: str | None = None) -> str:
    """Render the final-bar figure: one bar per labeled run directory.

    Bar height is the mean of the metric's last-episode value across seeds;
    whiskers span the min-max range over seeds. All runs must come from the
    same environment. Returns the written image path.
    """
    labels = list(log_dirs_by_algorithm)
    log_sets = _as_log_sets([log_dirs_by_algorithm[k] for k in labels])
    environment = _check_same_environment(log_sets)
    if out_path is None:
        out_path = f"{metric_name}_final_bars.png"

    means, lower, upper = [], [], []
    for ls in log_sets:
        finals = final_values(ls, metric_name)
        m = float(finals.mean())
        means.append(m)
        lower.append(m - float(finals.min()))
        upper.append(float(finals.max()) - m)

    fig, ax = plt.subplots(figsize=(max(4.0, 1.4 * len(labels) + 2.0), 4.2))
    x = range(len(labels))
    ax.bar(x, means, yerr=[lower, upper], capsize=6,
           color="tab:blue", alpha=0.85)
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels)
    ax.set_ylabel(f"final {metric_name}")
    ax.set_title(f"{environment}: final {metric_name} "
                 "(mean over seeds, min-max whiskers)")
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)
    return out_path
