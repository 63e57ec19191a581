"""Command-line entry point.

    python3 -m reporting --logs RUN_DIR [RUN_DIR ...] --metric NAME --out FILE

renders a training-curve figure by default; pass --kind bars for the
final-bar figure (one bar per run directory, labeled by the algorithm the
manifest records).
"""

from __future__ import annotations

import argparse
import sys

from .logs import ReportingError, load_run_logs
from .render import render_curves, render_final_bars
from .stats import DEFAULT_SMOOTHING_WINDOW


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="python3 -m reporting",
        description="Render training-curve or final-bar figures from run logs.")
    parser.add_argument("--logs", nargs="+", required=True, metavar="DIR",
                        help="one or more run directories (seed CSVs + manifest)")
    parser.add_argument("--metric", required=True,
                        help="metric column to plot, e.g. normalized_return")
    parser.add_argument("--out", required=True,
                        help="image file to write (e.g. curves.png)")
    parser.add_argument("--kind", choices=("curves", "bars"), default="curves",
                        help="figure shape (default: curves)")
    parser.add_argument("--window", type=int, default=DEFAULT_SMOOTHING_WINDOW,
                        help="trailing moving-average window for curves "
                             f"(default: {DEFAULT_SMOOTHING_WINDOW})")
    return parser


def _bar_labels(log_dirs) -> dict:
    """Label each directory by its manifest's algorithm, deduplicating."""
    labeled = {}
    for d in log_dirs:
        base = load_run_logs(d).algorithm
        label, k = base, 2
        while label in labeled:
            label = f"{base}#{k}"
            k += 1
        labeled[label] = d
    return labeled


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.kind == "bars":
            path = render_final_bars(_bar_labels(args.logs), args.metric,
                                     out_path=args.out)
        else:
            path = render_curves(args.logs, args.metric,
                                 smoothing_window=args.window,
                                 out_path=args.out)
    except ReportingError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
