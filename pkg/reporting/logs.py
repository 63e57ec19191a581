"""Loading and validation of run-log directories.

A run directory is the unit the harness writes: one metrics CSV per seed
(header row naming the columns, one row per episode) and a manifest.json
recording the configuration, the column list, and the seed -> file map.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass

import numpy as np


class ReportingError(Exception):
    """Base class for all errors raised by this package."""


class EmptyLogDirectoryError(ReportingError):
    """A run directory holds no readable seed logs."""


class InconsistentColumnsError(ReportingError):
    """Seed CSVs within one run directory disagree on their columns."""


class MissingMetricError(ReportingError):
    """A requested metric is not a column of the run's CSVs."""


class MismatchedEnvironmentsError(ReportingError):
    """Run directories being compared come from different environments."""


@dataclass(frozen=True)
class RunLogSet:
    """All per-seed metric series of one run directory, fully parsed.

    series maps seed -> {column -> float array}; every seed has identical
    columns and the arrays within one seed share a length (one entry per
    logged episode).
    """

    directory: str
    manifest: dict
    columns: tuple[str, ...]
    seeds: tuple[int, ...]
    series: dict

    @property
    def algorithm(self) -> str:
        return str(self.manifest.get("config", {}).get("algorithm", "?"))

    @property
    def environment(self) -> str:
        return str(self.manifest.get("config", {}).get("env", "?"))

    def metric(self, name: str, seed: int) -> np.ndarray:
        if name not in self.columns:
            raise MissingMetricError(
                f"metric {name!r} not in columns of {self.directory}: "
                f"{', '.join(self.columns)}")
        return self.series[seed][name]


def _read_csv(path: str) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyLogDirectoryError(f"{path} is empty") from None
        rows = [[float(cell) for cell in row] for row in reader if row]
    return header, np.asarray(rows, dtype=np.float64)


def load_run_logs(log_dir: str) -> RunLogSet:
    """Parse one run directory; raises EmptyLogDirectoryError when it has
    no manifest or no seed logs, InconsistentColumnsError when seed CSVs
    disagree with the manifest's column list."""
    manifest_path = os.path.join(log_dir, "manifest.json")
    if not os.path.isfile(manifest_path):
        raise EmptyLogDirectoryError(f"no manifest.json in {log_dir!r}")
    with open(manifest_path) as fh:
        manifest = json.load(fh)

    files = manifest.get("files", {})
    if not files:
        raise EmptyLogDirectoryError(f"manifest in {log_dir!r} lists no seed logs")

    columns = None
    series = {}
    for seed_str in sorted(files, key=int):
        seed = int(seed_str)
        path = os.path.join(log_dir, files[seed_str])
        if not os.path.isfile(path):
            raise EmptyLogDirectoryError(f"listed log missing: {path}")
        header, data = _read_csv(path)
        if columns is None:
            columns = header
        elif header != columns:
            raise InconsistentColumnsError(
                f"{path} columns {header} differ from {columns}")
        if data.size == 0:
            raise EmptyLogDirectoryError(f"{path} has no metric rows")
        series[seed] = {col: data[:, k] for k, col in enumerate(header)}

    declared = manifest.get("columns")
    if declared is not None and list(declared) != list(columns):
        raise InconsistentColumnsError(
            f"manifest columns {declared} differ from CSV columns {columns}")
    return RunLogSet(directory=log_dir, manifest=manifest,
                     columns=tuple(columns), seeds=tuple(sorted(series)),
                     series=series)
