#!/usr/bin/env python3
"""Smoke-run every algorithm on every environment and tabulate final returns.

Short budgets by default: this exercises the full training loop of each
algorithm-environment pair and reports the final normalized return per seed.
The intrinsic-reward baseline declines the navigation task (no free-rider
structure to reward) and is reported as "unsupported".
"""

import argparse
import dataclasses
import sys

import numpy as np

from ssmarl.baselines import UnsupportedEnvironmentError
from ssmarl.config import default_config
from ssmarl.experiment import run_experiment
from ssmarl.metrics import read_metrics

ALGORITHMS = ("ss", "vps", "vs", "ps", "cl", "imr", "ippo")
ENVIRONMENTS = ("cleanup", "harvest", "predation", "navigation")


def final_mean(rows: dict, column: str) -> float:
    values = rows[column]
    return float(np.mean(values[int(len(values) * 0.9):]))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--episodes", type=int, default=200)
    parser.add_argument("--seeds", type=int, nargs="+", default=[0, 1])
    parser.add_argument("--out", default="runs/grid")
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args(argv)

    width = max(len(a) for a in ALGORITHMS)
    for env_kind in ENVIRONMENTS:
        print(f"== {env_kind}")
        for algorithm in ALGORITHMS:
            cfg = dataclasses.replace(
                default_config(env_kind, algorithm),
                actor_hidden=(16, 16), critic_hidden=(16, 16),
                episodes=args.episodes, seeds=tuple(args.seeds),
                out_dir=f"{args.out}/{env_kind}/{algorithm}")
            try:
                run_experiment(cfg, jobs=args.jobs)
            except UnsupportedEnvironmentError as exc:
                print(f"{algorithm:>{width}}: unsupported ({exc})")
                continue
            finals = [
                final_mean(read_metrics(f"{cfg.out_dir}/seed_{s}.csv"),
                           "normalized_return")
                for s in cfg.seeds
            ]
            cells = " ".join(f"{v:8.3f}" for v in finals)
            print(f"{algorithm:>{width}}: {cells}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
