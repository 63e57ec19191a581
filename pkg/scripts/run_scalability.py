#!/usr/bin/env python3
"""Eight-agent pursuit under limited communication protocols.

Compares default suggestion sharing (distance-gated neighborhoods) against
random-m partner sampling and every-other-episode communication, on the same
seeds, and prints final normalized returns side by side.
"""

import argparse
import dataclasses
import sys

import numpy as np

from ssmarl.config import TopologySpec, default_config
from ssmarl.experiment import run_experiment
from ssmarl.metrics import read_metrics


def final_mean(rows: dict, column: str) -> float:
    values = rows[column]
    return float(np.mean(values[int(len(values) * 0.9):]))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--episodes", type=int, default=300)
    parser.add_argument("--seeds", type=int, nargs="+", default=[0, 1])
    parser.add_argument("--m", type=int, default=3,
                        help="partners sampled per episode for random_m")
    parser.add_argument("--period", type=int, default=2,
                        help="episodes between communication rounds")
    parser.add_argument("--out", default="runs/scalability")
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args(argv)

    base = dataclasses.replace(
        default_config("predation", "ss"),
        actor_hidden=(32, 16), critic_hidden=(32, 16),
        episodes=args.episodes, seeds=tuple(args.seeds))
    variants = {
        "default": base,
        f"random{args.m}": dataclasses.replace(
            base, topology=TopologySpec("random_m", m=args.m)),
        f"period{args.period}": dataclasses.replace(
            base, comm_period=args.period),
    }

    finals = {}
    for name, cfg in variants.items():
        out_dir = f"{args.out}/{name}"
        cfg = dataclasses.replace(cfg, out_dir=out_dir)
        print(f"== {name} -> {out_dir}")
        run_experiment(cfg, jobs=args.jobs)
        finals[name] = {
            seed: final_mean(read_metrics(f"{out_dir}/seed_{seed}.csv"),
                             "normalized_return")
            for seed in cfg.seeds
        }
        for seed, value in finals[name].items():
            print(f"seed {seed}: final return {value:.3f}")

    reference = finals["default"]
    print("\nrelative gap to default protocol:")
    for name, by_seed in finals.items():
        if name == "default":
            continue
        for seed, value in by_seed.items():
            rel = abs(value - reference[seed]) / abs(reference[seed])
            print(f"{name} seed {seed}: {rel:.1%}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
