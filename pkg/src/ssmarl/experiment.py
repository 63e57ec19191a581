"""Run orchestration: config -> trainers -> per-seed metric logs.

A run directory holds one metrics CSV per seed plus a manifest.json
echoing the full configuration, the package version, and wall-clock
timings. Seeds are independent end to end (fresh env, fresh nets, fresh
generators derived only from the seed), so they can execute in any order
or in parallel worker processes and still produce byte-identical CSVs.
"""

from __future__ import annotations

import json
import os
import time
from concurrent.futures import ProcessPoolExecutor

from . import __version__
from .baselines import (CentralCriticTrainer, IndependentTrainer,
                        IntrinsicRewardTrainer, PolicySharingTrainer,
                        ValueParamSharingTrainer, ValueSharingTrainer)
from .config import ExperimentConfig, from_dict, to_dict
from .envs import make_env
from .metrics import MetricWriter, episode_metrics, metric_columns
from .suggestion_sharing import SuggestionSharingTrainer
from .topology import CommSchedule, NeighborProtocol

TRAINER_CLASSES = {
    "ss": SuggestionSharingTrainer,
    "ippo": IndependentTrainer,
    "imr": IntrinsicRewardTrainer,
    "vps": ValueParamSharingTrainer,
    "vs": ValueSharingTrainer,
    "cl": CentralCriticTrainer,
    "ps": PolicySharingTrainer,
}


def build_env(config: ExperimentConfig):
    return make_env(config.env, **config.env_params)


def build_trainer(config: ExperimentConfig, env, seed: int):
    protocol = NeighborProtocol(config.topology.protocol,
                                radius=config.topology.radius,
                                m=config.topology.m)
    schedule = CommSchedule(period=config.comm_period)
    cls = TRAINER_CLASSES[config.algorithm]
    return cls(env, config.hyper, protocol, schedule,
               tuple(config.actor_hidden), tuple(config.critic_hidden), seed)


def seed_log_name(seed: int) -> str:
    return f"seed_{seed}.csv"


def run_seed(config: ExperimentConfig, seed: int, out_dir) -> str:
    """Train one seed to completion; returns the metrics CSV path."""
    env = build_env(config)
    trainer = build_trainer(config, env, seed)
    columns = metric_columns(env.kind, env.n_agents, config.algorithm)
    step_size = getattr(env.config, "step_size", 1.0)
    policy_set = trainer.policies if config.algorithm == "ss" else None
    path = os.path.join(out_dir, seed_log_name(seed))
    with MetricWriter(path, columns) as writer:
        for ep in range(config.episodes):
            batch = trainer.run_episode(ep)
            row = episode_metrics(env.kind, config.algorithm, batch, ep,
                                  policy_set=policy_set, step_size=step_size)
            writer.write_row(row)
    return path


def _seed_worker(payload):
    config_dict, seed, out_dir = payload
    return seed, run_seed(from_dict(config_dict), seed, out_dir)


def run_experiment(config: ExperimentConfig, jobs: int = 1) -> dict:
    """Run every seed of a configuration; returns the manifest dict.

    The manifest (also written to out_dir/manifest.json) records the full
    config, package version, per-seed log files, and wall-clock time.
    Rerunning the same config reproduces every CSV byte for byte.
    """
    out_dir = config.out_dir
    os.makedirs(out_dir, exist_ok=True)
    start = time.perf_counter()
    files = {}
    if jobs > 1 and len(config.seeds) > 1:
        payloads = [(to_dict(config), seed, out_dir) for seed in config.seeds]
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for seed, path in pool.map(_seed_worker, payloads):
                files[str(seed)] = os.path.basename(path)
    else:
        for seed in config.seeds:
            files[str(seed)] = os.path.basename(
                run_seed(config, seed, out_dir))
    env = build_env(config)
    manifest = {
        "version": __version__,
        "config": to_dict(config),
        "columns": metric_columns(env.kind, env.n_agents, config.algorithm),
        "seeds": list(config.seeds),
        "files": files,
        "elapsed_seconds": time.perf_counter() - start,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest
