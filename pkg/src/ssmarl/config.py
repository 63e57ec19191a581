"""Experiment configuration: one human-editable JSON tree per run.

Defaults are environment-specific (learning rates, penalty weight, network
widths) with a shared core (clip 0.2, three inner update iterations,
discount 0.99, GAE lambda 0.98, critic rate 1e-4, Adam). Every field can be
overridden from a config file or --override key=value flags.
"""

from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field, fields

ALGORITHMS = ("ss", "vps", "vs", "ps", "cl", "imr", "ippo")
ENVS = ("cleanup", "harvest", "navigation", "predation")


class ConfigError(ValueError):
    pass


@dataclass
class Hyper:
    clip_epsilon: float = 0.2
    penalty_coeff: float = 0.1   # weight on the suggestion-consistency penalties
    update_iters: int = 3        # inner update iterations per episode
    gamma: float = 0.99
    gae_lambda: float = 0.98
    actor_lr: float = 1e-4
    critic_lr: float = 1e-4
    imr_beta: float = 1.0        # intrinsic bonus weight, imr only


@dataclass
class TopologySpec:
    protocol: str = "full"
    radius: float | None = None
    m: int | None = None


@dataclass
class ExperimentConfig:
    env: str = "predation"
    algorithm: str = "ss"
    env_params: dict = field(default_factory=dict)
    hyper: Hyper = field(default_factory=Hyper)
    actor_hidden: tuple = (128, 64)
    critic_hidden: tuple = (128, 64)
    topology: TopologySpec = field(default_factory=TopologySpec)
    comm_period: int = 1
    episodes: int = 1000
    seeds: tuple = (0,)
    out_dir: str = "runs"

    def __post_init__(self):
        validate_names(self.env, self.algorithm)
        h = self.hyper
        if not 0.0 < h.gamma < 1.0:
            raise ConfigError(f"gamma must be in (0, 1), got {h.gamma}")
        if not 0.0 <= h.gae_lambda <= 1.0:
            raise ConfigError(f"gae_lambda must be in [0, 1], got {h.gae_lambda}")
        if h.clip_epsilon <= 0.0:
            raise ConfigError(f"clip_epsilon must be positive, got {h.clip_epsilon}")
        if h.update_iters < 1:
            raise ConfigError(f"update_iters must be >= 1, got {h.update_iters}")
        for name in ("penalty_coeff", "actor_lr", "critic_lr", "imr_beta"):
            if getattr(h, name) < 0.0:
                raise ConfigError(f"{name} must be >= 0, got {getattr(h, name)}")
        t = self.topology
        if t.protocol not in ("full", "distance", "random_m", "grid_adjacent"):
            raise ConfigError(f"unknown topology protocol {t.protocol!r}")
        if t.protocol == "distance" and (t.radius is None or t.radius <= 0):
            raise ConfigError("distance topology needs a positive radius")
        if t.protocol == "random_m" and (t.m is None or t.m < 1):
            raise ConfigError("random_m topology needs m >= 1")
        if self.comm_period < 1:
            raise ConfigError(f"comm_period must be >= 1, got {self.comm_period}")
        if self.episodes < 1:
            raise ConfigError(f"episodes must be >= 1, got {self.episodes}")
        if not self.seeds:
            raise ConfigError("seeds must be non-empty")
        for hidden in (self.actor_hidden, self.critic_hidden):
            if any(int(w) != w or w < 1 for w in hidden):
                raise ConfigError(f"hidden sizes must be positive ints, got {hidden}")


# Environment-specific defaults; everything else comes from the dataclass
# defaults above.
ENV_DEFAULTS = {
    "cleanup": dict(actor_lr=1e-5, penalty_coeff=1e3,
                    hidden=(1024, 256), topology=TopologySpec("full")),
    "harvest": dict(actor_lr=5e-5, penalty_coeff=0.1,
                    hidden=(1024, 256), topology=TopologySpec("full")),
    "navigation": dict(actor_lr=1e-5, penalty_coeff=1.0,
                       hidden=(128, 64), topology=TopologySpec("grid_adjacent")),
    "predation": dict(actor_lr=1e-4, penalty_coeff=0.1,
                      hidden=(128, 64), topology=TopologySpec("distance", radius=0.1)),
}


def default_config(env: str, algorithm: str = "ss") -> ExperimentConfig:
    validate_names(env, algorithm)
    d = ENV_DEFAULTS[env]
    return ExperimentConfig(
        env=env,
        algorithm=algorithm,
        hyper=Hyper(actor_lr=d["actor_lr"], penalty_coeff=d["penalty_coeff"]),
        actor_hidden=d["hidden"],
        critic_hidden=d["hidden"],
        topology=copy.deepcopy(d["topology"]),
        episodes=3000 if env == "predation" else 1000,
    )


def validate_names(env: str, algorithm: str) -> None:
    if env not in ENVS:
        raise ConfigError(f"unknown env {env!r}; valid: {', '.join(ENVS)}")
    if algorithm not in ALGORITHMS:
        raise ConfigError(
            f"unknown algorithm {algorithm!r}; valid: {', '.join(ALGORITHMS)}")


def to_dict(config: ExperimentConfig) -> dict:
    d = asdict(config)
    d["actor_hidden"] = list(config.actor_hidden)
    d["critic_hidden"] = list(config.critic_hidden)
    d["seeds"] = list(config.seeds)
    return d


def from_dict(data: dict) -> ExperimentConfig:
    data = copy.deepcopy(data)
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if "hyper" in data:
        hk = {f.name for f in fields(Hyper)}
        bad = set(data["hyper"]) - hk
        if bad:
            raise ConfigError(f"unknown hyper keys: {sorted(bad)}")
        data["hyper"] = Hyper(**data["hyper"])
    if "topology" in data:
        tk = {f.name for f in fields(TopologySpec)}
        bad = set(data["topology"]) - tk
        if bad:
            raise ConfigError(f"unknown topology keys: {sorted(bad)}")
        data["topology"] = TopologySpec(**data["topology"])
    for key in ("actor_hidden", "critic_hidden", "seeds"):
        if key in data:
            data[key] = tuple(data[key])
    config = ExperimentConfig(**data)
    validate_names(config.env, config.algorithm)
    return config


def save_config(config: ExperimentConfig, path) -> None:
    with open(path, "w") as fh:
        json.dump(to_dict(config), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    return from_dict(data)


def apply_overrides(config: ExperimentConfig, overrides) -> ExperimentConfig:
    """Apply dotted key=value strings, e.g. hyper.actor_lr=3e-4."""
    data = to_dict(config)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw  # bare strings stay strings
        node = data
        parts = key.split(".")
        for part in parts[:-1]:
            if part not in node or not isinstance(node[part], dict):
                raise ConfigError(f"override path {key!r} does not exist")
            node = node[part]
        leaf = parts[-1]
        if leaf not in node and parts[0] != "env_params":
            raise ConfigError(f"override path {key!r} does not exist")
        node[leaf] = value
    return from_dict(data)
