"""Environment registry. All environments share the duck-typed interface
used by mmdp.rollout plus agent_points() for neighbor topologies."""

from __future__ import annotations

from .cleanup import CleanupConfig, CleanupEnv
from .harvest import HarvestConfig, HarvestEnv
from .navigation import NavigationConfig, NavigationEnv
from .predation import PredationConfig, PredationEnv

ENV_KINDS = ("cleanup", "harvest", "navigation", "predation")

_BUILDERS = {
    "cleanup": (CleanupConfig, CleanupEnv),
    "harvest": (HarvestConfig, HarvestEnv),
    "navigation": (NavigationConfig, NavigationEnv),
    "predation": (PredationConfig, PredationEnv),
}


def make_env(kind: str, **params):
    """Build an environment by name; params override the config defaults."""
    if kind not in _BUILDERS:
        raise ValueError(f"unknown environment {kind!r}, expected one of {ENV_KINDS}")
    config_cls, env_cls = _BUILDERS[kind]
    try:
        config = config_cls(**params)
    except TypeError as exc:
        raise ValueError(f"bad parameters for {kind}: {exc}") from None
    return env_cls(config)
