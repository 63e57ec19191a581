"""Continuous pursuit dilemma on a line segment.

N predators and one stationary prey live on [0, length]. Each step every
predator moves one unit left or right (clamped at the walls). A predator
"cooperates" when it heads in the prey's direction — the sign of its move
points at the prey — and defects otherwise. An agent standing exactly on
the prey has no pursuing direction and counts as a defector. Per-step
rewards:

    everyone cooperates   -> -1 each
    everyone defects      -> -(2N - 1) each
    mixed                 -> cooperators -2N, defectors 0

so defection is individually dominant while mutual cooperation maximizes
the collective return. The global state is the vector of predator-to-prey
offsets.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..mmdp import EnvState, StepOutcome

ACTION_MOVES = np.array([-1.0, 1.0])


@dataclass(frozen=True)
class PredationConfig:
    n_agents: int = 8
    horizon: int = 30
    length: float = 30.0
    step_size: float = 1.0
    neighbor_radius: float = 0.1  # fraction of length, used by distance topology

    def __post_init__(self):
        if self.n_agents < 1:
            raise ValueError("need at least one agent")
        if self.length <= 0 or self.step_size <= 0 or self.horizon <= 0:
            raise ValueError("length, step_size and horizon must be positive")


class PredationEnv:
    kind = "predation"

    def __init__(self, config: PredationConfig = PredationConfig()):
        self.config = config
        self.n_agents = config.n_agents
        self.action_sizes = [2] * config.n_agents
        self.obs_dim = config.n_agents
        self.horizon = config.horizon
        self.position_scale = config.length
        # Offsets range over [-length, length]; nets condition their first
        # layer on this so initial policies are not saturated.
        self.observation_scale = config.length
        self._positions = None
        self._prey = None
        self._t = 0

    def reset(self, rng: np.random.Generator) -> EnvState:
        c = self.config
        self._prey = float(rng.uniform(0.0, c.length))
        self._positions = rng.uniform(0.0, c.length, size=c.n_agents)
        self._t = 0
        return EnvState(self._observation(), 0)

    def _observation(self) -> np.ndarray:
        return self._positions - self._prey

    def step(self, actions) -> StepOutcome:
        if self._positions is None:
            raise RuntimeError("step before reset")
        if self._t >= self.horizon:
            raise RuntimeError("episode already finished")
        acts = np.asarray(actions, dtype=np.int64)
        if acts.shape != (self.n_agents,) or np.any((acts < 0) | (acts > 1)):
            raise ValueError(f"invalid joint action {actions}")

        c = self.config
        offsets = self._positions - self._prey
        moved = np.clip(self._positions + ACTION_MOVES[acts] * c.step_size,
                        0.0, c.length)
        cooperating = ACTION_MOVES[acts] * offsets < 0.0

        rewards = classify_rewards(cooperating)
        self._positions = moved
        self._t += 1
        state = EnvState(self._observation(), self._t)
        return StepOutcome(state, rewards, self._t >= self.horizon)

    def agent_points(self, observation) -> np.ndarray:
        """Per-agent coordinates for topology; offsets preserve distances."""
        return np.asarray(observation, dtype=np.float64).reshape(-1, 1)


def classify_rewards(cooperating: np.ndarray) -> np.ndarray:
    """Reward vector for one step given per-agent cooperation flags."""
    flags = np.asarray(cooperating, dtype=bool)
    n = flags.size
    k = int(flags.sum())
    if k == n:
        return np.full(n, -1.0)
    if k == 0:
        return np.full(n, -(2.0 * n - 1.0))
    return np.where(flags, -2.0 * n, 0.0)


def cooperation_flags(obs_before, obs_after) -> np.ndarray:
    """Clamp-aware cooperation flags recovered from a stored transition.

    Works on (N,) vectors or (T, N) stacks. An agent cooperated iff it
    moved in the prey's direction: the displacement has the opposite sign
    of the starting offset. A zero displacement only happens when a wall
    blocks an outward (away-from-prey) move, and a zero starting offset
    means the agent sat on the prey; both count as defection.
    """
    before = np.asarray(obs_before, dtype=np.float64)
    move = np.asarray(obs_after, dtype=np.float64) - before
    return move * before < 0.0


def action_toward_prey(observation, step_size: float = 1.0) -> np.ndarray:
    """Index of the distance-reducing action per agent.

    -1 marks agents closer than half a step to the prey, where neither move
    strictly reduces distance; such states carry no cooperative direction.
    """
    obs = np.asarray(observation, dtype=np.float64)
    half = step_size / 2.0
    toward = np.full(obs.shape, -1, dtype=np.int64)
    toward[obs > half] = 0   # move left
    toward[obs < -half] = 1  # move right
    return toward
