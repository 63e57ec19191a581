"""Cooperative navigation: reach your landmark without bumping into anyone.

Three agents on a 5x5 grid each own one landmark (fixed one-to-one
assignment; positions re-drawn each episode). Per step an agent is charged
the normalized Manhattan distance to its landmark plus a penalty for every
step it shares a cell with another agent. Best case, parked on the
landmark alone: reward 0.

Observation: normalized (row, col) per agent, then per landmark.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..mmdp import EnvState, StepOutcome
from .gridworld import apply_moves, distinct_cells, render_grid

SIZE = 5
MAX_MANHATTAN = 2 * (SIZE - 1)


@dataclass(frozen=True)
class NavigationConfig:
    n_agents: int = 3
    horizon: int = 100
    collision_penalty: float = 1.0


class NavigationEnv:
    kind = "navigation"

    def __init__(self, config: NavigationConfig = NavigationConfig()):
        self.config = config
        self.rows = self.cols = SIZE
        self.n_agents = config.n_agents
        self.action_sizes = [5] * config.n_agents
        self.obs_dim = 4 * config.n_agents
        self.horizon = config.horizon
        self.position_scale = float(SIZE - 1)
        self.observation_scale = 1.0  # coordinates already normalized
        self._cells = None
        self._t = 0

    def reset(self, rng: np.random.Generator) -> EnvState:
        self._landmarks = distinct_cells(rng, self.n_agents, SIZE, SIZE)
        self._cells = distinct_cells(rng, self.n_agents, SIZE, SIZE)
        self._t = 0
        return EnvState(self._observation(), 0)

    def _observation(self) -> np.ndarray:
        return np.concatenate([
            self._cells.reshape(-1) / (SIZE - 1),
            self._landmarks.reshape(-1) / (SIZE - 1),
        ])

    def step(self, actions) -> StepOutcome:
        if self._cells is None:
            raise RuntimeError("step before reset")
        if self._t >= self.horizon:
            raise RuntimeError("episode already finished")
        moved = apply_moves(self._cells, actions, SIZE, SIZE)
        dists = np.abs(moved - self._landmarks).sum(axis=1)
        rewards = -dists / MAX_MANHATTAN
        for i in range(self.n_agents):
            shared = np.all(moved == moved[i], axis=1)
            if shared.sum() > 1:
                rewards[i] -= self.config.collision_penalty
        self._cells = moved
        self._t += 1
        state = EnvState(self._observation(), self._t)
        return StepOutcome(state, rewards, self._t >= self.horizon)

    def agent_points(self, observation) -> np.ndarray:
        obs = np.asarray(observation)
        coords = obs[:2 * self.n_agents]
        pts = np.empty((self.n_agents, 2))
        pts[:, 0] = np.rint(coords[0::2] * (SIZE - 1))
        pts[:, 1] = np.rint(coords[1::2] * (SIZE - 1))
        return pts

    def render(self) -> str:
        agents = np.zeros((SIZE, SIZE), dtype=bool)
        agents[self._cells[:, 0], self._cells[:, 1]] = True
        marks = np.zeros((SIZE, SIZE), dtype=bool)
        marks[self._landmarks[:, 0], self._landmarks[:, 1]] = True
        return render_grid(SIZE, SIZE, {"*": marks, "@": agents})
