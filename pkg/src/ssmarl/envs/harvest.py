"""Harvest: a common-pool orchard where greed can sterilize the ground.

Agents roam a 7x38 grid scattered with apples. Entering an apple cell pays
+1. Empty cells regrow apples with probability proportional to the number
of live apples within a Chebyshev radius of 2, so sparse patches regrow
slowly and a patch stripped bare never comes back. Restraint sustains the
resource; over-harvesting kills it.

Observation: flattened apple mask, then normalized (row, col) per agent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..mmdp import EnvState, StepOutcome
from .gridworld import apply_moves, distinct_cells, neighborhood_counts, render_grid

ROWS, COLS = 7, 38


@dataclass(frozen=True)
class HarvestConfig:
    n_agents: int = 4
    horizon: int = 100
    respawn_coeff: float = 0.01  # probability per nearby live apple
    respawn_radius: int = 2
    initial_apple_density: float = 0.3
    apple_reward: float = 1.0


class HarvestEnv:
    kind = "harvest"

    def __init__(self, config: HarvestConfig = HarvestConfig()):
        self.config = config
        self.rows, self.cols = ROWS, COLS
        self.n_agents = config.n_agents
        self.action_sizes = [5] * config.n_agents
        self.obs_dim = ROWS * COLS + 2 * config.n_agents
        self.horizon = config.horizon
        self.position_scale = float(max(ROWS, COLS) - 1)
        self.observation_scale = 1.0  # flags and normalized coordinates
        self._rng = None
        self._t = 0

    def reset(self, rng: np.random.Generator) -> EnvState:
        c = self.config
        self._rng = rng
        self._t = 0
        self._apples = np.zeros((self.rows, self.cols), dtype=bool)
        total = self.rows * self.cols
        n_apples = int(c.initial_apple_density * total)
        flat = rng.choice(total, size=n_apples, replace=False)
        self._apples.reshape(-1)[flat] = True
        self._cells = distinct_cells(rng, c.n_agents, self.rows, self.cols)
        self._apples[self._cells[:, 0], self._cells[:, 1]] = False
        return EnvState(self._observation(), 0)

    def _observation(self) -> np.ndarray:
        coords = np.empty(2 * self.n_agents)
        coords[0::2] = self._cells[:, 0] / (self.rows - 1)
        coords[1::2] = self._cells[:, 1] / (self.cols - 1)
        return np.concatenate([
            self._apples.reshape(-1).astype(np.float64), coords,
        ])

    def respawn_probabilities(self) -> np.ndarray:
        """Per-cell regrowth probability given the current apple layout."""
        counts = neighborhood_counts(self._apples, self.config.respawn_radius)
        return np.minimum(self.config.respawn_coeff * counts, 1.0)

    def step(self, actions) -> StepOutcome:
        if self._rng is None:
            raise RuntimeError("step before reset")
        if self._t >= self.horizon:
            raise RuntimeError("episode already finished")
        c = self.config
        moved = apply_moves(self._cells, actions, self.rows, self.cols)
        rewards = np.zeros(self.n_agents)
        for i in range(self.n_agents):
            r, col = moved[i]
            if self._apples[r, col]:
                self._apples[r, col] = False
                rewards[i] = c.apple_reward
        self._cells = moved

        probs = self.respawn_probabilities()
        occupied = np.zeros((self.rows, self.cols), dtype=bool)
        occupied[self._cells[:, 0], self._cells[:, 1]] = True
        regrow = (~self._apples & ~occupied
                  & (self._rng.random(self._apples.shape) < probs))
        self._apples |= regrow
        self._t += 1
        state = EnvState(self._observation(), self._t)
        return StepOutcome(state, rewards, self._t >= self.horizon)

    def agent_points(self, observation) -> np.ndarray:
        obs = np.asarray(observation)
        coords = obs[self.rows * self.cols:]
        pts = np.empty((self.n_agents, 2))
        pts[:, 0] = np.rint(coords[0::2] * (self.rows - 1))
        pts[:, 1] = np.rint(coords[1::2] * (self.cols - 1))
        return pts

    def render(self) -> str:
        agents = np.zeros((self.rows, self.cols), dtype=bool)
        agents[self._cells[:, 0], self._cells[:, 1]] = True
        return render_grid(self.rows, self.cols, {"A": self._apples, "@": agents})


def restraint_flags(states, next_states, n_agents: int) -> np.ndarray:
    """Which agents could have taken an apple this step but chose not to.

    An agent is flagged when some apple sat one move away (up, down, left,
    right, or underfoot) in the pre-step observation yet the cell it
    actually ended the step on held no apple. Decoded purely from
    observation pairs. Returns a float (T, n_agents) array of 0/1 flags.
    """
    states = np.atleast_2d(np.asarray(states))
    next_states = np.atleast_2d(np.asarray(next_states))
    cells = ROWS * COLS
    apples_pre = states[:, :cells].reshape(-1, ROWS, COLS) > 0.5
    T = states.shape[0]

    def grid_cells(obs):
        coords = obs[:, cells:cells + 2 * n_agents]
        rows = np.rint(coords[:, 0::2] * (ROWS - 1)).astype(int)
        cols = np.rint(coords[:, 1::2] * (COLS - 1)).astype(int)
        return rows, cols

    r_pre, c_pre = grid_cells(states)
    r_post, c_post = grid_cells(next_states)
    t_idx = np.arange(T)[:, None]

    reachable = np.zeros((T, n_agents), dtype=bool)
    for dr, dc in ((0, 0), (-1, 0), (1, 0), (0, -1), (0, 1)):
        rr = np.clip(r_pre + dr, 0, ROWS - 1)
        cc = np.clip(c_pre + dc, 0, COLS - 1)
        reachable |= apples_pre[t_idx, rr, cc]
    chose_apple = apples_pre[t_idx, r_post, c_post]
    return (reachable & ~chose_apple).astype(np.float64)
