"""Cleanup: an apple orchard fed by a river that silts up with waste.

Agents walk an 11x18 grid. The three left columns are the river; the rest
is the orchard. Eating an apple (entering its cell) pays +1; clearing a
waste cell from the river pays nothing, yet apples only regrow while the
river's waste density stays below a threshold, and regrowth slows linearly
as waste accumulates. Waste accrues at a steady rate, so somebody has to
do the unpaid cleaning or the orchard dies: public-good dilemma.

Observation: flattened apple mask, flattened waste mask, then normalized
(row, col) per agent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..mmdp import EnvState, StepOutcome
from .gridworld import apply_moves, distinct_cells, render_grid

ROWS, COLS = 11, 18


@dataclass(frozen=True)
class CleanupConfig:
    n_agents: int = 4
    horizon: int = 100
    river_cols: int = 3
    waste_threshold: float = 0.4     # spawning stops at this waste density
    waste_rate: float = 0.5          # waste units accrued per step
    apple_spawn_base: float = 0.05   # per empty orchard cell, zero waste
    initial_waste_density: float = 0.5
    initial_apple_density: float = 0.1
    apple_reward: float = 1.0


class CleanupEnv:
    kind = "cleanup"

    def __init__(self, config: CleanupConfig = CleanupConfig()):
        self.config = config
        self.rows, self.cols = ROWS, COLS
        self.n_agents = config.n_agents
        self.action_sizes = [5] * config.n_agents
        self.obs_dim = 2 * ROWS * COLS + 2 * config.n_agents
        self.horizon = config.horizon
        self.position_scale = float(max(ROWS, COLS) - 1)
        self.observation_scale = 1.0  # flags and normalized coordinates
        self._rng = None
        self._t = 0

    @property
    def river_capacity(self) -> int:
        return self.rows * self.config.river_cols

    def waste_density(self) -> float:
        return float(self._waste.sum() / self.river_capacity)

    def reset(self, rng: np.random.Generator) -> EnvState:
        c = self.config
        self._rng = rng
        self._t = 0
        self._apples = np.zeros((self.rows, self.cols), dtype=bool)
        self._waste = np.zeros((self.rows, self.cols), dtype=bool)
        self._waste_accrued = 0.0

        river = [(r, col) for r in range(self.rows) for col in range(c.river_cols)]
        orchard = [(r, col) for r in range(self.rows)
                   for col in range(c.river_cols, self.cols)]
        n_waste = int(c.initial_waste_density * len(river))
        for idx in rng.choice(len(river), size=n_waste, replace=False):
            self._waste[river[idx]] = True
        n_apples = int(c.initial_apple_density * len(orchard))
        for idx in rng.choice(len(orchard), size=n_apples, replace=False):
            self._apples[orchard[idx]] = True

        self._cells = distinct_cells(rng, c.n_agents, self.rows, self.cols)
        self._apples[self._cells[:, 0], self._cells[:, 1]] = False
        return EnvState(self._observation(), 0)

    def _observation(self) -> np.ndarray:
        coords = np.empty(2 * self.n_agents)
        coords[0::2] = self._cells[:, 0] / (self.rows - 1)
        coords[1::2] = self._cells[:, 1] / (self.cols - 1)
        return np.concatenate([
            self._apples.reshape(-1).astype(np.float64),
            self._waste.reshape(-1).astype(np.float64),
            coords,
        ])

    def step(self, actions) -> StepOutcome:
        if self._rng is None:
            raise RuntimeError("step before reset")
        if self._t >= self.horizon:
            raise RuntimeError("episode already finished")
        c = self.config
        moved = apply_moves(self._cells, actions, self.rows, self.cols)
        rewards = np.zeros(self.n_agents)
        for i in range(self.n_agents):  # index order resolves contested cells
            r, col = moved[i]
            if self._apples[r, col]:
                self._apples[r, col] = False
                rewards[i] = c.apple_reward
            elif self._waste[r, col]:
                self._waste[r, col] = False
        self._cells = moved

        self._accrue_waste()
        self._spawn_apples()
        self._t += 1
        state = EnvState(self._observation(), self._t)
        return StepOutcome(state, rewards, self._t >= self.horizon)

    def _accrue_waste(self):
        c = self.config
        self._waste_accrued += c.waste_rate
        while self._waste_accrued >= 1.0:
            empty = np.argwhere(~self._waste[:, :c.river_cols])
            if empty.size == 0:
                self._waste_accrued = 0.0
                break
            r, col = empty[self._rng.integers(len(empty))]
            self._waste[r, col] = True
            self._waste_accrued -= 1.0

    def apple_spawn_rate(self) -> float:
        """Per-cell spawn probability: base rate scaled down linearly with
        waste density, zero at or above the threshold."""
        c = self.config
        return c.apple_spawn_base * max(0.0, 1.0 - self.waste_density() / c.waste_threshold)

    def _spawn_apples(self):
        c = self.config
        rate = self.apple_spawn_rate()
        if rate <= 0.0:
            return
        occupied = np.zeros((self.rows, self.cols), dtype=bool)
        occupied[self._cells[:, 0], self._cells[:, 1]] = True
        empty = ~self._apples & ~occupied
        empty[:, :c.river_cols] = False
        sites = np.argwhere(empty)
        hits = self._rng.random(len(sites)) < rate
        for r, col in sites[hits]:
            self._apples[r, col] = True

    def agent_points(self, observation) -> np.ndarray:
        obs = np.asarray(observation)
        coords = obs[2 * self.rows * self.cols:]
        pts = np.empty((self.n_agents, 2))
        pts[:, 0] = np.rint(coords[0::2] * (self.rows - 1))
        pts[:, 1] = np.rint(coords[1::2] * (self.cols - 1))
        return pts

    def render(self) -> str:
        agents = np.zeros((self.rows, self.cols), dtype=bool)
        agents[self._cells[:, 0], self._cells[:, 1]] = True
        river = np.zeros((self.rows, self.cols), dtype=bool)
        river[:, :self.config.river_cols] = True
        return render_grid(self.rows, self.cols, {
            "~": river, "A": self._apples, "W": self._waste, "@": agents,
        })


def cleaning_flags(states, next_states, n_agents: int) -> np.ndarray:
    """Which agents stepped onto (or stayed on) a cell holding waste.

    Decoded from observation pairs: the waste channel of the pre-step
    observation at each agent's post-step cell. When several agents enter
    the same waste cell all of them are flagged even though only the
    lowest-indexed one performed the clearing.
    Returns a float (T, n_agents) array of 0/1 flags.
    """
    states = np.atleast_2d(np.asarray(states))
    next_states = np.atleast_2d(np.asarray(next_states))
    cells = ROWS * COLS
    waste_pre = states[:, cells:2 * cells].reshape(-1, ROWS, COLS) > 0.5
    coords = next_states[:, 2 * cells:2 * cells + 2 * n_agents]
    rows = np.rint(coords[:, 0::2] * (ROWS - 1)).astype(int)
    cols = np.rint(coords[:, 1::2] * (COLS - 1)).astype(int)
    t_idx = np.arange(states.shape[0])[:, None]
    return waste_pre[t_idx, rows, cols].astype(np.float64)
