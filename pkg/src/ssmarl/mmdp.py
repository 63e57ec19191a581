"""Core multi-agent MDP machinery: episode rollouts, trajectory storage,
discounted returns, and a line-oriented trajectory dump for inspection.

All agents act simultaneously on a shared global state; each agent has its
own reward stream. Environments are duck-typed: they expose n_agents,
action_sizes, obs_dim, horizon, reset(rng) and step(actions).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class EnvState:
    """Global state handed to policies: observation vector plus step index."""

    observation: np.ndarray
    step_index: int


@dataclass(frozen=True)
class StepOutcome:
    next_state: EnvState
    rewards: np.ndarray  # (n_agents,)
    terminal: bool


@dataclass(frozen=True)
class DiscountSpec:
    gamma: float = 0.99
    gae_lambda: float = 0.98

    def __post_init__(self):
        if not (0.0 < self.gamma < 1.0):
            raise ValueError(f"gamma must lie in (0,1), got {self.gamma}")
        if not (0.0 <= self.gae_lambda <= 1.0):
            raise ValueError(f"gae_lambda must lie in [0,1], got {self.gae_lambda}")


@dataclass
class TrajectoryBatch:
    """One fixed-horizon episode.

    states[t] is the observation the joint action actions[t] was taken in,
    next_states[t] the resulting observation, rewards[t, i] agent i's reward.
    behavior[i][t] is the full action distribution agent i sampled from at
    step t (its own-policy snapshot at collection time).
    """

    states: np.ndarray        # (T, obs_dim)
    actions: np.ndarray       # (T, n_agents) int
    rewards: np.ndarray       # (T, n_agents)
    next_states: np.ndarray   # (T, obs_dim)
    behavior: list[np.ndarray]  # per agent: (T, action_size_i)
    seed: int

    @property
    def horizon(self) -> int:
        return self.states.shape[0]

    @property
    def n_agents(self) -> int:
        return self.actions.shape[1]


def sample_action(distribution: np.ndarray, rng: np.random.Generator) -> int:
    """Draw one action index from a categorical distribution."""
    p = np.asarray(distribution, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError("distribution must be a non-empty vector")
    total = p.sum()
    if not np.isfinite(total) or abs(total - 1.0) > 1e-6 or np.any(p < 0):
        raise ValueError(f"not a probability vector (sum {total})")
    u = rng.random() * total
    return int(np.minimum(np.searchsorted(np.cumsum(p), u, side="right"),
                          p.size - 1))


def rollout(env, policy_set, horizon: int, seed: int) -> TrajectoryBatch:
    """Run one episode of exactly `horizon` steps and log everything.

    policy_set.action_distribution(agent, observation) supplies per-agent
    categorical distributions. The seed alone (plus env and policies) fixes
    the whole trajectory: env randomness and action sampling use separate
    child generators.
    """
    if horizon <= 0 or horizon > env.horizon:
        raise ValueError(f"horizon must be in 1..{env.horizon}, got {horizon}")
    seq = np.random.SeedSequence(seed)
    env_rng, act_rng = (np.random.default_rng(s) for s in seq.spawn(2))

    n = env.n_agents
    state = env.reset(env_rng)
    states = np.empty((horizon, env.obs_dim))
    next_states = np.empty((horizon, env.obs_dim))
    actions = np.empty((horizon, n), dtype=np.int64)
    rewards = np.empty((horizon, n))
    behavior = [np.empty((horizon, env.action_sizes[i])) for i in range(n)]

    for t in range(horizon):
        states[t] = state.observation
        joint = np.empty(n, dtype=np.int64)
        for i in range(n):
            dist = policy_set.action_distribution(i, state.observation)
            behavior[i][t] = dist
            joint[i] = sample_action(dist, act_rng)
        outcome = env.step(joint)
        actions[t] = joint
        rewards[t] = outcome.rewards
        next_states[t] = outcome.next_state.observation
        state = outcome.next_state
        if outcome.terminal and t != horizon - 1:
            raise RuntimeError(f"environment terminated early at step {t}")
    return TrajectoryBatch(states, actions, rewards, next_states, behavior, seed)


def discounted_return(rewards, gamma: float) -> float:
    """sum_t gamma^t r_t for one reward stream."""
    r = np.asarray(rewards, dtype=np.float64)
    if r.ndim != 1:
        raise ValueError("rewards must be 1-D")
    # Horner evaluation, numerically tidy for long streams.
    acc = 0.0
    for v in r[::-1]:
        acc = v + gamma * acc
    return float(acc)


def normalized_collective_return(batch: TrajectoryBatch) -> float:
    """Undiscounted sum of all rewards divided by (n_agents * horizon)."""
    return float(batch.rewards.sum() / (batch.n_agents * batch.horizon))


class UniformPolicySet:
    """Uniform random policies; handy in tests and as a null baseline."""

    def __init__(self, action_sizes):
        self.action_sizes = list(action_sizes)

    def action_distribution(self, agent: int, observation) -> np.ndarray:
        k = self.action_sizes[agent]
        return np.full(k, 1.0 / k)


class FixedActionPolicySet:
    """One-hot policies that always pick a fixed action per agent."""

    def __init__(self, action_sizes, choices):
        self.action_sizes = list(action_sizes)
        self.choices = list(choices)

    def action_distribution(self, agent: int, observation) -> np.ndarray:
        dist = np.zeros(self.action_sizes[agent])
        dist[self.choices[agent]] = 1.0
        return dist


def write_trajectory(batch: TrajectoryBatch, path) -> None:
    """Dump an episode one step per line: index, state, actions, rewards.

    Floats are written with repr so the text round-trips exactly.
    """
    with open(path, "w") as fh:
        fh.write(f"trajectory seed={batch.seed} steps={batch.horizon} "
                 f"agents={batch.n_agents} obs={batch.states.shape[1]}\n")
        for t in range(batch.horizon):
            state = " ".join(repr(float(v)) for v in batch.states[t])
            acts = " ".join(str(int(a)) for a in batch.actions[t])
            rews = " ".join(repr(float(v)) for v in batch.rewards[t])
            fh.write(f"{t} | {state} | {acts} | {rews}\n")


def read_trajectory(path):
    """Parse a write_trajectory dump back into (seed, states, actions, rewards)."""
    with open(path) as fh:
        header = fh.readline().split()
        if not header or header[0] != "trajectory":
            raise ValueError(f"{path}: not a trajectory dump")
        meta = dict(tok.split("=") for tok in header[1:])
        steps, agents = int(meta["steps"]), int(meta["agents"])
        obs = int(meta["obs"])
        states = np.empty((steps, obs))
        actions = np.empty((steps, agents), dtype=np.int64)
        rewards = np.empty((steps, agents))
        for line in fh:
            idx_part, state_part, act_part, rew_part = line.split(" | ")
            t = int(idx_part)
            states[t] = [float(v) for v in state_part.split()]
            actions[t] = [int(v) for v in act_part.split()]
            rewards[t] = [float(v) for v in rew_part.split()]
    return int(meta["seed"]), states, actions, rewards
