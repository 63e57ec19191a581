"""Small finite multi-agent MDPs solved exactly by linear algebra.

Everything here is dense and exact (up to float64 linear solves): value
and action-value functions come from solving (I - gamma P) directly, the
discounted state-visitation measure from the transposed system. This is
the ground truth used to check the package's analytical bounds on
randomly generated instances.

Joint actions are flat mixed-radix indices over the per-agent action
sets, with the last agent's digit varying fastest. Policies are lists of
row-stochastic (n_states, n_actions_i) tables; a "suggesting" joint
policy is the same structure produced by one agent for everybody.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class TabularMMDP:
    """Dense finite MMDP: shared state, joint transitions, per-agent rewards."""

    transitions: np.ndarray   # (S, A_joint, S), rows sum to 1
    rewards: np.ndarray       # (n_agents, S, A_joint)
    action_sizes: tuple       # per-agent action counts; prod = A_joint
    gamma: float
    initial_dist: np.ndarray  # (S,), sums to 1

    def __post_init__(self):
        t = np.asarray(self.transitions, dtype=np.float64)
        r = np.asarray(self.rewards, dtype=np.float64)
        rho = np.asarray(self.initial_dist, dtype=np.float64)
        object.__setattr__(self, "transitions", t)
        object.__setattr__(self, "rewards", r)
        object.__setattr__(self, "initial_dist", rho)
        object.__setattr__(self, "action_sizes", tuple(int(a) for a in self.action_sizes))
        s, a_joint, s2 = t.shape
        if s != s2:
            raise ValueError(f"transition tensor must be (S, A, S), got {t.shape}")
        if int(np.prod(self.action_sizes)) != a_joint:
            raise ValueError(
                f"action sizes {self.action_sizes} do not multiply to {a_joint}")
        if r.shape != (len(self.action_sizes), s, a_joint):
            raise ValueError(f"rewards must be (n_agents, S, A), got {r.shape}")
        if not np.allclose(t.sum(axis=2), 1.0, atol=1e-10):
            raise ValueError("transition rows must sum to 1")
        if np.any(t < 0):
            raise ValueError("transition probabilities must be nonnegative")
        if rho.shape != (s,) or abs(rho.sum() - 1.0) > 1e-10 or np.any(rho < 0):
            raise ValueError("initial_dist must be a distribution over states")
        if not 0.0 < self.gamma < 1.0:
            raise ValueError(f"gamma must be in (0, 1), got {self.gamma}")

    @property
    def n_states(self) -> int:
        return self.transitions.shape[0]

    @property
    def n_joint_actions(self) -> int:
        return self.transitions.shape[1]

    @property
    def n_agents(self) -> int:
        return len(self.action_sizes)

    def joint_index(self, actions) -> int:
        """Flat index of a per-agent action tuple (last digit fastest)."""
        idx = 0
        for a, size in zip(actions, self.action_sizes):
            if not 0 <= a < size:
                raise ValueError(f"action {a} out of range for size {size}")
            idx = idx * size + int(a)
        return idx

    def joint_actions(self, index: int) -> tuple:
        """Inverse of joint_index."""
        if not 0 <= index < self.n_joint_actions:
            raise ValueError(f"joint index {index} out of range")
        out = []
        for size in reversed(self.action_sizes):
            out.append(index % size)
            index //= size
        return tuple(reversed(out))


def joint_policy_table(mmdp: TabularMMDP, per_agent: list) -> np.ndarray:
    """(S, A_joint) product distribution from per-agent policy tables."""
    s = mmdp.n_states
    table = np.ones((s, 1))
    for i, pol in enumerate(per_agent):
        pol = np.asarray(pol, dtype=np.float64)
        if pol.shape != (s, mmdp.action_sizes[i]):
            raise ValueError(
                f"policy {i} must be {(s, mmdp.action_sizes[i])}, got {pol.shape}")
        table = (table[:, :, None] * pol[:, None, :]).reshape(s, -1)
    return table


def transition_matrix(mmdp: TabularMMDP, joint_table: np.ndarray) -> np.ndarray:
    """(S, S) state-to-state matrix under a joint policy."""
    return np.einsum("sa,sat->st", joint_table, mmdp.transitions)


def state_rewards(mmdp: TabularMMDP, joint_table: np.ndarray,
                  agent: int) -> np.ndarray:
    """(S,) expected one-step reward for one agent under a joint policy."""
    return np.einsum("sa,sa->s", joint_table, mmdp.rewards[agent])


def value_function(mmdp: TabularMMDP, joint_table: np.ndarray,
                   agent: int) -> np.ndarray:
    """Exact V_i: solve (I - gamma P) v = r."""
    p = transition_matrix(mmdp, joint_table)
    r = state_rewards(mmdp, joint_table, agent)
    return np.linalg.solve(np.eye(mmdp.n_states) - mmdp.gamma * p, r)


def q_function(mmdp: TabularMMDP, joint_table: np.ndarray,
               agent: int) -> np.ndarray:
    """Exact (S, A_joint) action values for one agent."""
    v = value_function(mmdp, joint_table, agent)
    return mmdp.rewards[agent] + mmdp.gamma * mmdp.transitions @ v


def advantage_function(mmdp: TabularMMDP, joint_table: np.ndarray,
                       agent: int) -> np.ndarray:
    """Exact (S, A_joint) advantages: Q_i - V_i."""
    v = value_function(mmdp, joint_table, agent)
    q = mmdp.rewards[agent] + mmdp.gamma * mmdp.transitions @ v
    return q - v[:, None]


def collective_return(mmdp: TabularMMDP, joint_table: np.ndarray) -> float:
    """Expected discounted sum of all agents' rewards from the start
    distribution."""
    total = 0.0
    for i in range(mmdp.n_agents):
        total += float(mmdp.initial_dist @ value_function(mmdp, joint_table, i))
    return total


def occupancy(mmdp: TabularMMDP, joint_table: np.ndarray) -> np.ndarray:
    """Discounted state-visitation measure sum_t gamma^t P(s_t = s).

    Deliberately unnormalized: the entries sum to 1 / (1 - gamma).
    """
    p = transition_matrix(mmdp, joint_table)
    eye = np.eye(mmdp.n_states)
    return np.linalg.solve(eye - mmdp.gamma * p.T, mmdp.initial_dist)


def zeta(mmdp: TabularMMDP, ref_table: np.ndarray,
         eval_tables: list) -> float:
    """Total expected advantage sum_i E_{s~d_ref, a~eval_i}[A_i^ref(s, a)].

    eval_tables holds one (S, A_joint) distribution per agent: agent i's
    advantages are averaged under eval_tables[i]. Passing the same joint
    table n_agents times evaluates the classic single-policy version.
    """
    d = occupancy(mmdp, ref_table)
    total = 0.0
    for i in range(mmdp.n_agents):
        adv = advantage_function(mmdp, ref_table, i)
        total += float(d @ np.einsum("sa,sa->s", eval_tables[i], adv))
    return total


def kl_rows(p_table: np.ndarray, q_table: np.ndarray) -> np.ndarray:
    """Per-state KL divergence between two row-stochastic tables."""
    p = np.asarray(p_table, dtype=np.float64)
    q = np.asarray(q_table, dtype=np.float64)
    if p.shape != q.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {q.shape}")
    ratio = np.zeros_like(p)
    mask = p > 0
    ratio[mask] = np.log(p[mask] / q[mask])
    return np.sum(p * ratio, axis=1)


def max_kl(p_table: np.ndarray, q_table: np.ndarray) -> float:
    """Worst-state KL divergence between two policies."""
    return float(np.max(kl_rows(p_table, q_table)))


def random_mmdp(rng: np.random.Generator, n_states: int, action_sizes,
                gamma: float) -> TabularMMDP:
    """A dense random instance: Dirichlet(1) transition rows and initial
    distribution, rewards uniform on [-1, 1]."""
    action_sizes = tuple(int(a) for a in action_sizes)
    a_joint = int(np.prod(action_sizes))
    transitions = rng.dirichlet(np.ones(n_states), size=(n_states, a_joint))
    rewards = rng.uniform(-1.0, 1.0, size=(len(action_sizes), n_states, a_joint))
    initial = rng.dirichlet(np.ones(n_states))
    return TabularMMDP(transitions, rewards, action_sizes, gamma, initial)


def random_policies(rng: np.random.Generator, mmdp: TabularMMDP) -> list:
    """One Dirichlet(1) policy table per agent."""
    return [rng.dirichlet(np.ones(a), size=mmdp.n_states)
            for a in mmdp.action_sizes]


def perturbed_policies(rng: np.random.Generator, base: list,
                       scale: float) -> list:
    """Mix each policy with an independent random one: (1-scale) p + scale q.

    scale in [0, 1]; small scales model nearby policies with finite KL in
    both directions.
    """
    if not 0.0 <= scale <= 1.0:
        raise ValueError(f"scale must be in [0, 1], got {scale}")
    out = []
    for pol in base:
        noise = rng.dirichlet(np.ones(pol.shape[1]), size=pol.shape[0])
        out.append((1.0 - scale) * pol + scale * noise)
    return out


def simulated_return(mmdp: TabularMMDP, joint_table: np.ndarray,
                     n_episodes: int, rng: np.random.Generator,
                     tail_tol: float = 1e-4) -> float:
    """Monte Carlo estimate of the collective return, for cross-checks.

    Episodes are truncated once the geometric tail of the maximal summed
    reward drops below tail_tol; all episodes run vectorized in lockstep.
    """
    max_step = float(np.abs(mmdp.rewards.sum(axis=0)).max())
    if max_step == 0.0:
        return 0.0
    horizon = int(np.ceil(np.log(tail_tol * (1 - mmdp.gamma) / max_step)
                          / np.log(mmdp.gamma))) + 1
    team_rewards = mmdp.rewards.sum(axis=0)  # (S, A_joint)

    cum_actions = np.cumsum(joint_table, axis=1)
    cum_next = np.cumsum(mmdp.transitions, axis=2)

    states = rng.choice(mmdp.n_states, size=n_episodes, p=mmdp.initial_dist)
    total = np.zeros(n_episodes)
    discount = 1.0
    for _ in range(horizon):
        u = rng.random(n_episodes)
        acts = (cum_actions[states] < u[:, None]).sum(axis=1)
        total += discount * team_rewards[states, acts]
        u = rng.random(n_episodes)
        states = (cum_next[states, acts] < u[:, None]).sum(axis=1)
        discount *= mmdp.gamma
    return float(total.mean())
