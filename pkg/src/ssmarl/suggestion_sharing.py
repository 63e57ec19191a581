"""Coupled policy updates driven by exchanged action suggestions.

Each agent keeps, besides its own policy, one suggestion net per neighbor
predicting what that neighbor should do. During an update agents exchange
snapshot distribution rows over the episode's states (SharedTables) and
ascend a coupled surrogate:

    mean_t [ min(xi_own * xi_neigh * A, clip(xi_own) * xi_neigh * A) ]
    - kappa * mean_t [ sum_{j in N_i} rho * 1[X_ij] * ||sugg_ij - behavior_j||^2
                     + sum_{j suggesting to i} rho * 1[X_ii,j] * ||own - sugg_ji||^2 ]

where xi_own is the own-action probability ratio against the agent's own
snapshot, xi_neigh the product of suggestion/behavior ratios over current
neighbors, kappa the mean absolute advantage of the batch, and the
indicator sets gate each penalty to state-action pairs where the deviating
distribution would claim an advantage improvement. Shared rows are
constants: gradients flow only into the agent's own policy and suggestion
nets. With an empty neighborhood and zero penalty weight the update reduces
exactly to the independent clipped step.
"""

from __future__ import annotations

import numpy as np

from . import nn
from .advantage import (advantage_scale, gae_advantages, returns_to_go,
                        standardized)
from .mmdp import TrajectoryBatch, rollout
from .policies import (SharedTables, SuggestionPolicySet,
                       populate_shared_tables, refresh_agent_entries)
from .ppo import RATIO_FLOOR, ascend, clipped_objective_and_grads, value_update
from .topology import CommSchedule, NeighborProtocol, adjacency_for_batch, should_communicate


def suggestion_ratios(agent: int, policy_set: SuggestionPolicySet,
                      tables: SharedTables, adjacency: np.ndarray,
                      states: np.ndarray, actions: np.ndarray):
    """Per-step own ratio and neighbor ratio product for one agent.

    Returns (xi_own, xi_neigh) of shape (T,). Steps with no active neighbors
    contribute a neighbor factor of exactly 1.
    """
    T = states.shape[0]
    idx = np.arange(T)
    a_i = actions[:, agent]
    probs = nn.policy_distribution(policy_set.agents[agent].policy, states)
    own_old = policy_set.snapshot_policy_rows(agent, states)
    xi_own = probs[idx, a_i] / np.maximum(own_old[idx, a_i], RATIO_FLOOR)

    xi_neigh = np.ones(T)
    out_mask = adjacency[:, agent, :]
    for j in range(policy_set.n_agents):
        if j == agent or not out_mask[:, j].any():
            continue
        q = nn.policy_distribution(policy_set.agents[agent].suggestions[j], states)
        b = tables.behaviors[j]
        r = q[idx, actions[:, j]] / np.maximum(b[idx, actions[:, j]], RATIO_FLOOR)
        xi_neigh *= np.where(out_mask[:, j], r, 1.0)
    return xi_own, xi_neigh


def improvement_indicator(ratio, advantages) -> np.ndarray:
    """True where scaling the advantage by `ratio` does not lower it:
    (ratio - 1) * advantage >= 0."""
    return (np.asarray(ratio) - 1.0) * np.asarray(advantages) >= 0.0


def coupled_objective_and_grads(agent: int, policy_set: SuggestionPolicySet,
                                tables: SharedTables, adjacency: np.ndarray,
                                states: np.ndarray, actions: np.ndarray,
                                advantages: np.ndarray, scale: float,
                                clip_epsilon: float, penalty_coeff: float):
    """Objective value and ascent gradients for one agent's coupled update.

    Returns (objective, policy_grads, {peer: suggestion_grads}). Indicators
    and the min() branch choice are treated as locally constant, as usual
    for clipped surrogates.
    """
    T = states.shape[0]
    i = agent
    idx = np.arange(T)
    a_i = actions[:, i]
    bundle = policy_set.agents[i]
    n = policy_set.n_agents

    probs = nn.policy_distribution(bundle.policy, states)
    own_old = policy_set.snapshot_policy_rows(i, states)
    own_denom = np.maximum(own_old[idx, a_i], RATIO_FLOOR)
    xi_own = probs[idx, a_i] / own_denom

    out_mask = adjacency[:, i, :]  # j in my neighborhood at step t
    in_mask = adjacency[:, :, i]   # I am in j's neighborhood: j suggests to me
    out_peers = [j for j in range(n) if j != i and out_mask[:, j].any()]
    in_peers = [j for j in range(n) if j != i and in_mask[:, j].any()]

    factors = np.ones((len(out_peers), T))
    sugg_probs = {}
    sugg_denoms = {}
    for k, j in enumerate(out_peers):
        q = nn.policy_distribution(bundle.suggestions[j], states)
        sugg_probs[j] = q
        b = tables.behaviors[j]
        denom = np.maximum(b[idx, actions[:, j]], RATIO_FLOOR)
        sugg_denoms[j] = denom
        r = q[idx, actions[:, j]] / denom
        factors[k] = np.where(out_mask[:, j], r, 1.0)
    xi_neigh = factors.prod(axis=0) if out_peers else np.ones(T)

    clipped = np.clip(xi_own, 1.0 - clip_epsilon, 1.0 + clip_epsilon)
    u = xi_own * xi_neigh * advantages
    v = clipped * xi_neigh * advantages
    surrogate = np.minimum(u, v)
    use_u = u <= v

    penalties = np.zeros(T)
    dprobs = np.zeros_like(probs)
    dsugg_logits = {}

    # d surrogate / d xi_neigh, constant across which factor moves
    coeff_neigh = np.where(use_u, xi_own, clipped) * advantages

    for k, j in enumerate(out_peers):
        q = sugg_probs[j]
        b = tables.behaviors[j]
        mask = out_mask[:, j]
        active = improvement_indicator(factors[k], advantages) & mask
        diff = q - b
        penalties += np.sum(diff**2, axis=1) * active

        others = np.ones(T)
        for kk in range(len(out_peers)):
            if kk != k:
                others = others * factors[kk]
        dq = np.zeros_like(q)
        dq[idx, actions[:, j]] = coeff_neigh * others * mask / sugg_denoms[j]
        dq -= scale * penalty_coeff * 2.0 * diff * active[:, None]
        dsugg_logits[j] = nn.softmax_backward(q, dq) / T

    for j in in_peers:
        g = tables.suggestions[(j, i)]
        mask = in_mask[:, j]
        r_own = probs[idx, a_i] / np.maximum(g[idx, a_i], RATIO_FLOOR)
        active = improvement_indicator(r_own, advantages) & mask
        diff = probs - g
        penalties += np.sum(diff**2, axis=1) * active
        dprobs -= scale * penalty_coeff * 2.0 * diff * active[:, None]

    objective = float(np.mean(surrogate - scale * penalty_coeff * penalties))

    dprobs[idx, a_i] += np.where(use_u, xi_neigh * advantages, 0.0) / own_denom
    dpolicy_logits = nn.softmax_backward(probs, dprobs) / T
    policy_grads = nn.backward(bundle.policy, states, dpolicy_logits)
    sugg_grads = {j: nn.backward(bundle.suggestions[j], states, dsugg_logits[j])
                  for j in out_peers}
    return objective, policy_grads, sugg_grads


class SuggestionSharingTrainer:
    """Episode loop: roll out, share snapshot rows, run coupled updates.

    Per episode: one rollout, then update_iters inner iterations. Each
    iteration consumes the tables produced at the previous sync point, runs
    every agent's policy/suggestion/value step against them (agents are
    independent within an iteration), refreshes snapshots, and re-shares.
    On episodes the schedule silences, agents update independently and
    nothing is shared.
    """

    name = "ss"

    def __init__(self, env, hyper, protocol: NeighborProtocol,
                 schedule: CommSchedule, actor_hidden, critic_hidden,
                 seed: int):
        self.env = env
        self.hyper = hyper
        self.protocol = protocol
        self.schedule = schedule
        seq = np.random.SeedSequence(seed)
        init_rng, self._topo_rng, self._ep_rng = (
            np.random.default_rng(s) for s in seq.spawn(3))
        self.policies = SuggestionPolicySet(
            env.obs_dim, env.action_sizes, actor_hidden, critic_hidden, init_rng,
            obs_scale=getattr(env, "observation_scale", 1.0))
        self.share_counts = np.zeros(env.n_agents, dtype=np.int64)

    def run_episode(self, ep_index: int) -> TrajectoryBatch:
        env, hyper = self.env, self.hyper
        batch = rollout(env, self.policies, env.horizon,
                        int(self._ep_rng.integers(2**62)))
        adjacency = adjacency_for_batch(self.protocol, env, batch.states,
                                        self._topo_rng)
        communicate = should_communicate(self.schedule, ep_index)
        tables = None
        if communicate:
            tables = populate_shared_tables(self.policies, batch.states, adjacency)
            self.share_counts += 1

        n = env.n_agents
        for _ in range(hyper.update_iters):
            for i in range(n):
                bundle = self.policies.agents[i]
                values = np.append(self.policies.values(i, batch.states), 0.0)
                raw = gae_advantages(batch.rewards[:, i], values,
                                     hyper.gamma, hyper.gae_lambda)
                # The penalty weight reads the raw advantage magnitude: while
                # the critic is uncertain the coordination penalties dominate,
                # and they relax as value estimates tighten. The surrogate
                # itself uses conditioned advantages.
                adv = standardized(raw)
                targets = returns_to_go(batch.rewards[:, i], hyper.gamma)
                if communicate:
                    _, gpol, gsugg = coupled_objective_and_grads(
                        i, self.policies, tables, adjacency, batch.states,
                        batch.actions, adv, advantage_scale(raw),
                        hyper.clip_epsilon, hyper.penalty_coeff)
                    ascend(bundle.policy, gpol, bundle.opt_policy, hyper.actor_lr)
                    for j, g in gsugg.items():
                        ascend(bundle.suggestions[j], g,
                               bundle.opt_suggestions[j], hyper.actor_lr)
                else:
                    old_rows = self.policies.snapshot_policy_rows(i, batch.states)
                    _, gpol = clipped_objective_and_grads(
                        bundle.policy, old_rows, batch.states,
                        batch.actions[:, i], adv, hyper.clip_epsilon)
                    ascend(bundle.policy, gpol, bundle.opt_policy, hyper.actor_lr)
                value_update(bundle.value, bundle.opt_value, batch.states,
                             targets, hyper.critic_lr)
                self.policies.refresh_snapshots(i)
            if communicate:
                for i in range(n):
                    refresh_agent_entries(tables, self.policies, i, batch.states)
                self.share_counts += 1
        return batch
