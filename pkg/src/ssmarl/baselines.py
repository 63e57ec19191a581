"""Reference schemes that share something other than suggestions.

All of them run the same episode skeleton as the suggestion-sharing
trainer (one rollout, a fixed number of inner clipped-surrogate
iterations, Adam) and differ only in what crosses the wire:

  ippo  nothing; fully independent learners (control)
  vps   value-net parameters, averaged uniformly over {self} + neighbors
  vs    value estimates, averaged per step over the step's neighborhood
  ps    policy parameters: every agent keeps a bank with one policy per
        agent index, steps each bank slot on its own advantages, then
        averages each slot across the neighborhood
  cl    a single central critic trained on the summed reward
  imr   independent learners on rewards shaped by a hand-built
        per-environment cooperation signal

Sharing steps follow the same episode schedule as the suggestion trainer;
on silent episodes every scheme behaves like ippo for that episode. The
central-critic scheme has no wire traffic to silence, so the schedule
does not apply to it.
"""

from __future__ import annotations

import numpy as np

from . import nn
from .advantage import (advantage_scale, gae_advantages, returns_to_go,
                        standardized)
from .envs.cleanup import cleaning_flags
from .envs.harvest import restraint_flags
from .envs.predation import cooperation_flags
from .mmdp import TrajectoryBatch, rollout
from .policies import SuggestionPolicySet
from .ppo import ascend, clipped_objective_and_grads, value_update
from .topology import (CommSchedule, NeighborProtocol, adjacency_for_batch,
                       episode_union, should_communicate)


class UnsupportedEnvironmentError(ValueError):
    """An algorithm has no defined behavior on the requested environment."""


def intrinsic_flags(env, batch: TrajectoryBatch) -> np.ndarray:
    """Per-step 0/1 cooperation markers used as intrinsic reward bonuses.

    Each environment gets a hand-built notion of a virtuous act: chasing
    the prey, stepping onto waste, or leaving a reachable apple alone.
    Raises UnsupportedEnvironmentError where no such notion is defined.
    """
    if env.kind == "predation":
        return cooperation_flags(batch.states, batch.next_states).astype(np.float64)
    if env.kind == "cleanup":
        return cleaning_flags(batch.states, batch.next_states, env.n_agents)
    if env.kind == "harvest":
        return restraint_flags(batch.states, batch.next_states, env.n_agents)
    raise UnsupportedEnvironmentError(
        f"no intrinsic cooperation signal defined for {env.kind!r}")


def neighborhood_value_means(all_values: np.ndarray,
                             adjacency: np.ndarray) -> np.ndarray:
    """Per-step mean of each agent's own value and its neighbors' values.

    all_values is (n, T) with all_values[j, t] = V_j(s_t); adjacency is the
    (T, n, n) per-step edge set. Returns (n, T).
    """
    n = all_values.shape[0]
    member = np.asarray(adjacency).transpose(1, 0, 2).astype(np.float64)
    member[np.arange(n), :, np.arange(n)] = 1.0
    pooled = np.einsum("itj,jt->it", member, all_values)
    return pooled / member.sum(axis=2)


def consensus_matrix(adjacency_union: np.ndarray) -> np.ndarray:
    """Row-stochastic mixing weights: uniform over each agent and its
    neighborhood. adjacency_union is the (n, n) boolean edge set."""
    a = np.asarray(adjacency_union, dtype=np.float64).copy()
    np.fill_diagonal(a, 1.0)
    return a / a.sum(axis=1, keepdims=True)


def mix_many_nets(nets: list, mix: np.ndarray) -> None:
    """Replace nets[i] parameters with sum_j mix[i, j] * nets[j] in place.

    All reads happen before any write, so the result does not depend on
    agent order (a synchronization barrier).
    """
    n = len(nets)
    new_weights = []
    new_biases = []
    for i in range(n):
        ws = [np.zeros_like(w) for w in nets[i].weights]
        bs = [np.zeros_like(b) for b in nets[i].biases]
        for j in range(n):
            if mix[i, j] == 0.0:
                continue
            for k in range(len(ws)):
                ws[k] += mix[i, j] * nets[j].weights[k]
                bs[k] += mix[i, j] * nets[j].biases[k]
        new_weights.append(ws)
        new_biases.append(bs)
    for i in range(n):
        for k in range(len(new_weights[i])):
            nets[i].weights[k][:] = new_weights[i][k]
            nets[i].biases[k][:] = new_biases[i][k]


class _TrainerCore:
    """Shared plumbing: nets, rngs, rollout, and the independent step."""

    def __init__(self, env, hyper, protocol: NeighborProtocol,
                 schedule: CommSchedule, actor_hidden, critic_hidden,
                 seed: int, with_suggestions: bool = False):
        self.env = env
        self.hyper = hyper
        self.protocol = protocol
        self.schedule = schedule
        seq = np.random.SeedSequence(seed)
        init_rng, self._topo_rng, self._ep_rng = (
            np.random.default_rng(s) for s in seq.spawn(3))
        self.policies = SuggestionPolicySet(
            env.obs_dim, env.action_sizes, actor_hidden, critic_hidden,
            init_rng, with_suggestions=with_suggestions,
            obs_scale=getattr(env, "observation_scale", 1.0))

    def _rollout(self) -> TrajectoryBatch:
        return rollout(self.env, self.policies, self.env.horizon,
                       int(self._ep_rng.integers(2**62)))

    def _adjacency(self, batch: TrajectoryBatch) -> np.ndarray:
        return adjacency_for_batch(self.protocol, self.env, batch.states,
                                   self._topo_rng)

    def _agent_advantages(self, batch: TrajectoryBatch, agent: int,
                          rewards=None) -> np.ndarray:
        r = batch.rewards[:, agent] if rewards is None else rewards
        values = np.append(self.policies.values(agent, batch.states), 0.0)
        return standardized(gae_advantages(r, values, self.hyper.gamma,
                                           self.hyper.gae_lambda))

    def _policy_step(self, agent: int, batch: TrajectoryBatch,
                     advantages: np.ndarray) -> None:
        bundle = self.policies.agents[agent]
        old_rows = self.policies.snapshot_policy_rows(agent, batch.states)
        _, grads = clipped_objective_and_grads(
            bundle.policy, old_rows, batch.states, batch.actions[:, agent],
            advantages, self.hyper.clip_epsilon)
        ascend(bundle.policy, grads, bundle.opt_policy, self.hyper.actor_lr)

    def _value_step(self, agent: int, batch: TrajectoryBatch,
                    rewards=None) -> float:
        r = batch.rewards[:, agent] if rewards is None else rewards
        targets = returns_to_go(r, self.hyper.gamma)
        bundle = self.policies.agents[agent]
        return value_update(bundle.value, bundle.opt_value, batch.states,
                            targets, self.hyper.critic_lr)

    def _independent_iteration(self, batch: TrajectoryBatch,
                               rewards=None) -> None:
        for i in range(self.env.n_agents):
            r = None if rewards is None else rewards[:, i]
            adv = self._agent_advantages(batch, i, rewards=r)
            self._policy_step(i, batch, adv)
            self._value_step(i, batch, rewards=r)
            self.policies.refresh_snapshots(i)


class IndependentTrainer(_TrainerCore):
    """Plain independent clipped-surrogate learners."""

    name = "ippo"

    def run_episode(self, ep_index: int) -> TrajectoryBatch:
        batch = self._rollout()
        for _ in range(self.hyper.update_iters):
            self._independent_iteration(batch)
        return batch


class IntrinsicRewardTrainer(_TrainerCore):
    """Independent learners on externally shaped rewards.

    Training sees reward + imr_beta * cooperation flag; the returned batch
    keeps the raw external rewards so evaluation is not flattered by the
    bonus.
    """

    name = "imr"

    def __init__(self, env, hyper, protocol, schedule, actor_hidden,
                 critic_hidden, seed):
        if env.kind == "navigation":
            raise UnsupportedEnvironmentError(
                "no intrinsic cooperation signal defined for 'navigation'")
        super().__init__(env, hyper, protocol, schedule, actor_hidden,
                         critic_hidden, seed)

    def run_episode(self, ep_index: int) -> TrajectoryBatch:
        batch = self._rollout()
        shaped = batch.rewards + self.hyper.imr_beta * intrinsic_flags(self.env, batch)
        for _ in range(self.hyper.update_iters):
            self._independent_iteration(batch, rewards=shaped)
        return batch


class ValueParamSharingTrainer(_TrainerCore):
    """Average value-net parameters across neighborhoods each iteration."""

    name = "vps"

    def run_episode(self, ep_index: int) -> TrajectoryBatch:
        batch = self._rollout()
        communicate = should_communicate(self.schedule, ep_index)
        if communicate:
            union = episode_union(self._adjacency(batch))
            mix = consensus_matrix(union)
        for _ in range(self.hyper.update_iters):
            for i in range(self.env.n_agents):
                self._value_step(i, batch)
            if communicate:
                mix_many_nets([b.value for b in self.policies.agents], mix)
            for i in range(self.env.n_agents):
                adv = self._agent_advantages(batch, i)
                self._policy_step(i, batch, adv)
                self.policies.refresh_snapshots(i)
        return batch


class ValueSharingTrainer(_TrainerCore):
    """Average value *estimates* over each step's neighborhood.

    Advantages for agent i use the per-step mean of V_j(s_t) over agents j
    in i's neighborhood at t (plus itself); regression targets stay the
    agent's own returns.
    """

    name = "vs"

    def run_episode(self, ep_index: int) -> TrajectoryBatch:
        batch = self._rollout()
        communicate = should_communicate(self.schedule, ep_index)
        n = self.env.n_agents
        adjacency = self._adjacency(batch) if communicate else None
        for _ in range(self.hyper.update_iters):
            if communicate:
                all_values = np.stack(
                    [self.policies.values(j, batch.states) for j in range(n)])
                pooled = neighborhood_value_means(all_values, adjacency)
            for i in range(n):
                if communicate:
                    values = np.append(pooled[i], 0.0)
                    adv = standardized(gae_advantages(
                        batch.rewards[:, i], values,
                        self.hyper.gamma, self.hyper.gae_lambda))
                else:
                    adv = self._agent_advantages(batch, i)
                self._policy_step(i, batch, adv)
                self._value_step(i, batch)
                self.policies.refresh_snapshots(i)
        return batch


class CentralCriticTrainer(_TrainerCore):
    """One central critic on the summed reward; everyone shares its
    advantages. The most centralized point of comparison."""

    name = "cl"

    def __init__(self, env, hyper, protocol, schedule, actor_hidden,
                 critic_hidden, seed):
        super().__init__(env, hyper, protocol, schedule, actor_hidden,
                         critic_hidden, seed)
        # Child 3 of the same root sequence; children 0-2 feed the core.
        rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(4)[3])
        sizes = (env.obs_dim, *critic_hidden, 1)
        self.central_value = nn.init_net(
            sizes, rng, input_scale=getattr(env, "observation_scale", 1.0))
        self.central_opt = nn.adam_init(self.central_value)

    def run_episode(self, ep_index: int) -> TrajectoryBatch:
        batch = self._rollout()
        team = batch.rewards.sum(axis=1)
        targets = returns_to_go(team, self.hyper.gamma)
        for _ in range(self.hyper.update_iters):
            values = np.append(nn.forward(self.central_value, batch.states)[:, 0], 0.0)
            adv = standardized(gae_advantages(team, values, self.hyper.gamma,
                                              self.hyper.gae_lambda))
            for i in range(self.env.n_agents):
                self._policy_step(i, batch, adv)
                self.policies.refresh_snapshots(i)
            value_update(self.central_value, self.central_opt, batch.states,
                         targets, self.hyper.critic_lr)
        return batch


class PolicyBankSet:
    """Per-agent banks of policy nets: bank[i][k] is agent i's local copy
    of "the" policy for agent index k. Agent i acts with its own slot."""

    def __init__(self, obs_dim, action_sizes, actor_hidden, critic_hidden, rng,
                 obs_scale: float = 1.0):
        self.obs_dim = obs_dim
        self.action_sizes = [int(a) for a in action_sizes]
        self.n_agents = len(self.action_sizes)
        self.banks = []
        self.snapshots = []
        self.opt_banks = []
        self.values = []
        self.opt_values = []
        actor_features = obs_scale != 1.0
        for i in range(self.n_agents):
            row = [nn.init_net((obs_dim, *actor_hidden, a), rng,
                               input_scale=obs_scale,
                               bounded_features=actor_features)
                   for a in self.action_sizes]
            self.banks.append(row)
            self.snapshots.append([nn.clone_net(nn_) for nn_ in row])
            self.opt_banks.append([nn.adam_init(nn_) for nn_ in row])
            self.values.append(nn.init_net((obs_dim, *critic_hidden, 1), rng,
                                           input_scale=obs_scale))
            self.opt_values.append(nn.adam_init(self.values[i]))

    def action_distribution(self, agent: int, observation) -> np.ndarray:
        return nn.policy_distribution(self.banks[agent][agent], observation)

    def refresh_snapshots(self, agent: int) -> None:
        for k in range(self.n_agents):
            nn.copy_params_into(self.snapshots[agent][k], self.banks[agent][k])


class PolicySharingTrainer:
    """Average whole policy banks across neighborhoods each iteration.

    Every agent steps all n slots of its bank on its *own* advantages
    (slot k against agent k's logged actions), then each slot is averaged
    uniformly over the neighborhood. Critics stay private.
    """

    name = "ps"

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
        self.policies = PolicyBankSet(
            env.obs_dim, env.action_sizes, actor_hidden, critic_hidden,
            init_rng, obs_scale=getattr(env, "observation_scale", 1.0))

    def run_episode(self, ep_index: int) -> TrajectoryBatch:
        hyper = self.hyper
        batch = rollout(self.env, self.policies, self.env.horizon,
                        int(self._ep_rng.integers(2**62)))
        communicate = should_communicate(self.schedule, ep_index)
        if communicate:
            adjacency = adjacency_for_batch(self.protocol, self.env,
                                            batch.states, self._topo_rng)
            mix = consensus_matrix(episode_union(adjacency))
        n = self.env.n_agents
        ps = self.policies
        for _ in range(hyper.update_iters):
            for i in range(n):
                values = np.append(
                    nn.forward(ps.values[i], batch.states)[:, 0], 0.0)
                adv = standardized(gae_advantages(batch.rewards[:, i], values,
                                                  hyper.gamma, hyper.gae_lambda))
                for k in range(n):
                    old_rows = nn.policy_distribution(ps.snapshots[i][k],
                                                      batch.states)
                    _, grads = clipped_objective_and_grads(
                        ps.banks[i][k], old_rows, batch.states,
                        batch.actions[:, k], adv, hyper.clip_epsilon)
                    ascend(ps.banks[i][k], grads, ps.opt_banks[i][k],
                           hyper.actor_lr)
                targets = returns_to_go(batch.rewards[:, i], hyper.gamma)
                value_update(ps.values[i], ps.opt_values[i], batch.states,
                             targets, hyper.critic_lr)
            if communicate:
                for k in range(n):
                    mix_many_nets([ps.banks[i][k] for i in range(n)], mix)
            for i in range(n):
                ps.refresh_snapshots(i)
        return batch
