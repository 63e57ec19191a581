"""Per-agent network bundles plus the distribution tables agents exchange.

Each agent owns a policy net over its own actions, a value net, and (when
suggestion exchange is on) one suggestion net per peer, predicting a
distribution over that peer's actions. Frozen snapshots of the policy and
suggestion nets serve as the update references; they are refreshed once per
inner update iteration.

A SharedTables instance is what actually travels between agents during an
update: rows of snapshot action distributions evaluated on the episode's
visited states. Entries exist exactly for the directed edges of the current
topology. adjacency[i, j] reads "j is in agent i's neighborhood": along
that edge agent i receives j's own-policy rows and j's suggestion rows
about i.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import nn


@dataclass
class AgentNets:
    policy: nn.DenseNet
    value: nn.DenseNet
    suggestions: dict[int, nn.DenseNet]
    policy_snapshot: nn.DenseNet
    suggestion_snapshots: dict[int, nn.DenseNet]
    opt_policy: nn.AdamState
    opt_value: nn.AdamState
    opt_suggestions: dict[int, nn.AdamState]


class SuggestionPolicySet:
    """All agents' networks, acting with the current policy nets."""

    def __init__(self, obs_dim: int, action_sizes, actor_hidden, critic_hidden,
                 rng: np.random.Generator, with_suggestions: bool = True,
                 obs_scale: float = 1.0):
        self.obs_dim = obs_dim
        self.action_sizes = list(action_sizes)
        self.n_agents = len(self.action_sizes)
        self.agents: list[AgentNets] = []
        # Wide-range observations get the dual-scale input encoding on the
        # actor side, where decisions can hinge on fine structure near zero;
        # value nets keep plain scaled inputs.
        actor_features = obs_scale != 1.0
        for i in range(self.n_agents):
            policy = nn.init_net((obs_dim, *actor_hidden, self.action_sizes[i]),
                                 rng, input_scale=obs_scale,
                                 bounded_features=actor_features)
            value = nn.init_net((obs_dim, *critic_hidden, 1), rng,
                                input_scale=obs_scale)
            suggestions = {}
            if with_suggestions:
                for j in range(self.n_agents):
                    if j != i:
                        suggestions[j] = nn.init_net(
                            (obs_dim, *actor_hidden, self.action_sizes[j]),
                            rng, input_scale=obs_scale,
                            bounded_features=actor_features)
            self.agents.append(AgentNets(
                policy=policy,
                value=value,
                suggestions=suggestions,
                policy_snapshot=nn.clone_net(policy),
                suggestion_snapshots={j: nn.clone_net(net)
                                      for j, net in suggestions.items()},
                opt_policy=nn.adam_init(policy),
                opt_value=nn.adam_init(value),
                opt_suggestions={j: nn.adam_init(net)
                                 for j, net in suggestions.items()},
            ))

    def action_distribution(self, agent: int, observation) -> np.ndarray:
        return nn.policy_distribution(self.agents[agent].policy, observation)

    def policy_rows(self, agent: int, states) -> np.ndarray:
        return nn.policy_distribution(self.agents[agent].policy, states)

    def snapshot_policy_rows(self, agent: int, states) -> np.ndarray:
        return nn.policy_distribution(self.agents[agent].policy_snapshot, states)

    def suggestion_rows(self, agent: int, peer: int, states) -> np.ndarray:
        return nn.policy_distribution(self.agents[agent].suggestions[peer], states)

    def snapshot_suggestion_rows(self, agent: int, peer: int, states) -> np.ndarray:
        return nn.policy_distribution(
            self.agents[agent].suggestion_snapshots[peer], states)

    def values(self, agent: int, states) -> np.ndarray:
        return nn.forward(self.agents[agent].value, states)[:, 0]

    def refresh_snapshots(self, agent: int) -> None:
        a = self.agents[agent]
        nn.copy_params_into(a.policy_snapshot, a.policy)
        for j, net in a.suggestions.items():
            nn.copy_params_into(a.suggestion_snapshots[j], net)


@dataclass
class SharedTables:
    """Exchanged snapshot distributions over one episode's states.

    behaviors[j][t] is agent j's own-policy snapshot distribution at step t,
    available to every agent whose neighborhood contains j. suggestions[(j, i)]
    holds j's suggested distribution over agent i's actions, available to i.
    """

    behaviors: dict[int, np.ndarray]
    suggestions: dict[tuple[int, int], np.ndarray]


def populate_shared_tables(policy_set: SuggestionPolicySet, states,
                           adjacency: np.ndarray) -> SharedTables:
    """Evaluate every edge's snapshot rows on the episode states.

    adjacency is the per-step stack (T, n, n). behaviors[j] exists when some
    agent has j in its neighborhood at some step; suggestions[(j, i)] when
    agent j's neighborhood contains i at some step (j shares its suggestion
    about i with i).
    """
    any_edge = adjacency.any(axis=0)  # (n, n): i has j as neighbor somewhere
    behaviors: dict[int, np.ndarray] = {}
    suggestions: dict[tuple[int, int], np.ndarray] = {}
    for j in range(policy_set.n_agents):
        if any_edge[:, j].any():
            behaviors[j] = policy_set.snapshot_policy_rows(j, states)
        for i in range(policy_set.n_agents):
            if i != j and any_edge[j, i]:
                suggestions[(j, i)] = policy_set.snapshot_suggestion_rows(j, i, states)
    return SharedTables(behaviors, suggestions)


def refresh_agent_entries(tables: SharedTables, policy_set: SuggestionPolicySet,
                          agent: int, states) -> None:
    """Re-evaluate one agent's outgoing rows after its snapshots changed."""
    if agent in tables.behaviors:
        tables.behaviors[agent] = policy_set.snapshot_policy_rows(agent, states)
    for (j, i) in list(tables.suggestions):
        if j == agent:
            tables.suggestions[(j, i)] = policy_set.snapshot_suggestion_rows(j, i, states)
