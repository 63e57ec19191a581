"""Tests for the non-suggestion sharing schemes and their consensus math."""

import numpy as np
import pytest

from ssmarl import baselines as bl
from ssmarl import nn
from ssmarl.config import Hyper
from ssmarl.envs import make_env
from ssmarl.envs.predation import cooperation_flags
from ssmarl.mmdp import rollout, UniformPolicySet
from ssmarl.topology import CommSchedule, NeighborProtocol

ALL_TRAINERS = (bl.IndependentTrainer, bl.ValueParamSharingTrainer,
                bl.ValueSharingTrainer, bl.CentralCriticTrainer,
                bl.PolicySharingTrainer, bl.IntrinsicRewardTrainer)


def make_trainer(cls, kind="predation", n=3, seed=0, period=1, iters=2,
                 protocol=None):
    env = make_env(kind, n_agents=n, horizon=8)
    hyper = Hyper(update_iters=iters, actor_lr=1e-3, critic_lr=1e-3)
    return cls(env, hyper, protocol or NeighborProtocol("full"),
               CommSchedule(period=period), (8, 6), (8, 6), seed=seed)


# ---------------------------------------------------------------- consensus

def test_consensus_matrix_rows_are_uniform_over_neighborhoods():
    adj = np.array([[0, 1, 1],
                    [0, 0, 0],
                    [1, 0, 0]], dtype=bool)
    mix = bl.consensus_matrix(adj)
    np.testing.assert_allclose(mix[0], [1 / 3, 1 / 3, 1 / 3])
    np.testing.assert_allclose(mix[1], [0.0, 1.0, 0.0])
    np.testing.assert_allclose(mix[2], [0.5, 0.0, 0.5])
    np.testing.assert_allclose(mix.sum(axis=1), np.ones(3))


def test_full_graph_consensus_averages_everything():
    adj = ~np.eye(4, dtype=bool)
    mix = bl.consensus_matrix(adj)
    np.testing.assert_allclose(mix, np.full((4, 4), 0.25))


def test_mix_many_nets_is_a_barrier_average():
    # With uniform weights both nets must land on the exact mean of the
    # originals; sequential in-place mixing would give (w0 + 3 w1) / 4
    # for the second net instead.
    rng = np.random.default_rng(0)
    a = nn.init_net((2, 3, 2), rng)
    b = nn.init_net((2, 3, 2), rng)
    want = [(wa + wb) / 2 for wa, wb in zip(a.weights, b.weights)]
    bl.mix_many_nets([a, b], np.full((2, 2), 0.5))
    for got_a, got_b, w in zip(a.weights, b.weights, want):
        np.testing.assert_array_equal(got_a, got_b)
        np.testing.assert_allclose(got_a, w, rtol=1e-15)


def test_identity_mix_changes_nothing():
    rng = np.random.default_rng(1)
    nets = [nn.init_net((2, 4, 2), rng) for _ in range(3)]
    before = [[w.copy() for w in net.weights] for net in nets]
    bl.mix_many_nets(nets, np.eye(3))
    for net, old in zip(nets, before):
        for w, ow in zip(net.weights, old):
            np.testing.assert_array_equal(w, ow)


def test_doubly_stochastic_mix_preserves_parameter_mean():
    rng = np.random.default_rng(2)
    nets = [nn.init_net((3, 5, 2), rng) for _ in range(4)]
    mean_before = sum(net.weights[0] for net in nets) / 4
    bl.mix_many_nets(nets, bl.consensus_matrix(~np.eye(4, dtype=bool)))
    mean_after = sum(net.weights[0] for net in nets) / 4
    np.testing.assert_allclose(mean_after, mean_before, atol=1e-15)


def test_neighborhood_value_means_matches_loop_oracle():
    rng = np.random.default_rng(3)
    n, T = 4, 6
    all_values = rng.normal(size=(n, T))
    adjacency = rng.random((T, n, n)) < 0.4
    for t in range(T):
        np.fill_diagonal(adjacency[t], False)
    got = bl.neighborhood_value_means(all_values, adjacency)
    for i in range(n):
        for t in range(T):
            members = [i] + [j for j in range(n) if adjacency[t, i, j]]
            want = np.mean([all_values[j, t] for j in members])
            assert got[i, t] == pytest.approx(want, rel=1e-12)


# ----------------------------------------------------------- intrinsic flags

def test_intrinsic_flags_dispatch():
    env = make_env("predation", n_agents=2, horizon=6)
    batch = rollout(env, UniformPolicySet(env.action_sizes), 6, seed=0)
    flags = bl.intrinsic_flags(env, batch)
    np.testing.assert_array_equal(
        flags, cooperation_flags(batch.states, batch.next_states).astype(float))

    for kind in ("cleanup", "harvest"):
        env = make_env(kind, n_agents=2, horizon=6)
        batch = rollout(env, UniformPolicySet(env.action_sizes), 6, seed=0)
        flags = bl.intrinsic_flags(env, batch)
        assert flags.shape == (6, 2)
        assert set(np.unique(flags)) <= {0.0, 1.0}

    env = make_env("navigation", n_agents=2, horizon=6)
    batch = rollout(env, UniformPolicySet(env.action_sizes), 6, seed=0)
    with pytest.raises(bl.UnsupportedEnvironmentError):
        bl.intrinsic_flags(env, batch)


def test_intrinsic_trainer_refuses_navigation_up_front():
    with pytest.raises(bl.UnsupportedEnvironmentError):
        make_trainer(bl.IntrinsicRewardTrainer, kind="navigation")


def test_zero_bonus_reduces_to_independent_training():
    env_a = make_env("predation", n_agents=2, horizon=8)
    env_b = make_env("predation", n_agents=2, horizon=8)
    hyper0 = Hyper(update_iters=2, actor_lr=1e-3, critic_lr=1e-3, imr_beta=0.0)
    proto, sched = NeighborProtocol("full"), CommSchedule(1)
    imr = bl.IntrinsicRewardTrainer(env_a, hyper0, proto, sched, (8, 6), (8, 6), 5)
    ippo = bl.IndependentTrainer(env_b, hyper0, proto, sched, (8, 6), (8, 6), 5)
    for ep in range(2):
        ba = imr.run_episode(ep)
        bb = ippo.run_episode(ep)
        np.testing.assert_array_equal(ba.rewards, bb.rewards)
    for x, y in zip(imr.policies.agents, ippo.policies.agents):
        for wx, wy in zip(x.policy.weights, y.policy.weights):
            np.testing.assert_array_equal(wx, wy)


def test_positive_bonus_changes_training():
    imr = make_trainer(bl.IntrinsicRewardTrainer, seed=5)
    ippo = make_trainer(bl.IndependentTrainer, seed=5)
    imr.run_episode(0)
    ippo.run_episode(0)
    same = all(np.array_equal(wx, wy)
               for x, y in zip(imr.policies.agents, ippo.policies.agents)
               for wx, wy in zip(x.policy.weights, y.policy.weights))
    assert not same


def test_shaped_rewards_never_leak_into_the_batch():
    imr = make_trainer(bl.IntrinsicRewardTrainer, seed=6)
    batch = imr.run_episode(0)
    env = make_env("predation", n_agents=3, horizon=8)
    replay = rollout(env, _Replay(batch), 8, seed=batch.seed)
    np.testing.assert_array_equal(batch.rewards, replay.rewards)


class _Replay:
    """Deterministic policy set that replays a logged batch's behavior."""

    def __init__(self, batch):
        self.batch = batch
        self._t = [0] * batch.actions.shape[1]

    def action_distribution(self, agent, observation):
        t = self._t[agent]
        self._t[agent] += 1
        return self.batch.behavior[agent][t]


# ----------------------------------------------------------------- trainers

def test_value_param_sharing_syncs_value_nets_on_full_graph():
    tr = make_trainer(bl.ValueParamSharingTrainer, seed=7)
    tr.run_episode(0)
    w0 = tr.policies.agents[0].value.weights
    for bundle in tr.policies.agents[1:]:
        for wa, wb in zip(w0, bundle.value.weights):
            np.testing.assert_array_equal(wa, wb)


def test_value_param_sharing_single_agent_neighborhoods_stay_private():
    # Zero-radius distance protocol: no edges, so no mixing.
    tr = make_trainer(bl.ValueParamSharingTrainer, seed=7,
                      protocol=NeighborProtocol("distance", radius=1e-9))
    tr.run_episode(0)
    w0 = tr.policies.agents[0].value.weights[0]
    w1 = tr.policies.agents[1].value.weights[0]
    assert not np.array_equal(w0, w1)


def test_policy_sharing_syncs_banks_on_full_graph():
    tr = make_trainer(bl.PolicySharingTrainer, seed=8)
    tr.run_episode(0)
    for k in range(3):
        ref = tr.policies.banks[0][k].weights
        for i in (1, 2):
            for wa, wb in zip(ref, tr.policies.banks[i][k].weights):
                np.testing.assert_array_equal(wa, wb)


def test_policy_sharing_silent_episodes_diverge():
    tr = make_trainer(bl.PolicySharingTrainer, seed=8, period=2)
    tr.run_episode(0)   # communicates: banks end synced
    tr.run_episode(1)   # silent: independent steps, no consensus
    w0 = tr.policies.banks[0][0].weights[0]
    w1 = tr.policies.banks[1][0].weights[0]
    assert not np.array_equal(w0, w1)


def test_central_critic_leaves_private_critics_untouched():
    tr = make_trainer(bl.CentralCriticTrainer, seed=9)
    before_private = [w.copy() for w in tr.policies.agents[0].value.weights]
    before_central = [w.copy() for w in tr.central_value.weights]
    tr.run_episode(0)
    for old, new in zip(before_private, tr.policies.agents[0].value.weights):
        np.testing.assert_array_equal(old, new)
    changed = any(not np.array_equal(o, n) for o, n in
                  zip(before_central, tr.central_value.weights))
    assert changed


@pytest.mark.parametrize("cls", ALL_TRAINERS, ids=lambda c: c.name)
def test_trainers_are_deterministic(cls):
    a = make_trainer(cls, seed=42)
    b = make_trainer(cls, seed=42)
    for ep in range(2):
        ba = a.run_episode(ep)
        bb = b.run_episode(ep)
        np.testing.assert_array_equal(ba.actions, bb.actions)
        np.testing.assert_array_equal(ba.rewards, bb.rewards)
    if cls is bl.PolicySharingTrainer:
        wa = a.policies.banks[1][2].weights[0]
        wb = b.policies.banks[1][2].weights[0]
    else:
        wa = a.policies.agents[1].policy.weights[0]
        wb = b.policies.agents[1].policy.weights[0]
    np.testing.assert_array_equal(wa, wb)


@pytest.mark.parametrize("cls", ALL_TRAINERS, ids=lambda c: c.name)
def test_trainers_update_acting_policies(cls):
    tr = make_trainer(cls, seed=11)
    if cls is bl.PolicySharingTrainer:
        before = [w.copy() for w in tr.policies.banks[0][0].weights]
        tr.run_episode(0)
        after = tr.policies.banks[0][0].weights
    else:
        before = [w.copy() for w in tr.policies.agents[0].policy.weights]
        tr.run_episode(0)
        after = tr.policies.agents[0].policy.weights
    assert any(not np.array_equal(b, a) for b, a in zip(before, after))
