"""Environment dynamics tests: reward tables, dilemma structure, regrowth
rules, rendering, determinism."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ssmarl import mmdp
from ssmarl.envs import ENV_KINDS, make_env
from ssmarl.envs.predation import (action_toward_prey, classify_rewards,
                                   cooperation_flags)


def predation_reward_oracle(flags):
    """Independent restatement of the pursuit reward table."""
    n = len(flags)
    k = sum(flags)
    if k == n:
        return [-1.0] * n
    if k == 0:
        return [-(2.0 * n - 1.0)] * n
    return [-2.0 * n if f else 0.0 for f in flags]


# ------------------------------------------------------------- predation

def test_predation_reward_table_two_agents():
    assert np.array_equal(classify_rewards([True, True]), [-1.0, -1.0])
    assert np.array_equal(classify_rewards([False, False]), [-3.0, -3.0])
    assert np.array_equal(classify_rewards([True, False]), [-4.0, 0.0])
    assert np.array_equal(classify_rewards([False, True]), [0.0, -4.0])


def test_predation_reward_table_eight_agents_all_defect():
    assert np.array_equal(classify_rewards([False] * 8), [-15.0] * 8)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_predation_dilemma_structure_exhaustive(n):
    # social dilemma: total reward is uniquely maximized by everyone
    # cooperating, yet each agent strictly gains by unilaterally defecting
    profiles = [[(mask >> i) & 1 == 1 for i in range(n)]
                for mask in range(2**n)]
    totals = {}
    for flags in profiles:
        r = classify_rewards(flags)
        assert np.array_equal(r, predation_reward_oracle(flags))
        totals[tuple(flags)] = float(np.sum(r))
    all_c = tuple([True] * n)
    for prof, tot in totals.items():
        if prof != all_c:
            assert tot < totals[all_c]
    for flags in profiles:
        for i in range(n):
            if flags[i]:
                flipped = list(flags)
                flipped[i] = False
                gain = (classify_rewards(flipped)[i]
                        - classify_rewards(flags)[i])
                assert gain > 0


def test_predation_env_step_rewards_and_observation():
    env = make_env("predation", n_agents=2)
    env.reset(np.random.default_rng(0))
    env._prey = 10.0
    env._positions = np.array([14.0, 4.0])
    out = env.step([0, 1])  # both move toward the prey
    assert np.array_equal(out.rewards, [-1.0, -1.0])
    assert np.allclose(out.next_state.observation, [3.0, -5.0])
    out = env.step([1, 0])  # both move away
    assert np.array_equal(out.rewards, [-3.0, -3.0])


def test_predation_clamped_wall_move_counts_as_defection():
    env = make_env("predation", n_agents=2)
    env.reset(np.random.default_rng(0))
    env._prey = 15.0
    env._positions = np.array([0.0, 20.0])
    out = env.step([0, 0])  # agent 0 is pinned at the wall, agent 1 approaches
    assert np.array_equal(out.rewards, [0.0, -4.0])


def test_predation_crossing_the_prey_still_counts_as_pursuit():
    env = make_env("predation", n_agents=2)
    env.reset(np.random.default_rng(0))
    env._prey = 10.0
    env._positions = np.array([10.5, 20.0])
    # agent 0 overshoots the prey (10.5 -> 9.5) but was heading at it
    out = env.step([0, 0])
    assert np.array_equal(out.rewards, [-1.0, -1.0])


def test_predation_agent_on_the_prey_has_no_pursuing_move():
    env = make_env("predation", n_agents=2)
    env.reset(np.random.default_rng(0))
    env._prey = 10.0
    env._positions = np.array([10.0, 20.0])
    out = env.step([0, 0])  # agent 0 sits on the prey: defect either way
    assert np.array_equal(out.rewards, [0.0, -4.0])


def test_cooperation_flags_from_transition():
    before = np.array([3.0, -0.2])
    after = np.array([2.0, -1.2])
    assert np.array_equal(cooperation_flags(before, after), [True, False])


def test_action_toward_prey_directions_and_dead_zone():
    obs = np.array([5.0, -5.0, 0.3, -0.3, 0.0])
    assert np.array_equal(action_toward_prey(obs), [0, 1, -1, -1, -1])


def test_predation_horizon_and_episode_end():
    env = make_env("predation", n_agents=2)
    env.reset(np.random.default_rng(1))
    for t in range(30):
        out = env.step([0, 1])
    assert out.terminal
    with pytest.raises(RuntimeError):
        env.step([0, 1])


# --------------------------------------------------------------- cleanup

def test_cleanup_reset_layout_counts():
    env = make_env("cleanup")
    env.reset(np.random.default_rng(3))
    assert env.river_capacity == 33
    assert int(env._waste.sum()) == int(0.5 * 33)
    assert not env._waste[:, 3:].any()  # waste only in the river
    assert not env._apples[:, :3].any()  # apples only in the orchard


def test_cleanup_eating_an_apple_pays_one_and_clears_cell():
    env = make_env("cleanup", n_agents=1)
    env.reset(np.random.default_rng(5))
    env._cells = np.array([[5, 10]])
    env._apples[:, :] = False
    env._apples[5, 11] = True
    out = env.step([3])  # move right onto the apple
    assert out.rewards[0] == 1.0
    assert not env._apples[5, 11]


def test_cleanup_cleaning_waste_pays_nothing_and_clears_cell():
    env = make_env("cleanup", n_agents=1)
    env.reset(np.random.default_rng(5))
    env._cells = np.array([[4, 3]])
    env._waste[:, :] = False
    env._waste[4, 2] = True
    env._waste_accrued = 0.0
    out = env.step([2])  # move left into the river
    assert out.rewards[0] == 0.0
    assert not env._waste[4, 2]


def test_cleanup_spawn_rate_linear_in_waste_density():
    env = make_env("cleanup")
    env.reset(np.random.default_rng(7))
    env._waste[:, :] = False
    assert env.apple_spawn_rate() == pytest.approx(0.05)
    # half the threshold: rate halves
    env._waste[:, :] = False
    cells = [(r, c) for r in range(11) for c in range(3)]
    for r, c in cells[:int(0.2 * 33)]:
        env._waste[r, c] = True
    density = env.waste_density()
    expected = 0.05 * (1.0 - density / 0.4)
    assert env.apple_spawn_rate() == pytest.approx(expected)


def test_cleanup_no_spawning_at_or_above_threshold():
    env = make_env("cleanup", n_agents=1)
    env.reset(np.random.default_rng(9))
    env._waste[:, :] = False
    cells = [(r, c) for r in range(11) for c in range(3)]
    for r, c in cells[:14]:  # 14/33 > 0.4
        env._waste[r, c] = True
    assert env.apple_spawn_rate() == 0.0
    before = int(env._apples.sum())
    for _ in range(50):
        env._spawn_apples()
    assert int(env._apples.sum()) == before


def test_cleanup_waste_accrues_half_unit_per_step():
    env = make_env("cleanup", n_agents=1)
    env.reset(np.random.default_rng(11))
    env._cells = np.array([[5, 10]])
    env._apples[:, :] = False
    env._waste_accrued = 0.0
    start = int(env._waste.sum())
    env.step([4])  # stay
    assert int(env._waste.sum()) == start
    env.step([4])
    assert int(env._waste.sum()) == start + 1


@settings(deadline=None, max_examples=10)
@given(st.integers(min_value=0, max_value=10_000))
def test_cleanup_waste_density_stays_in_unit_interval(seed):
    env = make_env("cleanup", n_agents=2, horizon=40)
    policies = mmdp.UniformPolicySet(env.action_sizes)
    mmdp.rollout(env, policies, horizon=40, seed=seed)
    assert 0.0 <= env.waste_density() <= 1.0
    assert int(env._apples.sum()) >= 0


# --------------------------------------------------------------- harvest

def test_harvest_eating_pays_one():
    env = make_env("harvest", n_agents=1)
    env.reset(np.random.default_rng(1))
    env._cells = np.array([[3, 10]])
    env._apples[:, :] = False
    env._apples[3, 11] = True
    out = env.step([3])
    assert out.rewards[0] == 1.0
    assert not env._apples[3, 11]


def test_harvest_respawn_probability_three_neighbors():
    env = make_env("harvest")
    env.reset(np.random.default_rng(2))
    env._apples[:, :] = False
    env._apples[3, 10] = True
    env._apples[3, 12] = True
    env._apples[5, 11] = True
    probs = env.respawn_probabilities()
    # cell (3, 11) sees all three apples within Chebyshev radius 2
    assert probs[3, 11] == pytest.approx(0.03)


def test_harvest_stripped_board_never_regrows():
    env = make_env("harvest", n_agents=2)
    env.reset(np.random.default_rng(3))
    env._apples[:, :] = False
    assert np.all(env.respawn_probabilities() == 0.0)
    for _ in range(60):
        out = env.step([4, 4])
    assert int(env._apples.sum()) == 0
    assert np.all(out.rewards == 0.0)


# ------------------------------------------------------------ navigation

def test_navigation_on_landmark_alone_is_zero():
    env = make_env("navigation")
    env.reset(np.random.default_rng(4))
    env._landmarks = np.array([[0, 0], [2, 2], [4, 4]])
    env._cells = np.array([[0, 0], [2, 2], [4, 4]])
    out = env.step([4, 4, 4])
    assert np.array_equal(out.rewards, [0.0, 0.0, 0.0])


def test_navigation_opposite_corner_costs_one():
    env = make_env("navigation")
    env.reset(np.random.default_rng(4))
    env._landmarks = np.array([[4, 4], [0, 0], [0, 4]])
    env._cells = np.array([[0, 0], [2, 1], [4, 0]])
    out = env.step([4, 4, 4])
    assert out.rewards[0] == pytest.approx(-1.0)  # manhattan 8 / 8


def test_navigation_collision_penalizes_both():
    env = make_env("navigation")
    env.reset(np.random.default_rng(4))
    env._landmarks = np.array([[0, 0], [0, 1], [4, 4]])
    env._cells = np.array([[0, 0], [0, 1], [4, 4]])
    # agent 1 moves left onto agent 0's landmark cell; agent 0 stays
    out = env.step([4, 2, 4])
    assert out.rewards[0] == pytest.approx(0.0 - 1.0)
    assert out.rewards[1] == pytest.approx(-1.0 / 8.0 - 1.0)
    assert out.rewards[2] == pytest.approx(0.0)


# ----------------------------------------------------------------- misc

def test_make_env_rejects_unknown_kind():
    with pytest.raises(ValueError, match="unknown environment"):
        make_env("pong")


def test_make_env_rejects_unknown_params():
    with pytest.raises(ValueError, match="bad parameters"):
        make_env("predation", gravity=9.8)


@pytest.mark.parametrize("kind", ENV_KINDS)
def test_env_reset_determinism(kind):
    a = make_env(kind)
    b = make_env(kind)
    sa = a.reset(np.random.default_rng(42))
    sb = b.reset(np.random.default_rng(42))
    assert np.array_equal(sa.observation, sb.observation)


@pytest.mark.parametrize("kind", ENV_KINDS)
def test_observation_scale_bounds_observations(kind):
    env = make_env(kind)
    state = env.reset(np.random.default_rng(17))
    assert env.observation_scale >= 1.0
    assert np.all(np.abs(state.observation) <= env.observation_scale)
    if kind == "predation":
        assert env.observation_scale == env.config.length
    else:
        assert env.observation_scale == 1.0


@pytest.mark.parametrize("kind", ENV_KINDS)
def test_agent_points_recovers_positions(kind):
    env = make_env(kind)
    state = env.reset(np.random.default_rng(8))
    pts = env.agent_points(state.observation)
    assert pts.shape[0] == env.n_agents
    if kind == "predation":
        assert np.allclose(pts[:, 0], state.observation)
    else:
        assert np.array_equal(pts.astype(int), env._cells)


def test_grid_render_shows_agents():
    env = make_env("cleanup", n_agents=2)
    env.reset(np.random.default_rng(6))
    picture = env.render()
    assert picture.count("@") == 2
    assert len(picture.splitlines()) == 11
