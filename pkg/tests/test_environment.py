import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from matchbandit import markov
from matchbandit.environment import (ArmModel, DimensionMismatchError, EarlyStop, EnvironmentError_,
                                     EnvironmentModel, InfeasibleMatchingError, RewardDistribution,
                                     epoch_lengths, example1, generate_synthetic, pad_with_dummies,
                                     play_epoch, random_kernel, stationary_mean)
from matchbandit.matching import Matching, MatchingInstance, greedy_match

D = RewardDistribution.deterministic


def single_state_env(v):
    return EnvironmentModel([[ArmModel([[1.0]], (D(v),))]])


# --- reward laws -------------------------------------------------------------

@pytest.mark.parametrize("law,mean", [
    (RewardDistribution.bernoulli(0.3), 0.3),
    (RewardDistribution.bernoulli(0.5, 0.8), 0.4),
    (RewardDistribution.uniform(0.2, 0.6), 0.4),
    (RewardDistribution.beta(2.0, 3.0), 0.4),
    (D(0.7), 0.7),
])
def test_reward_mean_and_sampling(law, mean):
    assert law.mean() == pytest.approx(mean)
    x = law.sample(np.random.default_rng(0), 200_000)
    assert np.all((x >= 0) & (x <= 1))
    assert abs(x.mean() - mean) < 4 * max(x.std(), 1e-9) / math.sqrt(x.size) + 1e-3


@pytest.mark.parametrize("kind,a,b", [("bernoulli", 1.5, 1.0), ("uniform", 0.6, 0.2),
                                      ("beta", 0.0, 1.0), ("deterministic", -0.1, 0.0),
                                      ("gamma", 1.0, 1.0)])
def test_reward_parameters_validated(kind, a, b):
    with pytest.raises(EnvironmentError_):
        RewardDistribution(kind, a, b)


def test_reward_dict_round_trip():
    law = RewardDistribution.beta(0.7, 4.2)
    assert RewardDistribution.from_dict(law.to_dict()) == law


# --- arms and environments ---------------------------------------------------

def test_arm_rejects_periodic_kernel():
    with pytest.raises(markov.MarkovError):
        ArmModel([[0, 1], [1, 0]], (D(0), D(1)))


def test_arm_reward_count_checked():
    with pytest.raises(DimensionMismatchError):
        ArmModel(np.full((2, 2), 0.5), (D(0),))


def test_agent_arms_share_state_space():
    a2 = ArmModel(np.full((2, 2), 0.5), (D(0), D(1)))
    a3 = ArmModel(np.full((3, 3), 1 / 3), (D(0), D(1), D(0)))
    with pytest.raises(DimensionMismatchError):
        EnvironmentModel([[a2, a3]])


def test_environment_json_round_trip():
    env, _ = generate_synthetic(3, 3, "mixed", seed=4)
    back = EnvironmentModel.from_json(env.to_json())
    assert np.allclose(back.stationary_means(), env.stationary_means())
    assert np.array_equal(back.current_states, env.current_states)


# --- stationary means ----------------------------------------------------------

def test_example1_stationary_means():
    env, inst = example1(0.1)
    assert stationary_mean(env, (0, 1)) == 0.5
    assert stationary_mean(env, (0, 0)) == pytest.approx(10 / 11)
    assert greedy_match(inst).edge_set == {(0, 0), (1, 1)}
    assert 0.5 + 0.5 == stationary_mean(env, (0, 1)) + stationary_mean(env, (1, 0))


def test_example1_rewards_by_state():
    env, _ = example1(0.1)
    assert [r.a for r in env.arm((0, 0)).rewards] == [0.0, 1.0]


@pytest.mark.parametrize("eps", [0.0, 1.0, -0.2])
def test_example1_range(eps):
    with pytest.raises(ValueError):
        example1(eps)


def test_single_state_mean_ignores_kernel():
    env = single_state_env(0.35)
    assert stationary_mean(env, (0, 0)) == 0.35


# --- epoch play ----------------------------------------------------------------

def test_deterministic_single_state_epoch():
    env = single_state_env(0.7)
    res = play_epoch(env, Matching(((0, 0),)), 10, np.random.default_rng(0))
    assert res.rewards[(0, 0)] == pytest.approx(0.7)
    assert res.iterations_used == 10 and env.clock == 10


def test_hand_simulated_climb_chain():
    # eps = 0 makes the climb kernel deterministic: states 1,2,2,2 and rewards 0,1,1,1
    climb = np.array([[0.0, 1.0], [0.0, 1.0]])
    arm = ArmModel(climb, (D(0.0), D(1.0)), strict=False)
    env = EnvironmentModel([[arm]], [0])
    res = play_epoch(env, Matching(((0, 0),)), 4, np.random.default_rng(0))
    assert res.rewards[(0, 0)] == pytest.approx(0.75)
    assert env.current_states[0] == 1


def test_epoch_lengths_schedule():
    assert list(epoch_lengths(50, 1, 3)) == [51, 52, 53]


def test_unmatched_agents_freeze():
    env, _ = example1(0.1)
    env.current_states[:] = [1, 0]
    play_epoch(env, Matching(((1, 1),)), 500, np.random.default_rng(1))
    assert env.current_states[0] == 1


def test_idle_kernel_moves_unmatched_agent():
    env, _ = example1(0.1)
    env.idle_kernels = [np.array([[0.0, 1.0], [0.0, 1.0]]), None]
    play_epoch(env, Matching(((1, 1),)), 5, np.random.default_rng(1))
    assert env.current_states[0] == 1


def test_infeasible_matching_rejected():
    env, inst = example1(0.1)
    with pytest.raises(InfeasibleMatchingError):
        play_epoch(env, Matching(((0, 0), (0, 1))), 5, np.random.default_rng(0))
    with pytest.raises(DimensionMismatchError):
        play_epoch(env, Matching(((2, 0),)), 5, np.random.default_rng(0))
    bad = MatchingInstance.single_class(np.zeros((2, 2)), 1)
    with pytest.raises(InfeasibleMatchingError):
        play_epoch(env, Matching(((0, 0), (1, 1))), 5, np.random.default_rng(0), instance=bad)


def test_tau_must_be_positive():
    env, _ = example1(0.1)
    with pytest.raises(ValueError):
        play_epoch(env, Matching(((0, 0),)), 0, np.random.default_rng(0))


def test_empty_matching_advances_clock_only():
    env, _ = example1(0.1)
    rng = np.random.default_rng(0)
    state = rng.bit_generator.state
    res = play_epoch(env, Matching(), 7, rng)
    assert res.rewards == {} and env.clock == 7
    assert rng.bit_generator.state == state


def test_same_seed_same_trajectory():
    a, _ = generate_synthetic(4, 4, "mixed", seed=2)
    b, _ = generate_synthetic(4, 4, "mixed", seed=2)
    m = Matching(((0, 1), (1, 0), (2, 3), (3, 2)))
    ra = [play_epoch(a, m, 60, np.random.default_rng(9)).rewards for _ in range(3)]
    rb = [play_epoch(b, m, 60, np.random.default_rng(9)).rewards for _ in range(3)]
    assert ra == rb
    assert np.array_equal(a.current_states, b.current_states)


@given(st.integers(0, 2 ** 31), st.sampled_from(["bernoulli", "uniform", "beta", "mixed"]))
def test_epoch_rewards_in_unit_interval(seed, family):
    env, inst = generate_synthetic(3, 3, family, seed=seed)
    res = play_epoch(env, greedy_match(inst), 40, np.random.default_rng(seed))
    assert all(0.0 <= r <= 1.0 for r in res.rewards.values())


def test_early_stop_never_before_patience():
    env = single_state_env(0.5)
    es = EarlyStop(5e-4, 200)
    res = play_epoch(env, Matching(((0, 0),)), 10_000, np.random.default_rng(0), es)
    assert res.iterations_used == 201
    assert res.rewards[(0, 0)] == pytest.approx(0.5)


def test_early_stop_long_epoch_spans_blocks():
    env, _ = generate_synthetic(2, 3, "bernoulli", seed=5)
    res = play_epoch(env, Matching(((0, 0), (1, 1))), 50_000, np.random.default_rng(0),
                     EarlyStop(5e-4, 200))
    assert 201 <= res.iterations_used <= 50_000


@pytest.mark.parametrize("tau", [10, 100, 1000])
def test_epoch_mean_bias_within_mixing_bound(tau):
    rng = np.random.default_rng(tau)
    p = random_kernel(np.random.default_rng(11), 4)
    arm = ArmModel(p, tuple(D(v) for v in (0.0, 1.0, 0.2, 0.9)))
    mu = arm.stationary_mean()
    c = arm.mixing_constant()
    reps = 2000
    vals = np.empty(reps)
    for k in range(reps):
        env = EnvironmentModel([[arm]], [0])
        vals[k] = play_epoch(env, Matching(((0, 0),)), tau, rng).rewards[(0, 0)]
    se = vals.std(ddof=1) / math.sqrt(reps)
    assert abs(vals.mean() - mu) <= c / tau + 3 * se


# --- generator -----------------------------------------------------------------

def test_synthetic_shape():
    env, inst = generate_synthetic(10, 10, seed=0)
    assert env.packed.cum.shape[0] == 100
    assert inst.shape == (10, 10) and list(inst.capacities) == [10]


def test_synthetic_single_state_is_classical():
    env, _ = generate_synthetic(3, 1, "bernoulli", seed=1)
    assert np.all(env.mixing_constants() == 0)


def test_synthetic_deterministic_under_seed():
    a, _ = generate_synthetic(3, 4, "mixed", seed=8)
    b, _ = generate_synthetic(3, 4, "mixed", seed=8)
    assert a.to_json() == b.to_json()


def test_synthetic_rejects_bad_family():
    with pytest.raises(ValueError):
        generate_synthetic(2, 2, "cauchy")


def test_dummy_padding():
    env, inst = generate_synthetic(3, 2, seed=0, m_incentives=1)
    penv, pinst = pad_with_dummies(env, inst)
    assert pinst.shape == (3, 3)
    assert np.all(penv.stationary_means()[:, 1:] == 0)
    g = greedy_match(pinst.with_weights(penv.stationary_means()))
    assert len(g) == 3
