import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from banditsim import ConfigError
from banditsim.policies import (
    BernoulliTSPolicy,
    EpsilonGreedyPolicy,
    LinTSPolicy,
    LinUCBPolicy,
    UniformRandomPolicy,
    make_policy,
)

RNG = lambda seed=0: np.random.default_rng(seed)
CTX = np.array([0.3, -1.2])


# ---------------------------------------------------------------- random


def test_random_propensity_and_range():
    policy = UniformRandomPolicy(10)
    for _ in range(20):
        choice = policy.select(CTX, RNG(1))
        assert choice.propensity == 0.1
    two = UniformRandomPolicy(2)
    rng = RNG(2)
    assert {two.select(CTX, rng).action for _ in range(50)} <= {0, 1}


def test_random_uniform_frequencies():
    policy = UniformRandomPolicy(4)
    rng = RNG(3)
    actions = np.array([policy.select(CTX, rng).action for _ in range(10_000)])
    freqs = np.bincount(actions, minlength=4) / len(actions)
    assert np.allclose(freqs, 0.25, atol=0.02)


# ---------------------------------------------------------------- egreedy


def test_egreedy_pure_exploration():
    policy = EpsilonGreedyPolicy(5, epsilon=1.0)
    rng = RNG(4)
    for _ in range(20):
        assert policy.select(CTX, rng).propensity == pytest.approx(0.2)


def test_egreedy_pure_exploitation():
    policy = EpsilonGreedyPolicy(2, epsilon=0.0)
    policy.counts = np.array([5, 5])
    policy.reward_sums = np.array([4.0, 1.0])
    choice = policy.select(CTX, RNG(5))
    assert choice.action == 0
    assert choice.propensity == 1.0


def test_egreedy_greedy_propensity_formula():
    policy = EpsilonGreedyPolicy(10, epsilon=0.1)
    policy.counts = np.ones(10, dtype=np.int64)
    policy.reward_sums = np.zeros(10)
    policy.reward_sums[3] = 1.0
    rng = RNG(6)
    seen_greedy = False
    for _ in range(200):
        choice = policy.select(CTX, rng)
        if choice.action == 3:
            assert choice.propensity == pytest.approx(0.1 / 10 + 0.9)
            seen_greedy = True
        else:
            assert choice.propensity == pytest.approx(0.01)
    assert seen_greedy


def test_egreedy_tries_unvisited_arms_first():
    policy = EpsilonGreedyPolicy(4, epsilon=0.0)
    rng = RNG(7)
    seen = []
    for _ in range(4):
        choice = policy.select(CTX, rng)
        seen.append(choice.action)
        policy.update(CTX, choice.action, 0)
    assert seen == [0, 1, 2, 3]  # lowest unvisited index wins ties at +inf


def test_egreedy_update_counts():
    policy = EpsilonGreedyPolicy(1, epsilon=0.0)
    policy.update(np.zeros(2), 0, 0)
    assert policy.counts.tolist() == [1]
    assert policy.reward_sums.tolist() == [0.0]


# ---------------------------------------------------------------- bts


def test_bts_picks_dominant_posterior():
    policy = BernoulliTSPolicy(4)
    policy.alpha = np.array([1000.0, 1.0, 1.0, 1.0])
    policy.beta = np.array([1.0, 1000.0, 1000.0, 1000.0])
    rng = RNG(8)
    wins = sum(policy.select(CTX, rng).action == 0 for _ in range(1_000))
    assert wins >= 990


def test_bts_symmetric_prior_uniform_selection():
    policy = BernoulliTSPolicy(5)
    rng = RNG(9)
    actions = np.array([policy.select(CTX, rng).action for _ in range(10_000)])
    freqs = np.bincount(actions, minlength=5) / len(actions)
    assert np.allclose(freqs, 0.2, atol=0.03)


def test_bts_two_arm_propensity_near_half():
    # 2000 resamples put the MC standard error near 0.011, so +/-0.05 is safe
    policy = BernoulliTSPolicy(2, propensity_samples=2000)
    rng = RNG(10)
    for _ in range(10):
        assert policy.select(CTX, rng).propensity == pytest.approx(0.5, abs=0.05)


def test_bts_conjugate_update():
    policy = BernoulliTSPolicy(3)
    policy.update(CTX, 1, 1)
    assert policy.alpha.tolist() == [1.0, 2.0, 1.0]
    assert policy.beta.tolist() == [1.0, 1.0, 1.0]
    policy.update(CTX, 1, 0)
    assert policy.alpha.tolist() == [1.0, 2.0, 1.0]
    assert policy.beta.tolist() == [1.0, 2.0, 1.0]


@settings(max_examples=30, deadline=None)
@given(
    st.lists(
        st.tuples(st.integers(0, 3), st.integers(0, 1)), min_size=0, max_size=60
    )
)
def test_bts_state_matches_counting_oracle(interactions):
    policy = BernoulliTSPolicy(4)
    successes = np.zeros(4)
    failures = np.zeros(4)
    for action, reward in interactions:
        policy.update(CTX, action, reward)
        successes[action] += reward
        failures[action] += 1 - reward
    assert np.array_equal(policy.alpha, 1.0 + successes)
    assert np.array_equal(policy.beta, 1.0 + failures)


# ---------------------------------------------------------------- linucb


def test_linucb_fresh_state_tie_breaks_low():
    policy = LinUCBPolicy(5, 2, alpha_ucb=1.0)
    choice = policy.select(CTX)
    assert choice.action == 0
    assert choice.propensity == 1.0
    scores = policy.scores(CTX)
    assert np.allclose(scores, np.linalg.norm(CTX))


def test_linucb_zero_context():
    policy = LinUCBPolicy(3, 2)
    assert np.allclose(policy.scores(np.zeros(2)), 0.0)
    assert policy.select(np.zeros(2)).action == 0


def test_linucb_one_dim_closed_form():
    policy = LinUCBPolicy(2, 1, alpha_ucb=1.7)
    policy.update(np.array([1.0]), 0, 1)
    # A = 1 + 1 = 2, b = 1, theta_hat = 1/2
    assert policy.state.A[0] == pytest.approx(np.array([[2.0]]))
    assert policy.state.theta_hat(0)[0] == pytest.approx(0.5)
    score = policy.scores(np.array([1.0]))[0]
    assert score == pytest.approx(0.5 + 1.7 * math.sqrt(0.5))


def test_linucb_update_arithmetic():
    policy = LinUCBPolicy(1, 1)
    policy.update(np.array([2.0]), 0, 1)
    assert policy.state.A[0, 0, 0] == pytest.approx(5.0)
    assert policy.state.b[0, 0] == pytest.approx(2.0)
    assert policy.state.theta_hat(0)[0] == pytest.approx(0.4)


# ---------------------------------------------------------------- lints


def _seeded_lints(v=1.0):
    policy = LinTSPolicy(3, 2, v=v)
    data = [
        (np.array([1.0, 0.2]), 0, 1),
        (np.array([-0.5, 1.0]), 1, 0),
        (np.array([0.7, -0.3]), 2, 1),
        (np.array([0.1, 0.9]), 0, 0),
    ]
    for x, a, r in data:
        policy.update(x, a, r)
    return policy


def test_lints_degenerate_posterior_is_greedy():
    policy = _seeded_lints(v=0.0)
    means = np.array([CTX @ policy.state.theta_hat(a) for a in range(3)])
    greedy = int(np.argmax(means))
    rng = RNG(11)
    assert all(policy.select(CTX, rng).action == greedy for _ in range(1_000))


def test_lints_fresh_symmetric_two_arms():
    policy = LinTSPolicy(2, 2)
    rng = RNG(12)
    actions = np.array([policy.select(CTX, rng).action for _ in range(10_000)])
    assert np.bincount(actions, minlength=2)[0] / len(actions) == pytest.approx(0.5, abs=0.03)


def test_lints_zero_context_tie_breaks_low():
    policy = _seeded_lints()
    rng = RNG(13)
    assert policy.select(np.zeros(2), rng).action == 0


# ---------------------------------------------------------------- shared


@pytest.mark.parametrize("name", ["bts", "lints"])
def test_monte_carlo_propensities_sum_to_one(name):
    policy = make_policy(name, 6, 2)
    rng = RNG(14)
    for _ in range(30):
        choice = policy.select(CTX, rng)
        policy.update(CTX, choice.action, int(rng.random() < 0.5))
    if name == "bts":
        probs = policy.selection_probabilities(rng)
    else:
        probs = policy.selection_probabilities(CTX, rng)
    assert probs.sum() == pytest.approx(1.0, abs=0.05)
    assert (probs > 0).all()


@pytest.mark.parametrize("name", ["random", "egreedy", "bts", "linucb", "lints"])
def test_propensity_in_unit_interval(name):
    policy = make_policy(name, 4, 2)
    rng = RNG(15)
    for _ in range(50):
        choice = policy.select(CTX, rng)
        assert 0.0 < choice.propensity <= 1.0
        policy.update(CTX, choice.action, int(rng.random() < 0.5))


@pytest.mark.parametrize("name", ["egreedy", "bts", "linucb", "lints"])
def test_update_locality(name):
    policy = make_policy(name, 5, 2)
    rng = RNG(16)
    for _ in range(10):
        policy.update(CTX, 3, int(rng.random() < 0.5))
    if name == "egreedy":
        untouched = [policy.counts[a] == 0 and policy.reward_sums[a] == 0 for a in (0, 1, 2, 4)]
        assert all(untouched)
    elif name == "bts":
        assert all(policy.alpha[a] == 1.0 and policy.beta[a] == 1.0 for a in (0, 1, 2, 4))
    else:
        for a in (0, 1, 2, 4):
            assert np.array_equal(policy.state.A[a], np.eye(2))
            assert np.array_equal(policy.state.b[a], np.zeros(2))


@settings(max_examples=20, deadline=None)
@given(
    st.lists(
        st.tuples(
            st.integers(0, 2),
            st.integers(0, 1),
            st.lists(st.floats(-3, 3), min_size=2, max_size=2),
        ),
        min_size=0,
        max_size=40,
    ),
    st.sampled_from(["linucb", "lints"]),
)
def test_linear_state_matches_summation_oracle(interactions, name):
    policy = make_policy(name, 3, 2, {"reg": 1.0})
    A_expected = np.stack([np.eye(2)] * 3)
    b_expected = np.zeros((3, 2))
    for action, reward, ctx in interactions:
        x = np.array(ctx)
        policy.update(x, action, reward)
        A_expected[action] += np.outer(x, x)
        b_expected[action] += reward * x
    assert np.allclose(policy.state.A, A_expected, atol=1e-9)
    assert np.allclose(policy.state.b, b_expected, atol=1e-9)
    # the incrementally maintained inverse must track A
    for a in range(3):
        assert np.allclose(policy.state.A_inv[a] @ A_expected[a], np.eye(2), atol=1e-8)


@pytest.mark.parametrize("name", ["random", "egreedy", "bts", "linucb", "lints"])
def test_out_of_range_action_rejected(name):
    policy = make_policy(name, 3, 2)
    with pytest.raises(ValueError):
        policy.update(CTX, 3, 1)
    with pytest.raises(ValueError):
        policy.update(CTX, -1, 0)


def test_make_policy_validates():
    with pytest.raises(ConfigError):
        make_policy("ucb1", 3, 2)
    with pytest.raises(ConfigError):
        make_policy("egreedy", 3, 2, {"eps": 0.1})
    with pytest.raises(ConfigError):
        make_policy("egreedy", 3, 2, {"epsilon": 1.5})
