"""Policy simulation over environment rounds, with deferred updates.

The simulator walks a policy through a sequence of rounds. When rounds
carry a ``delay_rounds`` field, the update for a chosen action is queued
and only applied once the delay has elapsed; due updates are applied in
enqueue order before the round's action selection. Updates still pending
when the horizon is reached are discarded. The full behaviour — action,
propensity, realized and expected reward, per-round best arm, update
counts — is recorded so the log can later feed off-policy training.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from itertools import count
from typing import Sequence

import numpy as np

from .env import BanditEnvironment, EnvironmentRound
from .errors import ConfigError
from .policies import Policy

__all__ = [
    "PendingUpdate",
    "SimulationLog",
    "simulate",
    "run",
    "rolling_mean",
    "rolling_mean_reward",
    "cumulative_regret",
]


@dataclass(frozen=True)
class PendingUpdate:
    apply_at_round: int
    context: np.ndarray
    action: int
    reward: int


@dataclass
class SimulationLog:
    """Columnar record of one policy run; one entry per round."""

    round_index: np.ndarray
    contexts: np.ndarray
    actions: np.ndarray
    propensities: np.ndarray
    rewards: np.ndarray
    chosen_expected_reward: np.ndarray
    max_expected_reward: np.ndarray
    updates_applied: np.ndarray
    discarded_updates: int

    def __len__(self) -> int:
        return len(self.round_index)


def simulate(
    policy: Policy, rounds: Sequence[EnvironmentRound], rng: np.random.Generator
) -> SimulationLog:
    """Iterate ``policy`` over ``rounds`` and record its behaviour.

    A zero-round delay is applied as soon as it is enqueued, which makes a
    constant-0 delay function reproduce the no-delay log exactly, update
    counts included.
    """
    n = len(rounds)
    if n < 1:
        raise ConfigError("cannot simulate over an empty round sequence")
    dim = rounds[0].context.shape[0]
    contexts = np.empty((n, dim))
    actions = np.empty(n, dtype=np.int64)
    propensities = np.empty(n)
    rewards = np.empty(n, dtype=np.int64)
    chosen_er = np.empty(n)
    max_er = np.empty(n)
    applied = np.zeros(n, dtype=np.int64)

    queue: list[tuple[int, int, PendingUpdate]] = []
    tiebreak = count()
    for t, rnd in enumerate(rounds):
        while queue and queue[0][0] <= t:
            _, _, upd = heapq.heappop(queue)
            policy.update(upd.context, upd.action, upd.reward)
            applied[t] += 1
        choice = policy.select(rnd.context, rng)
        a = choice.action
        contexts[t] = rnd.context
        actions[t] = a
        propensities[t] = choice.propensity
        rewards[t] = rnd.rewards[a]
        chosen_er[t] = rnd.expected_rewards[a]
        max_er[t] = rnd.expected_rewards.max()
        reward = int(rnd.rewards[a])
        if rnd.delay_rounds is None:
            policy.update(rnd.context, a, reward)
            applied[t] += 1
        else:
            due = t + int(rnd.delay_rounds[a])
            if due <= t:
                policy.update(rnd.context, a, reward)
                applied[t] += 1
            else:
                heapq.heappush(queue, (due, next(tiebreak), PendingUpdate(due, rnd.context, a, reward)))

    return SimulationLog(
        round_index=np.arange(n, dtype=np.int64),
        contexts=contexts,
        actions=actions,
        propensities=propensities,
        rewards=rewards,
        chosen_expected_reward=chosen_er,
        max_expected_reward=max_er,
        updates_applied=applied,
        discarded_updates=len(queue),
    )


def run(
    policy: Policy, environment: BanditEnvironment, horizon: int, rng: np.random.Generator
) -> SimulationLog:
    """Sample ``horizon`` rounds from the environment and simulate over them."""
    if horizon < 1:
        raise ConfigError(f"horizon must be >= 1, got {horizon}")
    return simulate(policy, environment.sample_rounds(horizon), rng)


def rolling_mean(values: np.ndarray, window: int) -> np.ndarray:
    """Trailing mean over ``window`` entries; shorter prefixes use what exists."""
    if window < 1:
        raise ConfigError(f"window must be >= 1, got {window}")
    values = np.asarray(values, dtype=np.float64)
    csum = np.cumsum(values)
    out = np.empty_like(csum)
    head = min(window, len(values))
    out[:head] = csum[:head] / np.arange(1, head + 1)
    if len(values) > window:
        out[window:] = (csum[window:] - csum[:-window]) / window
    return out


def rolling_mean_reward(log: SimulationLog, window: int) -> np.ndarray:
    return rolling_mean(log.rewards, window)


def cumulative_regret(log: SimulationLog) -> np.ndarray:
    """Running sum of (best arm's expected reward - chosen arm's)."""
    return np.cumsum(log.max_expected_reward - log.chosen_expected_reward)
