"""On-policy bandit algorithms.

Every policy exposes ``select(context, rng) -> ActionChoice`` and
``update(context, action, reward)``. The propensity attached to each
choice is the probability that the policy, in its current state, picks
that action for that context: exact for the uniform and epsilon-greedy
policies, a floored Monte-Carlo estimate for the posterior-sampling ones,
and 1 for deterministic LinUCB. Ties always break toward the lowest arm
index.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np

from .errors import ConfigError

__all__ = [
    "ActionChoice",
    "Policy",
    "UniformRandomPolicy",
    "EpsilonGreedyPolicy",
    "BernoulliTSPolicy",
    "LinUCBPolicy",
    "LinTSPolicy",
    "make_policy",
    "POLICY_NAMES",
]


@dataclass(frozen=True)
class ActionChoice:
    action: int
    propensity: float


class Policy(Protocol):
    def select(self, context: np.ndarray, rng: np.random.Generator) -> ActionChoice: ...

    def update(self, context: np.ndarray, action: int, reward: int) -> None: ...


def _check_action(action: int, n_actions: int) -> None:
    if not 0 <= action < n_actions:
        raise ValueError(f"action {action} out of range [0, {n_actions})")


class UniformRandomPolicy:
    """Stateless uniform selection; propensity is exactly 1/n_actions."""

    def __init__(self, n_actions: int):
        self.n_actions = n_actions

    def select(self, context: np.ndarray, rng: np.random.Generator) -> ActionChoice:
        action = int(rng.integers(self.n_actions))
        return ActionChoice(action, 1.0 / self.n_actions)

    def update(self, context: np.ndarray, action: int, reward: int) -> None:
        _check_action(action, self.n_actions)


class EpsilonGreedyPolicy:
    """Count-based epsilon-greedy over per-arm empirical means.

    Arms that have never been tried rank above all visited arms, so each
    arm is explored at least once before the greedy comparison kicks in.
    """

    def __init__(self, n_actions: int, epsilon: float = 0.1):
        if not 0.0 <= epsilon <= 1.0:
            raise ConfigError(f"epsilon must be in [0, 1], got {epsilon}")
        self.n_actions = n_actions
        self.epsilon = epsilon
        self.counts = np.zeros(n_actions, dtype=np.int64)
        self.reward_sums = np.zeros(n_actions, dtype=np.float64)

    def greedy_action(self) -> int:
        means = np.full(self.n_actions, np.inf)
        seen = self.counts > 0
        means[seen] = self.reward_sums[seen] / self.counts[seen]
        return int(np.argmax(means))

    def select(self, context: np.ndarray, rng: np.random.Generator) -> ActionChoice:
        greedy = self.greedy_action()
        if rng.random() < self.epsilon:
            action = int(rng.integers(self.n_actions))
        else:
            action = greedy
        propensity = self.epsilon / self.n_actions
        if action == greedy:
            propensity += 1.0 - self.epsilon
        return ActionChoice(action, propensity)

    def update(self, context: np.ndarray, action: int, reward: int) -> None:
        _check_action(action, self.n_actions)
        self.counts[action] += 1
        self.reward_sums[action] += reward


class BernoulliTSPolicy:
    """Thompson sampling with a Beta posterior per arm (binary rewards)."""

    def __init__(
        self,
        n_actions: int,
        alpha_prior: float = 1.0,
        beta_prior: float = 1.0,
        propensity_samples: int = 200,
        propensity_floor: float = 1e-3,
    ):
        if alpha_prior <= 0 or beta_prior <= 0:
            raise ConfigError("Beta prior parameters must be > 0")
        self.n_actions = n_actions
        self.alpha = np.full(n_actions, alpha_prior, dtype=np.float64)
        self.beta = np.full(n_actions, beta_prior, dtype=np.float64)
        self.propensity_samples = propensity_samples
        self.propensity_floor = propensity_floor

    def selection_probabilities(self, rng: np.random.Generator) -> np.ndarray:
        """Monte-Carlo estimate of each arm's probability of winning the draw."""
        draws = rng.beta(self.alpha, self.beta, size=(self.propensity_samples, self.n_actions))
        winners = np.argmax(draws, axis=1)
        fractions = np.bincount(winners, minlength=self.n_actions) / self.propensity_samples
        return np.maximum(fractions, self.propensity_floor)

    def select(self, context: np.ndarray, rng: np.random.Generator) -> ActionChoice:
        sampled = rng.beta(self.alpha, self.beta)
        action = int(np.argmax(sampled))
        propensity = float(self.selection_probabilities(rng)[action])
        return ActionChoice(action, propensity)

    def update(self, context: np.ndarray, action: int, reward: int) -> None:
        _check_action(action, self.n_actions)
        self.alpha[action] += reward
        self.beta[action] += 1 - reward


class _ArmLinearState:
    """Per-arm ridge accumulators A = reg*I + sum(x x^T), b = sum(r x).

    A inverse is maintained with the Sherman-Morrison rank-one identity so
    selection never re-inverts; A itself is kept for inspection and tests.
    """

    def __init__(self, n_actions: int, dim: int, reg: float):
        if reg <= 0:
            raise ConfigError(f"regularization must be > 0, got {reg}")
        self.A = np.stack([reg * np.eye(dim) for _ in range(n_actions)])
        self.A_inv = np.stack([np.eye(dim) / reg for _ in range(n_actions)])
        self.b = np.zeros((n_actions, dim))

    def theta_hat(self, arm: int) -> np.ndarray:
        return self.A_inv[arm] @ self.b[arm]

    def add_observation(self, arm: int, x: np.ndarray, reward: float) -> None:
        self.A[arm] += np.outer(x, x)
        Ainv_x = self.A_inv[arm] @ x
        self.A_inv[arm] -= np.outer(Ainv_x, Ainv_x) / (1.0 + x @ Ainv_x)
        self.b[arm] += reward * x


class LinUCBPolicy:
    """Disjoint linear UCB: score = x . theta_hat + alpha * ||x||_{A^-1}."""

    def __init__(self, n_actions: int, dim_context: int, alpha_ucb: float = 1.0, reg: float = 1.0):
        if alpha_ucb <= 0:
            raise ConfigError(f"alpha_ucb must be > 0, got {alpha_ucb}")
        self.n_actions = n_actions
        self.dim_context = dim_context
        self.alpha_ucb = alpha_ucb
        self.state = _ArmLinearState(n_actions, dim_context, reg)

    def scores(self, context: np.ndarray) -> np.ndarray:
        x = np.asarray(context, dtype=np.float64)
        scores = np.empty(self.n_actions)
        for a in range(self.n_actions):
            width = x @ self.state.A_inv[a] @ x
            scores[a] = x @ self.state.theta_hat(a) + self.alpha_ucb * np.sqrt(max(width, 0.0))
        return scores

    def select(self, context: np.ndarray, rng: np.random.Generator | None = None) -> ActionChoice:
        action = int(np.argmax(self.scores(context)))
        return ActionChoice(action, 1.0)

    def update(self, context: np.ndarray, action: int, reward: int) -> None:
        _check_action(action, self.n_actions)
        self.state.add_observation(action, np.asarray(context, dtype=np.float64), reward)


class LinTSPolicy:
    """Linear Thompson sampling with Gaussian posteriors N(theta_hat, v^2 A^-1)."""

    def __init__(
        self,
        n_actions: int,
        dim_context: int,
        v: float = 1.0,
        reg: float = 1.0,
        propensity_samples: int = 200,
        propensity_floor: float = 1e-3,
    ):
        if v < 0:
            raise ConfigError(f"posterior scale v must be >= 0, got {v}")
        self.n_actions = n_actions
        self.dim_context = dim_context
        self.v = v
        self.state = _ArmLinearState(n_actions, dim_context, reg)
        self.propensity_samples = propensity_samples
        self.propensity_floor = propensity_floor
        self._chol: list[np.ndarray | None] = [None] * n_actions

    def _chol_factor(self, arm: int) -> np.ndarray:
        if self._chol[arm] is None:
            self._chol[arm] = np.linalg.cholesky(self.state.A_inv[arm])
        return self._chol[arm]

    def _sampled_scores(self, x: np.ndarray, rng: np.random.Generator, n_samples: int) -> np.ndarray:
        """Matrix (n_samples, n_actions) of x . theta_tilde draws."""
        scores = np.empty((n_samples, self.n_actions))
        for a in range(self.n_actions):
            mean = float(x @ self.state.theta_hat(a))
            # x . (L z) = (L^T x) . z, so one matvec covers all samples
            u = self._chol_factor(a).T @ x
            z = rng.standard_normal((n_samples, self.dim_context))
            scores[:, a] = mean + self.v * (z @ u)
        return scores

    def selection_probabilities(self, context: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        x = np.asarray(context, dtype=np.float64)
        scores = self._sampled_scores(x, rng, self.propensity_samples)
        winners = np.argmax(scores, axis=1)
        fractions = np.bincount(winners, minlength=self.n_actions) / self.propensity_samples
        return np.maximum(fractions, self.propensity_floor)

    def select(self, context: np.ndarray, rng: np.random.Generator) -> ActionChoice:
        x = np.asarray(context, dtype=np.float64)
        action = int(np.argmax(self._sampled_scores(x, rng, 1)[0]))
        propensity = float(self.selection_probabilities(x, rng)[action])
        return ActionChoice(action, propensity)

    def update(self, context: np.ndarray, action: int, reward: int) -> None:
        _check_action(action, self.n_actions)
        self.state.add_observation(action, np.asarray(context, dtype=np.float64), reward)
        self._chol[action] = None


_POLICY_PARAMS = {
    "random": (),
    "egreedy": ("epsilon",),
    "bts": ("alpha_prior", "beta_prior", "propensity_samples", "propensity_floor"),
    "linucb": ("alpha_ucb", "reg"),
    "lints": ("v", "reg", "propensity_samples", "propensity_floor"),
}

POLICY_NAMES = tuple(_POLICY_PARAMS)


def make_policy(name: str, n_actions: int, dim_context: int, params: dict | None = None) -> Policy:
    """Instantiate a policy by its config name, validating hyperparameters."""
    params = dict(params or {})
    if name not in _POLICY_PARAMS:
        raise ConfigError(f"unknown policy name {name!r}; known: {sorted(_POLICY_PARAMS)}")
    unknown = set(params) - set(_POLICY_PARAMS[name])
    if unknown:
        raise ConfigError(
            f"unknown parameter(s) {sorted(unknown)} for policy {name!r}; "
            f"allowed: {sorted(_POLICY_PARAMS[name])}"
        )
    if name == "random":
        return UniformRandomPolicy(n_actions)
    if name == "egreedy":
        return EpsilonGreedyPolicy(n_actions, **params)
    if name == "bts":
        return BernoulliTSPolicy(n_actions, **params)
    if name == "linucb":
        return LinUCBPolicy(n_actions, dim_context, **params)
    return LinTSPolicy(n_actions, dim_context, **params)
