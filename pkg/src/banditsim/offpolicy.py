"""Off-policy learning from logged bandit feedback.

A logged dataset of (context, action, propensity, reward) rows can be
turned into a policy in two steps: optionally fit a multinomial logistic
propensity model (when the true logging propensities are unavailable or
distrusted), then train a linear classifier where each row is weighted by
clip(reward / propensity) — inverse-propensity weighting. The resulting
model is used as a deterministic argmax policy and scored against the
simulator's full reward information.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .env import EnvironmentRound
from .errors import ConfigError, DegenerateLogError
from .policies import ActionChoice, Policy
from .sim import SimulationLog

__all__ = [
    "LoggedInteraction",
    "MulticlassLinearModel",
    "IPWConfig",
    "export_logged_feedback",
    "fit_propensity",
    "propensity_matrix",
    "logged_propensity_estimates",
    "ipw_sample_weights",
    "fit_ipw",
    "ModelArgmaxPolicy",
    "evaluate_ground_truth",
]


@dataclass(frozen=True)
class LoggedInteraction:
    """One row of logged bandit feedback."""

    round_index: int
    context: np.ndarray
    action: int
    reward: int
    logged_propensity: float


@dataclass
class MulticlassLinearModel:
    """Linear scores per action: context @ weights.T + biases."""

    weights: np.ndarray
    biases: np.ndarray

    @classmethod
    def zeros(cls, n_actions: int, dim_context: int) -> "MulticlassLinearModel":
        return cls(np.zeros((n_actions, dim_context)), np.zeros(n_actions))

    @property
    def n_actions(self) -> int:
        return self.weights.shape[0]

    def scores(self, contexts: np.ndarray) -> np.ndarray:
        return np.asarray(contexts) @ self.weights.T + self.biases

    def predict(self, contexts: np.ndarray) -> np.ndarray:
        """Argmax actions, ties to the lowest index."""
        return np.argmax(self.scores(contexts), axis=-1)

    def predict_proba(self, contexts: np.ndarray) -> np.ndarray:
        z = self.scores(contexts)
        z = z - z.max(axis=-1, keepdims=True)
        p = np.exp(z)
        return p / p.sum(axis=-1, keepdims=True)


@dataclass(frozen=True)
class IPWConfig:
    """Training settings shared by the propensity model and the IPW learner."""

    use_true_propensities: bool = False
    weight_clip: float = 100.0
    propensity_floor: float = 1e-3
    learning_rate: float = 0.05
    epochs: int = 30
    batch_size: int = 256
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.weight_clip > 0:
            raise ConfigError(f"weight_clip must be > 0, got {self.weight_clip}")
        if not 0.0 < self.propensity_floor < 1.0:
            raise ConfigError(
                f"propensity_floor must be in (0, 1), got {self.propensity_floor}"
            )
        if not self.learning_rate > 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be >= 1")


def export_logged_feedback(log: SimulationLog) -> list[LoggedInteraction]:
    """One LoggedInteraction per round, propensities as recorded at selection."""
    return [
        LoggedInteraction(
            round_index=int(log.round_index[t]),
            context=log.contexts[t].copy(),
            action=int(log.actions[t]),
            reward=int(log.rewards[t]),
            logged_propensity=float(log.propensities[t]),
        )
        for t in range(len(log))
    ]


def _stack_log(log: Sequence[LoggedInteraction]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    X = np.stack([row.context for row in log]).astype(np.float64)
    y = np.array([row.action for row in log], dtype=np.int64)
    r = np.array([row.reward for row in log], dtype=np.float64)
    return X, y, r


def _train_weighted_multiclass(
    X: np.ndarray,
    y: np.ndarray,
    sample_weights: np.ndarray,
    n_actions: int,
    config: IPWConfig,
) -> MulticlassLinearModel:
    """Mini-batch gradient descent on weighted softmax cross-entropy."""
    n, dim = X.shape
    model = MulticlassLinearModel.zeros(n_actions, dim)
    rng = np.random.default_rng(config.seed % 2**64)
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            Xb, yb, wb = X[idx], y[idx], sample_weights[idx]
            probs = model.predict_proba(Xb)
            probs[np.arange(len(idx)), yb] -= 1.0
            probs *= (wb / len(idx))[:, None]
            model.weights -= config.learning_rate * (probs.T @ Xb)
            model.biases -= config.learning_rate * probs.sum(axis=0)
    return model


def fit_propensity(
    log: Sequence[LoggedInteraction], n_actions: int, config: IPWConfig
) -> MulticlassLinearModel:
    """Multinomial logistic regression context -> logged action."""
    if len(log) == 0:
        raise DegenerateLogError("cannot fit a propensity model on an empty log")
    X, y, _ = _stack_log(log)
    if len(np.unique(y)) < 2:
        raise DegenerateLogError(
            "log contains a single distinct action; propensity model is degenerate"
        )
    return _train_weighted_multiclass(X, y, np.ones(len(y)), n_actions, config)


def propensity_matrix(
    model: MulticlassLinearModel, contexts: np.ndarray, floor: float
) -> np.ndarray:
    """Per-context action probabilities, floored and still summing to one.

    Softmax outputs are smoothed toward uniform just enough that every
    entry is >= floor while each row keeps total mass exactly 1:
    p' = floor + (1 - n_actions * floor) * p.
    """
    n_actions = model.n_actions
    if not 0 <= n_actions * floor < 1:
        raise ConfigError(
            f"floor {floor} too large for {n_actions} actions (needs n*floor < 1)"
        )
    probs = model.predict_proba(contexts)
    return floor + (1.0 - n_actions * floor) * probs


def logged_propensity_estimates(
    model: MulticlassLinearModel, log: Sequence[LoggedInteraction], floor: float
) -> np.ndarray:
    """Model's floored probability of each logged action given its context."""
    X, y, _ = _stack_log(log)
    return propensity_matrix(model, X, floor)[np.arange(len(y)), y]


def ipw_sample_weights(
    rewards: np.ndarray, propensities: np.ndarray, weight_clip: float
) -> np.ndarray:
    """Clipped inverse-propensity weights; zero-reward rows weigh nothing."""
    propensities = np.asarray(propensities, dtype=np.float64)
    if np.any(propensities <= 0):
        raise ConfigError("propensities must be strictly positive")
    return np.minimum(np.asarray(rewards, dtype=np.float64) / propensities, weight_clip)


def fit_ipw(
    log: Sequence[LoggedInteraction],
    propensities: np.ndarray,
    n_actions: int,
    config: IPWConfig,
) -> MulticlassLinearModel:
    """Train the IPW policy: predict the logged action, weighted by r/propensity."""
    if len(log) == 0:
        raise DegenerateLogError("cannot fit an IPW policy on an empty log")
    propensities = np.asarray(propensities, dtype=np.float64)
    if propensities.shape != (len(log),):
        raise ConfigError(
            f"expected {len(log)} propensities, got shape {propensities.shape}"
        )
    X, y, r = _stack_log(log)
    weights = ipw_sample_weights(r, propensities, config.weight_clip)
    return _train_weighted_multiclass(X, y, weights, n_actions, config)


class ModelArgmaxPolicy:
    """Frozen deterministic policy: pick the model's top-scoring action."""

    def __init__(self, model: MulticlassLinearModel):
        self.model = model

    def select(self, context: np.ndarray, rng: np.random.Generator | None = None) -> ActionChoice:
        return ActionChoice(int(self.model.predict(context)), 1.0)

    def update(self, context: np.ndarray, action: int, reward: int) -> None:
        pass  # frozen


def evaluate_ground_truth(
    policy: Policy,
    rounds: Sequence[EnvironmentRound],
    rng: np.random.Generator | None = None,
) -> float:
    """Mean true expected reward of the policy's selections over ``rounds``.

    The policy is never updated; stochastic policies draw from ``rng``.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    total = 0.0
    for rnd in rounds:
        choice = policy.select(rnd.context, rng)
        total += float(rnd.expected_rewards[choice.action])
    return total / len(rounds)
