"""Synthetic contextual-bandit environment.

Each round draws a standard-normal context, maps it through a per-arm
logistic reward model, and samples binary rewards for every arm. The
coefficient matrix can be driven by a drifter (non-stationary rewards)
and rounds can be annotated with reward delays by a delay sampler.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .delay import DelayConfig, ExponentialDelaySampler
from .drift import CoefficientDrifter, DrifterConfig
from .errors import ConfigError

__all__ = [
    "EnvironmentConfig",
    "EnvironmentRound",
    "BanditEnvironment",
    "sigmoid",
    "expected_rewards",
    "sample_coefficients",
]


def sigmoid(z):
    """Numerically stable logistic function, elementwise on arrays."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    if out.ndim == 0:
        return float(out)
    return out


def expected_rewards(context: np.ndarray, coefficients: np.ndarray) -> np.ndarray:
    """Per-arm reward probabilities sigmoid(context . weights_a + intercept_a).

    ``coefficients`` has one row per arm: the first ``len(context)`` entries
    are the linear weights, the trailing entry is the arm's intercept.
    """
    context = np.asarray(context, dtype=np.float64)
    coefficients = np.asarray(coefficients, dtype=np.float64)
    if coefficients.ndim != 2 or coefficients.shape[1] != context.shape[0] + 1:
        raise ConfigError(
            f"coefficient matrix shape {coefficients.shape} does not match "
            f"context of length {context.shape[0]} (expected "
            f"{context.shape[0] + 1} columns: weights plus intercept)"
        )
    logits = coefficients[:, :-1] @ context + coefficients[:, -1]
    return sigmoid(logits)


def sample_coefficients(
    n_actions: int, dim_context: int, scale: float, rng: np.random.Generator
) -> np.ndarray:
    """Draw a fresh coefficient matrix, i.i.d. N(0, scale^2) incl. intercepts."""
    return rng.normal(0.0, scale, size=(n_actions, dim_context + 1))


@dataclass(frozen=True)
class EnvironmentConfig:
    """Static description of one synthetic environment.

    ``coefficient_scale`` defaults to 1/sqrt(dim_context) so that logits stay
    O(1) and expected rewards do not saturate at 0 or 1.
    """

    n_actions: int = 10
    dim_context: int = 5
    seed: int = 0
    coefficient_scale: float | None = None
    drift: DrifterConfig | None = None
    delay: DelayConfig | None = None

    def __post_init__(self) -> None:
        if self.n_actions < 2:
            raise ConfigError(f"n_actions must be >= 2, got {self.n_actions}")
        if self.dim_context < 1:
            raise ConfigError(f"dim_context must be >= 1, got {self.dim_context}")
        if self.coefficient_scale is not None and not self.coefficient_scale > 0:
            raise ConfigError(
                f"coefficient_scale must be > 0, got {self.coefficient_scale}"
            )

    @property
    def resolved_coefficient_scale(self) -> float:
        if self.coefficient_scale is not None:
            return self.coefficient_scale
        return 1.0 / math.sqrt(self.dim_context)


@dataclass
class EnvironmentRound:
    """One simulation step: context, ground-truth rewards, optional delays."""

    round_index: int
    context: np.ndarray
    expected_rewards: np.ndarray
    rewards: np.ndarray
    delay_rounds: np.ndarray | None = None


class BanditEnvironment:
    """Generates rounds of synthetic logged-bandit data.

    Three independent RNG streams are derived from the seed: one for
    contexts and reward draws, one for the initial coefficient matrix, and
    one for delay sampling. Attaching a delay sampler therefore never
    perturbs the context/reward sequence, and two environments built from
    the same config produce bit-identical rounds.
    """

    def __init__(self, config: EnvironmentConfig):
        self.config = config
        ss = np.random.SeedSequence(config.seed % 2**64)
        rounds_ss, coef_ss, delay_ss = ss.spawn(3)
        self._rng = np.random.default_rng(rounds_ss)
        scale = config.resolved_coefficient_scale
        coef_rng = np.random.default_rng(coef_ss)
        self.coefficients = sample_coefficients(
            config.n_actions, config.dim_context, scale, coef_rng
        )
        self.drifter: CoefficientDrifter | None = None
        if config.drift is not None:
            self.drifter = CoefficientDrifter(
                base=self.coefficients, config=config.drift, concept_scale=scale
            )
        self.delay_sampler: ExponentialDelaySampler | None = None
        if config.delay is not None:
            self.delay_sampler = ExponentialDelaySampler(
                config.delay, rng=np.random.default_rng(delay_ss)
            )
        self._round_index = 0

    def coefficients_for_round(self, round_index: int) -> np.ndarray:
        if self.drifter is not None:
            return self.drifter.coefficients_for_round(round_index)
        return self.coefficients

    def sample_rounds(self, n: int) -> list[EnvironmentRound]:
        """Sample the next ``n`` rounds; indices continue across calls."""
        if n < 1:
            raise ConfigError(f"number of rounds must be >= 1, got {n}")
        cfg = self.config
        rounds: list[EnvironmentRound] = []
        for _ in range(n):
            t = self._round_index
            coeffs = self.coefficients_for_round(t)
            context = self._rng.standard_normal(cfg.dim_context)
            means = expected_rewards(context, coeffs)
            rewards = (self._rng.random(cfg.n_actions) < means).astype(np.int64)
            delays = None
            if self.delay_sampler is not None:
                delays = self.delay_sampler.sample(means)
            rounds.append(EnvironmentRound(t, context, means, rewards, delays))
            self._round_index += 1
        return rounds
