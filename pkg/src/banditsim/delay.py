"""Reward-delay sampling.

Delays are drawn from exponential distributions and rounded to whole
rounds, since the simulator applies deferred updates at discrete steps.
The unbiased mode shares a single draw across all arms in a round; the
reward-dependent mode interpolates, per arm, between a fast and a slow
exponential so that more attractive arms report back sooner.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

__all__ = [
    "DelayConfig",
    "ExponentialDelaySampler",
    "sample_unbiased",
    "sample_reward_dependent",
]

DELAY_MODES = ("unbiased", "reward_dependent")


@dataclass(frozen=True)
class DelayConfig:
    """Delay sampler parameters; scales are exponential means in rounds."""

    mode: str
    scale: float | None = None
    min_scale: float | None = None
    max_scale: float | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mode not in DELAY_MODES:
            raise ConfigError(f"delay mode must be one of {DELAY_MODES}, got {self.mode!r}")
        if self.mode == "unbiased":
            if self.scale is None or not self.scale > 0:
                raise ConfigError(f"unbiased delay requires scale > 0, got {self.scale}")
        else:
            if self.min_scale is None or self.max_scale is None:
                raise ConfigError("reward_dependent delay requires min_scale and max_scale")
            if not 0 < self.min_scale <= self.max_scale:
                raise ConfigError(
                    "reward_dependent delay requires 0 < min_scale <= max_scale, "
                    f"got min_scale={self.min_scale}, max_scale={self.max_scale}"
                )


def sample_unbiased(n_actions: int, scale: float, rng: np.random.Generator) -> np.ndarray:
    """One exponential draw, rounded, shared by every arm this round."""
    delay = int(np.rint(rng.exponential(scale)))
    return np.full(n_actions, delay, dtype=np.int64)


def sample_reward_dependent(
    expected_rewards: np.ndarray,
    min_scale: float,
    max_scale: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """Per-arm delays interpolating a fast and a slow exponential sample.

    An arm with expected reward p draws d = p * fast + (1 - p) * slow with
    fast ~ Exp(mean=min_scale) and slow ~ Exp(mean=max_scale), so the mean
    delay is p * min_scale + (1 - p) * max_scale: high-reward arms lean on
    the shorter scale.
    """
    p = np.asarray(expected_rewards, dtype=np.float64)
    n = p.shape[0]
    fast = rng.exponential(min_scale, size=n)
    slow = rng.exponential(max_scale, size=n)
    return np.rint(p * fast + (1.0 - p) * slow).astype(np.int64)


class ExponentialDelaySampler:
    """Stateful wrapper dispatching on the configured delay mode."""

    def __init__(self, config: DelayConfig, rng: np.random.Generator | None = None):
        self.config = config
        self._rng = rng if rng is not None else np.random.default_rng(config.seed % 2**64)

    def sample(self, expected_rewards: np.ndarray) -> np.ndarray:
        cfg = self.config
        if cfg.mode == "unbiased":
            return sample_unbiased(len(expected_rewards), cfg.scale, self._rng)
        return sample_reward_dependent(
            expected_rewards, cfg.min_scale, cfg.max_scale, self._rng
        )
