"""Concept drift for the reward coefficients.

The drifter owns a sequence of coefficient "concepts" and, for each round,
returns a convex combination of a fixed base matrix and a (possibly
blended) concept. Varying the epoch interval, the length and type of the
transition window, and the seasonality flag produces sudden, incremental,
gradual, and seasonal drift.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

__all__ = ["DrifterConfig", "CoefficientDrifter", "blend_fraction"]

TRANSITION_TYPES = ("linear", "weighted_sampled")


@dataclass(frozen=True)
class DrifterConfig:
    """Drift schedule parameters.

    interval: rounds per concept epoch.
    transition_period: rounds of blending at the end of each epoch
        (0 = instant switch at epoch boundaries).
    transition_type: "linear" blends concepts elementwise;
        "weighted_sampled" picks the old or new concept whole, per round,
        with probability given by the blend fraction.
    seasonal: alternate between exactly two concepts instead of moving
        through an endless sequence of fresh ones.
    base_coefficient_weight: weight of the fixed base matrix in the output;
        1.0 freezes the coefficients entirely.
    """

    interval: int
    transition_period: int = 0
    transition_type: str = "linear"
    seasonal: bool = False
    base_coefficient_weight: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.interval < 1:
            raise ConfigError(f"interval must be >= 1, got {self.interval}")
        if not 0 <= self.transition_period <= self.interval:
            raise ConfigError(
                "transition_period must satisfy 0 <= transition_period <= "
                f"interval, got {self.transition_period} (interval {self.interval})"
            )
        if self.transition_type not in TRANSITION_TYPES:
            raise ConfigError(
                f"transition_type must be one of {TRANSITION_TYPES}, "
                f"got {self.transition_type!r}"
            )
        if not 0.0 <= self.base_coefficient_weight <= 1.0:
            raise ConfigError(
                "base_coefficient_weight must be in [0, 1], "
                f"got {self.base_coefficient_weight}"
            )


def blend_fraction(round_index: int, interval: int, transition_period: int) -> float:
    """Fraction of the next concept mixed in at this round.

    Zero outside the transition window; inside the window it rises linearly
    and reaches exactly 1 on the last round of the epoch, so the new concept
    is fully active when its own epoch begins.
    """
    if round_index < 0:
        raise ConfigError(f"round index must be >= 0, got {round_index}")
    if transition_period == 0:
        return 0.0
    offset = round_index % interval
    window_start = interval - transition_period
    if offset < window_start:
        return 0.0
    return (offset - window_start + 1) / transition_period


class CoefficientDrifter:
    """Produces the effective coefficient matrix for each round.

    Concepts are drawn lazily from the drifter's own seeded stream, i.i.d.
    with the same scale as the base matrix, so attaching a drifter never
    disturbs the environment's context/reward stream. Weighted-sampled
    transitions consume a second, independent stream, which keeps
    ``concept(j)`` a pure function of (seed, j).
    """

    def __init__(self, base: np.ndarray, config: DrifterConfig, concept_scale: float):
        if not concept_scale > 0:
            raise ConfigError(f"concept_scale must be > 0, got {concept_scale}")
        self.base = np.asarray(base, dtype=np.float64)
        self.config = config
        self._scale = concept_scale
        concept_ss, transition_ss = np.random.SeedSequence(config.seed % 2**64).spawn(2)
        self._concept_rng = np.random.default_rng(concept_ss)
        self._transition_rng = np.random.default_rng(transition_ss)
        self._concepts: list[np.ndarray] = []

    def concept(self, index: int) -> np.ndarray:
        """The ``index``-th concept matrix; seasonal schedules alternate two."""
        if self.config.seasonal:
            index %= 2
        while len(self._concepts) <= index:
            self._concepts.append(
                self._concept_rng.normal(0.0, self._scale, size=self.base.shape)
            )
        return self._concepts[index]

    def coefficients_for_round(self, round_index: int) -> np.ndarray:
        cfg = self.config
        epoch = round_index // cfg.interval
        lam = blend_fraction(round_index, cfg.interval, cfg.transition_period)
        current = self.concept(epoch)
        if lam == 0.0:
            mixed = current
        else:
            upcoming = self.concept(epoch + 1)
            if cfg.transition_type == "linear":
                mixed = (1.0 - lam) * current + lam * upcoming
            else:
                use_next = self._transition_rng.random() < lam
                mixed = upcoming if use_next else current
        w = cfg.base_coefficient_weight
        return w * self.base + (1.0 - w) * mixed
