"""Reward environments on [0, 1].

Bernoulli arms, finite-support arms, Beta arms, and a per-reward
binarization wrapper that converts any bounded-reward instance into a
Bernoulli one with identical means.  Instances are immutable after
construction and freely shareable; all randomness flows through the
caller's Generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .klmath import bernoulli_variance

__all__ = [
    "BernoulliArm",
    "DiscreteArm",
    "BetaArm",
    "BinarizedArm",
    "ArmDistribution",
    "BanditInstance",
    "InstanceSummary",
    "sample_reward",
    "binarize",
    "binarized",
    "instance_summary",
]

_PROB_SUM_TOL = 1e-12


@dataclass(frozen=True)
class BernoulliArm:
    mean: float

    kind = "bernoulli"

    def __post_init__(self) -> None:
        if not 0.0 <= self.mean <= 1.0:
            raise ValueError(f"bernoulli mean must lie in [0, 1], got {self.mean!r}")

    def sample(self, rng: np.random.Generator) -> float:
        return 1.0 if rng.random() < self.mean else 0.0


@dataclass(frozen=True)
class DiscreteArm:
    """Finite-support distribution with all support points in [0, 1]."""

    values: tuple[float, ...]
    probs: tuple[float, ...]

    kind = "discrete"

    def __post_init__(self) -> None:
        if len(self.values) != len(self.probs) or not self.values:
            raise ValueError("values and probs must be nonempty and equal-length")
        for v in self.values:
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"support value {v!r} outside [0, 1]")
        for p in self.probs:
            if p < 0.0:
                raise ValueError(f"negative probability {p!r}")
        if abs(math.fsum(self.probs) - 1.0) > _PROB_SUM_TOL:
            raise ValueError(
                f"probabilities sum to {math.fsum(self.probs)!r}, expected 1"
            )

    @property
    def mean(self) -> float:
        return math.fsum(v * p for v, p in zip(self.values, self.probs))

    def sample(self, rng: np.random.Generator) -> float:
        u = rng.random()
        acc = 0.0
        for v, p in zip(self.values, self.probs):
            acc += p
            if u < acc:
                return v
        return self.values[-1]


@dataclass(frozen=True)
class BetaArm:
    """Beta(a, b) rewards; naturally supported on [0, 1] with mean a/(a+b)."""

    a: float
    b: float

    kind = "beta"

    def __post_init__(self) -> None:
        if not (self.a > 0.0 and self.b > 0.0):
            raise ValueError("beta shape parameters must be positive")

    @property
    def mean(self) -> float:
        return self.a / (self.a + self.b)

    def sample(self, rng: np.random.Generator) -> float:
        return float(rng.beta(self.a, self.b))


@dataclass(frozen=True)
class BinarizedArm:
    """Wraps an arm so every reward is resampled to {0, 1} with the same mean."""

    base: "ArmDistribution"

    kind = "binarized"

    @property
    def mean(self) -> float:
        return self.base.mean

    def sample(self, rng: np.random.Generator) -> float:
        return binarize(self.base.sample(rng), rng)


ArmDistribution = Union[BernoulliArm, DiscreteArm, BetaArm, BinarizedArm]


@dataclass(frozen=True)
class BanditInstance:
    """A fixed set of arms plus the derived gap structure.

    ``gaps[a]`` is the per-pull pseudo-regret of arm a; at least one gap
    is zero.  ``best_variance`` is the Bernoulli variance at the best
    mean, the scale constant in the worst-case rate.
    """

    arms: tuple[ArmDistribution, ...]
    means: tuple[float, ...] = field(init=False)
    best_mean: float = field(init=False)
    gaps: tuple[float, ...] = field(init=False)
    best_variance: float = field(init=False)

    def __post_init__(self) -> None:
        if not self.arms:
            raise ValueError("instance needs at least one arm")
        means = tuple(arm.mean for arm in self.arms)
        best = max(means)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "best_mean", best)
        object.__setattr__(self, "gaps", tuple(best - m for m in means))
        object.__setattr__(self, "best_variance", bernoulli_variance(best))

    @property
    def n_arms(self) -> int:
        return len(self.arms)

    @property
    def is_bernoulli(self) -> bool:
        return all(arm.kind == "bernoulli" for arm in self.arms)


def bernoulli_instance(means: "list[float] | tuple[float, ...]") -> BanditInstance:
    """Shorthand for the all-Bernoulli instance with the given means."""
    return BanditInstance(tuple(BernoulliArm(m) for m in means))


def sample_reward(instance: BanditInstance, arm: int, rng: np.random.Generator) -> float:
    """One i.i.d. reward draw from the given arm."""
    if not 0 <= arm < instance.n_arms:
        raise IndexError(f"arm {arm} out of range for {instance.n_arms} arms")
    return instance.arms[arm].sample(rng)


def binarize(reward: float, rng: np.random.Generator) -> float:
    """Resample a [0, 1] reward to {0, 1} preserving its mean."""
    if not 0.0 <= reward <= 1.0:
        raise ValueError(f"reward must lie in [0, 1], got {reward!r}")
    return 1.0 if rng.random() < reward else 0.0


def binarized(instance: BanditInstance) -> BanditInstance:
    """Instance whose arms emit binarized rewards; arm means are unchanged."""
    return BanditInstance(tuple(BinarizedArm(arm) for arm in instance.arms))


@dataclass(frozen=True)
class InstanceSummary:
    best_mean: float
    gaps: tuple[float, ...]
    best_variance: float
    mean_of_means: float


def instance_summary(instance: BanditInstance) -> InstanceSummary:
    """Derived quantities; mean_of_means is the value of the uniform
    policy and the ground truth for the offline-evaluation pipeline."""
    return InstanceSummary(
        best_mean=instance.best_mean,
        gaps=instance.gaps,
        best_variance=instance.best_variance,
        mean_of_means=math.fsum(instance.means) / instance.n_arms,
    )
