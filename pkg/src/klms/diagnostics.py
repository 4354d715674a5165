"""Evaluators for the theory-side quantities and a concentration checker.

These turn the printed regret bounds into numbers that can sit next to
empirical regret columns: the asymptotic log-regret constant for
Bernoulli instances, the finite-time bound evaluated exactly as printed
(including its max-with-e^2 and min-of-two-expressions structure), and
the unscaled worst-case rate used as a shape overlay on plots (the
underlying statements hide constants; fitting one would fabricate
precision).  All functions are pure; the tail checker takes its own
seeded generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .envs import BanditInstance
from .klmath import binary_kl, bernoulli_variance

__all__ = [
    "BoundConfig",
    "TailCheckReport",
    "asymptotic_constant",
    "finite_time_bound",
    "worst_case_rate",
    "chernoff_tail_check",
]

E_SQUARED = math.exp(2.0)


@dataclass(frozen=True)
class BoundConfig:
    """Gap threshold and interpolation constant for the finite-time bound.

    The bound holds for any threshold >= 0 and c in (0, 1/4]; c controls
    how far the divergence arguments are pushed toward each other.
    """

    delta: float = 0.0
    c: float = 0.25

    def __post_init__(self) -> None:
        if self.delta < 0.0:
            raise ValueError(f"delta must be >= 0, got {self.delta!r}")
        if not 0.0 < self.c <= 0.25:
            raise ValueError(f"c must lie in (0, 1/4], got {self.c!r}")


def asymptotic_constant(instance: BanditInstance) -> float:
    """Sum over suboptimal arms of gap / binary_kl(mean, best mean).

    The Bernoulli-optimal coefficient of ln T in the long-run regret;
    0 for instances where every arm is optimal, +inf if some suboptimal
    arm sits at a boundary where the divergence degenerates.
    """
    best = instance.best_mean
    total = 0.0
    for mean, gap in zip(instance.means, instance.gaps):
        if gap > 0.0:
            div = binary_kl(mean, best)
            if div == 0.0 or math.isinf(div):
                return math.inf
            total += gap / div
    return total


def finite_time_bound(instance: BanditInstance, horizon: int, cfg: BoundConfig) -> float:
    """The finite-time regret bound, evaluated literally as printed.

    horizon*delta, plus for each arm with gap above the threshold a
    logarithmic term driven by the divergence between the c-shifted
    means, plus the 392-weighted lower-order term whose log argument is
    the min of a T-free and a T-growing expression, floored at e^2.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    best = instance.best_mean
    var_best = instance.best_variance
    c_sq = cfg.c * cfg.c
    total = horizon * cfg.delta
    for mean, gap in zip(instance.means, instance.gaps):
        if gap <= cfg.delta:
            continue
        div = binary_kl(mean + cfg.c * gap, best - cfg.c * gap)
        total += gap * math.log(max(horizon * div, E_SQUARED)) / div
        scale = (var_best + gap) / (c_sq * gap)
        inner = min(
            (var_best + gap) / (c_sq * gap * gap),
            c_sq * horizon * gap * gap / (var_best + gap),
        )
        total += 392.0 * scale * math.log(max(inner, E_SQUARED))
    return total


def worst_case_rate(instance: BanditInstance, horizon: int) -> float:
    """sqrt(best-arm variance * K * T * ln K) + K ln T, constants hidden.

    Only meaningful as a growth-shape overlay; plots carry a legend note
    saying exactly that.
    """
    if horizon < 2:
        raise ValueError("horizon must be >= 2")
    k = instance.n_arms
    if k < 2:
        raise ValueError("rate defined for K >= 2")
    return math.sqrt(
        instance.best_variance * k * horizon * math.log(k)
    ) + k * math.log(horizon)


@dataclass(frozen=True)
class TailCheckReport:
    empirical: float
    bound: float
    stderr: float
    n: int
    trials: int

    @property
    def passed(self) -> bool:
        return self.empirical <= self.bound + 3.0 * self.stderr


def chernoff_tail_check(
    mean: float, eps: float, n: int, trials: int, rng: np.random.Generator
) -> TailCheckReport:
    """Empirically check the lower-tail bound for Bernoulli sample means.

    Estimates P(sample mean of n draws < mean - eps) over ``trials``
    repetitions and reports it against exp(-n * binary_kl(mean-eps, mean))
    plus three binomial standard errors of the estimate.
    """
    if not 0.0 < eps < mean:
        raise ValueError(f"need 0 < eps < mean, got eps={eps!r}, mean={mean!r}")
    if n < 1 or trials < 1:
        raise ValueError("n and trials must be >= 1")
    successes = rng.binomial(n, mean, size=trials)
    hits = int(np.count_nonzero(successes / n < mean - eps))
    empirical = hits / trials
    bound = math.exp(-n * binary_kl(mean - eps, mean))
    stderr = math.sqrt(empirical * (1.0 - empirical) / trials)
    return TailCheckReport(
        empirical=empirical, bound=bound, stderr=stderr, n=n, trials=trials
    )
