"""Bandit policies behind one decision contract.

Five policies share the ``policy_step`` interface: KL Maillard sampling
(probabilities proportional to exp of minus pull-count times binary KL
to the empirical best), its sub-Gaussian predecessor (quadratic gap in
place of the divergence), Bernoulli Thompson sampling with Monte-Carlo
action-probability estimation, KL-UCB, and uniform play.  Every step
reports the probability with which the chosen action was played, which
is what makes the logs usable for inverse propensity weighting later.

Distribution arithmetic is scalar ``math`` on purpose: the JIT kernels
in :mod:`klms._kernels` repeat these exact operations, and scalar libm
is the one arithmetic path CPython and numba share bit for bit.

A policy state is single-writer: one instance serves one trial.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .klmath import binary_kl, kl_upper_inverse

__all__ = [
    "ArmStats",
    "ActionDraw",
    "PolicyConfig",
    "POLICY_KINDS",
    "new_state",
    "klms_distribution",
    "ms_distribution",
    "ts_act",
    "ts_mc_action_counts",
    "ts_mc_action_prob",
    "klucb_exploration_budget",
    "klucb_act",
    "policy_step",
    "policy_update",
    "draw_categorical",
]

POLICY_KINDS = ("klms", "ms", "bernoulli_ts", "klucb", "uniform")


@dataclass
class ArmStats:
    """Running statistics for one arm.

    ``alpha``/``beta`` are the Beta posterior parameters and only move
    for Thompson sampling; they start at the Jeffreys prior (0.5, 0.5).
    """

    pulls: int = 0
    mean: float = 0.0
    alpha: float = 0.5
    beta: float = 0.5


@dataclass(frozen=True)
class ActionDraw:
    """One decision: the arm, the probability it was played with, and,
    for policies with closed-form rules, the full action distribution."""

    arm: int
    behavior_prob: float
    distribution: Optional[tuple[float, ...]] = None


@dataclass(frozen=True)
class PolicyConfig:
    kind: str
    sigma_sq: float = 0.25  # ms only; 1/4 is the tightest sub-Gaussian
    # parameter for rewards bounded in [0, 1]
    mc_samples: int = 1000  # bernoulli_ts only
    mc_smoothing: bool = False  # (count+1)/(M+K) instead of count/M
    klucb_tol: float = 1e-10
    rng_stream: Optional[int] = None  # extra entropy folded into streams

    def __post_init__(self) -> None:
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}; expected one of {POLICY_KINDS}")
        if not self.sigma_sq > 0.0:
            raise ValueError(f"sigma_sq must be positive, got {self.sigma_sq!r}")
        if self.mc_samples < 1:
            raise ValueError(f"mc_samples must be >= 1, got {self.mc_samples!r}")
        if not self.klucb_tol > 0.0:
            raise ValueError(f"klucb_tol must be positive, got {self.klucb_tol!r}")

    @property
    def label(self) -> str:
        if self.kind == "bernoulli_ts":
            return f"bernoulli_ts(M={self.mc_samples})"
        if self.kind == "ms":
            return f"ms(sigma_sq={self.sigma_sq:g})"
        return self.kind


def new_state(n_arms: int) -> list[ArmStats]:
    if n_arms < 1:
        raise ValueError("need at least one arm")
    return [ArmStats() for _ in range(n_arms)]


def _require_all_pulled(stats: list[ArmStats]) -> None:
    for a, s in enumerate(stats):
        if s.pulls < 1:
            raise ValueError(
                f"arm {a} has zero pulls; the forced round-robin phase must finish first"
            )


def _empirical_best(stats: list[ArmStats]) -> float:
    best = stats[0].mean
    for s in stats[1:]:
        if s.mean > best:
            best = s.mean
    return best


def _normalize(weights: list[float]) -> np.ndarray:
    total = 0.0
    for w in weights:
        total += w
    return np.array([w / total for w in weights])


def klms_distribution(stats: list[ArmStats]) -> np.ndarray:
    """Action probabilities p_a proportional to exp(-N_a * kl(mean_a, best)).

    Arms attaining the empirical best have divergence 0 and weight
    exp(0) = 1, so the max pre-normalization weight is exactly 1 and the
    naive exponential can only underflow, never overflow; an underflowed
    weight is a true 0 for an arm the rule would essentially never play.
    """
    _require_all_pulled(stats)
    best = _empirical_best(stats)
    weights = [math.exp(-s.pulls * binary_kl(s.mean, best)) for s in stats]
    return _normalize(weights)


def ms_distribution(stats: list[ArmStats], sigma_sq: float = 0.25) -> np.ndarray:
    """Gaussian-style rule: p_a proportional to exp(-N_a * gap_a^2 / (2 sigma^2))."""
    _require_all_pulled(stats)
    if not sigma_sq > 0.0:
        raise ValueError(f"sigma_sq must be positive, got {sigma_sq!r}")
    best = _empirical_best(stats)
    weights = []
    for s in stats:
        gap = best - s.mean
        weights.append(math.exp(-s.pulls * (gap * gap) / (2.0 * sigma_sq)))
    return _normalize(weights)


def ts_act(stats: list[ArmStats], rng: np.random.Generator) -> int:
    """One Thompson draw: sample each posterior, return the argmax
    (ties to the lowest index)."""
    alphas = np.array([s.alpha for s in stats])
    betas = np.array([s.beta for s in stats])
    samples = rng.beta(alphas, betas)
    return int(np.argmax(samples))


def ts_mc_action_counts(
    stats: list[ArmStats], mc_samples: int, rng: np.random.Generator
) -> np.ndarray:
    """How often each arm wins over ``mc_samples`` independent Thompson draws."""
    if mc_samples < 1:
        raise ValueError("mc_samples must be >= 1")
    alphas = np.array([s.alpha for s in stats])
    betas = np.array([s.beta for s in stats])
    samples = rng.beta(alphas, betas, size=(mc_samples, len(stats)))
    winners = np.argmax(samples, axis=1)
    return np.bincount(winners, minlength=len(stats))


def ts_mc_action_prob(
    stats: list[ArmStats], target_arm: int, mc_samples: int, rng: np.random.Generator
) -> float:
    """Monte-Carlo estimate of the Thompson probability of ``target_arm``.

    Plain empirical frequency, deliberately unsmoothed: the estimate can
    be exactly 0 for a dominated arm, and downstream importance weighting
    treats such logs as invalid rather than papering over the zero.
    """
    counts = ts_mc_action_counts(stats, mc_samples, rng)
    return counts[target_arm] / mc_samples


def klucb_exploration_budget(t: int, pulls: int) -> float:
    """Per-arm divergence budget ln(1 + t ln^2 t) / pulls at time t."""
    if t < 2:
        raise ValueError("budget defined for t >= 2")
    log_t = math.log(t)
    return math.log(1.0 + t * log_t * log_t) / pulls


def klucb_act(stats: list[ArmStats], t: int, tol: float = 1e-10) -> int:
    """Deterministic index rule: largest upper confidence bound wins.

    The bound for an arm is the largest mean whose divergence from the
    empirical mean fits in the exploration budget; ties go to the lowest
    index, so the rule is a pure function of (stats, t).
    """
    _require_all_pulled(stats)
    if t <= len(stats):
        raise ValueError("index rule starts after the forced round-robin phase")
    best_arm = 0
    best_index = -1.0
    for a, s in enumerate(stats):
        ucb = kl_upper_inverse(s.mean, klucb_exploration_budget(t, s.pulls), tol)
        if ucb > best_index:
            best_index = ucb
            best_arm = a
    return best_arm


def draw_categorical(probs: np.ndarray, rng: np.random.Generator) -> int:
    """Inverse-CDF draw with a single uniform; cumulative sums are taken
    in index order so the draw is reproducible across implementations."""
    u = rng.random()
    acc = 0.0
    for a in range(len(probs)):
        acc += probs[a]
        if u < acc:
            return a
    return len(probs) - 1


def policy_step(
    config: PolicyConfig,
    stats: list[ArmStats],
    t: int,
    rng: np.random.Generator,
    mc_rng: Optional[np.random.Generator] = None,
) -> ActionDraw:
    """One decision at time t (1-based).

    The first K steps pull each arm once, logged with probability 1.
    After that: closed-form policies attach their exact distribution;
    Thompson sampling logs the Monte-Carlo estimate of the action it then
    draws (the estimation samples come from ``mc_rng``, the action itself
    from one extra independent posterior draw on ``rng``, mirroring how a
    deployed system logs and keeping the estimate unbiased); KL-UCB is
    deterministic and logs probability 1.
    """
    if t < 1:
        raise ValueError("time index starts at 1")
    n_arms = len(stats)
    if t <= n_arms:
        arm = t - 1
        dist = tuple(1.0 if a == arm else 0.0 for a in range(n_arms))
        return ActionDraw(arm=arm, behavior_prob=1.0, distribution=dist)

    if config.kind == "klms":
        probs = klms_distribution(stats)
    elif config.kind == "ms":
        probs = ms_distribution(stats, config.sigma_sq)
    elif config.kind == "uniform":
        probs = np.array([1.0 / n_arms] * n_arms)
    elif config.kind == "bernoulli_ts":
        if mc_rng is None:
            raise ValueError("bernoulli_ts needs a dedicated mc_rng stream")
        counts = ts_mc_action_counts(stats, config.mc_samples, mc_rng)
        arm = ts_act(stats, rng)
        if config.mc_smoothing:
            prob = (counts[arm] + 1.0) / (config.mc_samples + n_arms)
        else:
            prob = counts[arm] / config.mc_samples
        return ActionDraw(arm=arm, behavior_prob=float(prob), distribution=None)
    elif config.kind == "klucb":
        arm = klucb_act(stats, t, config.klucb_tol)
        return ActionDraw(arm=arm, behavior_prob=1.0, distribution=None)
    else:  # pragma: no cover - PolicyConfig validates kind
        raise ValueError(f"unknown policy kind {config.kind!r}")

    arm = draw_categorical(probs, rng)
    return ActionDraw(
        arm=arm, behavior_prob=float(probs[arm]), distribution=tuple(probs)
    )


def policy_update(stats: list[ArmStats], arm: int, reward: float) -> None:
    """Fold one observed reward into the running statistics.

    The Beta posterior moves by (reward, 1 - reward), so fractional
    rewards update it fractionally; run against a binarized environment
    if strict conjugacy is wanted.
    """
    if not 0.0 <= reward <= 1.0:
        raise ValueError(f"reward must lie in [0, 1], got {reward!r}")
    s = stats[arm]
    s.mean = (s.mean * s.pulls + reward) / (s.pulls + 1)
    s.pulls += 1
    s.alpha += reward
    s.beta += 1.0 - reward
