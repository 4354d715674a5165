"""Offline policy evaluation via inverse propensity weighting.

The estimator reweights each logged reward by target-probability over
behavior-probability and averages over all steps.  A log containing any
step whose behavior probability is exactly zero yields no estimate at
all: 0/0 is never defined away, the trial is flagged invalid and counted
(Monte-Carlo-estimated Thompson probabilities produce such zeros; exact
closed-form probabilities never do for an action actually played).

Forced round-robin steps enter the sum like any other step, with their
logged probability of 1; with K much smaller than T the induced bias is
negligible.  Everything here is a pure function over immutable logs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .simulate import TrialLog

__all__ = ["IpwReport", "AggregateReport", "ipw_uniform", "ipw_general", "aggregate_ipw"]


@dataclass(frozen=True)
class IpwReport:
    """Outcome of weighting one log; ``estimate`` is present iff valid."""

    estimate: Optional[float]
    valid: bool
    zero_prob_steps: int


@dataclass(frozen=True)
class AggregateReport:
    n_trials: int
    n_invalid: int
    mse: float
    bias: float
    truth: float


def ipw_general(log: TrialLog, target: np.ndarray) -> IpwReport:
    """Estimate the value of an arbitrary target distribution over arms.

    Weight at step t is target[arm_t] / behavior_prob_t; the estimate is
    the average of weighted rewards over all T steps.
    """
    if len(log) == 0:
        raise ValueError("log is empty")
    if log.probs is None:
        raise ValueError("log carries no behavior probabilities")
    target = np.asarray(target, dtype=np.float64)
    if target.shape != (log.n_arms,):
        raise ValueError(
            f"target must have one probability per arm ({log.n_arms}), got shape {target.shape}"
        )
    if np.any(target < 0.0) or abs(target.sum() - 1.0) > 1e-9:
        raise ValueError("target must be a probability vector")
    zero_steps = int(np.count_nonzero(log.probs == 0.0))
    if zero_steps > 0:
        return IpwReport(estimate=None, valid=False, zero_prob_steps=zero_steps)
    estimate = float(np.mean(target[log.arms] / log.probs * log.rewards))
    return IpwReport(estimate=estimate, valid=True, zero_prob_steps=0)


def ipw_uniform(log: TrialLog, n_arms: int) -> IpwReport:
    """Estimate the uniform policy's value, (1/K) sum of arm means."""
    if n_arms != log.n_arms:
        raise ValueError(f"log has K={log.n_arms} arms, caller expected {n_arms}")
    return ipw_general(log, np.full(n_arms, 1.0 / n_arms))


def aggregate_ipw(reports: Sequence[IpwReport], truth: float) -> AggregateReport:
    """MSE and bias over the valid trials; invalid trials only counted.

    Mirrors how the logged-data experiments are reported: estimates that
    never existed cannot enter the error statistics, so the invalid count
    is surfaced alongside rather than folded in.
    """
    if not 0.0 <= truth <= 1.0:
        raise ValueError(f"truth must lie in [0, 1], got {truth!r}")
    estimates = [r.estimate for r in reports if r.valid]
    n_invalid = sum(1 for r in reports if not r.valid)
    if not estimates:
        raise ValueError("no valid trials to aggregate")
    arr = np.array(estimates)
    return AggregateReport(
        n_trials=len(reports),
        n_invalid=n_invalid,
        mse=float(np.mean((arr - truth) ** 2)),
        bias=float(np.mean(arr) - truth),
        truth=truth,
    )
