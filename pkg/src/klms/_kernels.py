"""JIT trial kernels for all-Bernoulli instances.

These replicate, operation for operation, the scalar arithmetic of
:mod:`klms.policies` and :mod:`klms.envs` so that a kernel trial is
byte-identical to the generic Python loop with the same streams: numba
lowers ``math.*`` to the same libm CPython calls, and numba's
``Generator.random``/``Generator.beta`` produce the same values as
numpy's while advancing the same bit-generator state.  The equivalence
is pinned by tests/test_simulate.py; any edit here must keep the mirror
exact.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

KIND_CODES = {"klms": 0, "ms": 1, "uniform": 2, "bernoulli_ts": 3}

KLMS = 0
MS = 1
UNIFORM = 2
BERNOULLI_TS = 3


@njit(cache=True)
def _kl(p, q):
    # mirror of klms.klmath.binary_kl (domain checks handled upstream)
    if p == q:
        return 0.0
    if q <= 0.0 or q >= 1.0:
        return math.inf
    if p == 0.0:
        return -math.log1p(-q)
    if p == 1.0:
        return -math.log(q)
    d = p - q
    if 2.0 * abs(d) <= q:
        t1 = p * math.log1p(d / q)
    else:
        t1 = p * math.log(p / q)
    if 2.0 * abs(d) <= 1.0 - q:
        t2 = (1.0 - p) * math.log1p(-d / (1.0 - q))
    else:
        t2 = (1.0 - p) * math.log((1.0 - p) / (1.0 - q))
    v = t1 + t2
    return v if v > 0.0 else 0.0


@njit(cache=True)
def _draw_categorical(probs, rng):
    u = rng.random()
    acc = 0.0
    for a in range(probs.shape[0]):
        acc += probs[a]
        if u < acc:
            return a
    return probs.shape[0] - 1


@njit(cache=True)
def _ts_argmax_draw(alpha, beta, rng):
    best = 0
    best_v = rng.beta(alpha[0], beta[0])
    for a in range(1, alpha.shape[0]):
        v = rng.beta(alpha[a], beta[a])
        if v > best_v:
            best_v = v
            best = a
    return best


@njit(cache=True)
def _ts_mc_counts(alpha, beta, mc_samples, rng):
    counts = np.zeros(alpha.shape[0], dtype=np.int64)
    for _ in range(mc_samples):
        counts[_ts_argmax_draw(alpha, beta, rng)] += 1
    return counts


@njit(cache=True)
def bernoulli_trial(
    kind,
    means,
    horizon,
    action_rng,
    mc_rng,
    reward_rng,
    sigma_sq,
    mc_samples,
    mc_smoothing,
    log_probs,
):
    """Run one trial; returns (arms, behavior probs, rewards) arrays.

    With ``log_probs`` false the Thompson Monte-Carlo estimation is
    skipped and probs are NaN-filled; the action and reward streams are
    untouched by that choice, so the trajectory is identical either way.
    """
    n_arms = means.shape[0]
    pulls = np.zeros(n_arms)
    means_hat = np.zeros(n_arms)
    alpha = np.full(n_arms, 0.5)
    beta = np.full(n_arms, 0.5)
    weights = np.empty(n_arms)

    arms = np.empty(horizon, dtype=np.int64)
    probs = np.full(horizon, np.nan)
    rewards = np.empty(horizon)

    for t in range(1, horizon + 1):
        if t <= n_arms:
            arm = t - 1
            prob = 1.0
        elif kind == KLMS or kind == MS:
            best = means_hat[0]
            for a in range(1, n_arms):
                if means_hat[a] > best:
                    best = means_hat[a]
            for a in range(n_arms):
                if kind == KLMS:
                    weights[a] = math.exp(-pulls[a] * _kl(means_hat[a], best))
                else:
                    gap = best - means_hat[a]
                    weights[a] = math.exp(-pulls[a] * (gap * gap) / (2.0 * sigma_sq))
            total = 0.0
            for a in range(n_arms):
                total += weights[a]
            for a in range(n_arms):
                weights[a] = weights[a] / total
            arm = _draw_categorical(weights, action_rng)
            prob = weights[arm]
        elif kind == UNIFORM:
            for a in range(n_arms):
                weights[a] = 1.0 / n_arms
            arm = _draw_categorical(weights, action_rng)
            prob = weights[arm]
        else:  # BERNOULLI_TS
            if log_probs:
                counts = _ts_mc_counts(alpha, beta, mc_samples, mc_rng)
                arm = _ts_argmax_draw(alpha, beta, action_rng)
                if mc_smoothing:
                    prob = (counts[arm] + 1.0) / (mc_samples + n_arms)
                else:
                    prob = counts[arm] / mc_samples
            else:
                arm = _ts_argmax_draw(alpha, beta, action_rng)
                prob = np.nan

        reward = 1.0 if reward_rng.random() < means[arm] else 0.0

        means_hat[arm] = (means_hat[arm] * pulls[arm] + reward) / (pulls[arm] + 1.0)
        pulls[arm] += 1.0
        alpha[arm] += reward
        beta[arm] += 1.0 - reward

        arms[t - 1] = arm
        probs[t - 1] = prob
        rewards[t - 1] = reward

    return arms, probs, rewards
