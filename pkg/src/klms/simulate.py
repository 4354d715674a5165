"""Seeded trial execution, batching, and the log file format.

A trial is a pure function of (policy config, instance, horizon, seed):
three independent counter-derived streams (rewards, policy draws,
Monte-Carlo estimation draws) are spawned per trial, so results never
depend on execution order, worker count, or whether the Monte-Carlo
stream was consumed at all.  All-Bernoulli instances with randomized
policies run on the JIT kernels in :mod:`klms._kernels`; everything else
(KL-UCB, discrete/Beta/binarized arms) takes the generic loop through
:func:`klms.policies.policy_step`.  The two paths are byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterator, Optional

import numpy as np

from . import _kernels
from .envs import BanditInstance, sample_reward
from .policies import PolicyConfig, new_state, policy_step, policy_update, ts_act

__all__ = [
    "LoggedStep",
    "TrialLog",
    "RegretCurve",
    "BatchResult",
    "LogParseError",
    "default_checkpoints",
    "trial_seed",
    "run_trial",
    "run_batch",
    "map_trials",
    "write_log",
    "read_log",
]

LOG_HEADER_PREFIX = "#klms-log v1"

ROLE_REWARD = 0
ROLE_POLICY = 1
ROLE_MC = 2


class LogParseError(ValueError):
    """Malformed log file; the message carries the offending line number."""


@dataclass(frozen=True)
class LoggedStep:
    t: int
    arm: int
    behavior_prob: float
    reward: float


@dataclass(frozen=True)
class TrialLog:
    """One trial's interaction record, stored columnar.

    ``probs`` is None for regret-only trials that skipped behavior
    probability estimation; such logs cannot be serialized or fed to
    the offline-evaluation estimators.
    """

    n_arms: int
    horizon: int
    seed: int
    fingerprint: str
    arms: np.ndarray
    probs: Optional[np.ndarray]
    rewards: np.ndarray

    def __len__(self) -> int:
        return self.horizon

    def steps(self) -> Iterator[LoggedStep]:
        if self.probs is None:
            raise ValueError("trial was run without behavior probabilities")
        for i in range(self.horizon):
            yield LoggedStep(
                t=i + 1,
                arm=int(self.arms[i]),
                behavior_prob=float(self.probs[i]),
                reward=float(self.rewards[i]),
            )


@dataclass(frozen=True)
class RegretCurve:
    """Cumulative pseudo-regret at geometrically spaced checkpoints.

    ``gap_regret`` accumulates the per-pull gap of the chosen arm (the
    low-variance accounting used for plots); ``reward_regret`` is the
    t*best_mean - sum(rewards) variant kept for cross-checking.
    """

    times: np.ndarray
    gap_regret: np.ndarray
    reward_regret: np.ndarray


@dataclass(frozen=True)
class BatchResult:
    times: np.ndarray
    mean_gap_regret: np.ndarray
    stderr_gap_regret: np.ndarray
    mean_reward_regret: np.ndarray
    n_trials: int
    final_gap_regrets: np.ndarray
    logs: Optional[tuple[TrialLog, ...]]


def default_checkpoints(horizon: int) -> np.ndarray:
    """{1, 2, 5} x 10^j up to the horizon, plus the horizon itself."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    marks = {horizon}
    scale = 1
    while scale <= horizon:
        for m in (1, 2, 5):
            if m * scale <= horizon:
                marks.add(m * scale)
        scale *= 10
    return np.array(sorted(marks), dtype=np.int64)


def trial_seed(base_seed: int, trial_index: int) -> int:
    """Stable per-trial seed; independent of how trials are scheduled."""
    ss = np.random.SeedSequence([int(base_seed), int(trial_index)])
    return int(ss.generate_state(1, np.uint64)[0])


def _role_rng(seed: int, role: int, extra: Optional[int]) -> np.random.Generator:
    entropy = [int(seed), role] if extra is None else [int(seed), int(extra), role]
    return np.random.default_rng(np.random.SeedSequence(entropy))


def _fingerprint(policy: PolicyConfig, instance: BanditInstance, horizon: int) -> str:
    desc = {
        "policy": {
            "kind": policy.kind,
            "sigma_sq": policy.sigma_sq,
            "mc_samples": policy.mc_samples,
            "mc_smoothing": policy.mc_smoothing,
        },
        "arms": [
            {"kind": arm.kind, "mean": arm.mean} for arm in instance.arms
        ],
        "horizon": horizon,
    }
    blob = json.dumps(desc, sort_keys=True).encode()
    return hashlib.sha1(blob).hexdigest()[:12]


def _fast_eligible(policy: PolicyConfig, instance: BanditInstance) -> bool:
    return instance.is_bernoulli and policy.kind in _kernels.KIND_CODES


def _python_loop(policy, instance, horizon, action_rng, mc_rng, reward_rng, log_probs):
    stats = new_state(instance.n_arms)
    arms = np.empty(horizon, dtype=np.int64)
    probs = np.full(horizon, np.nan)
    rewards = np.empty(horizon)
    for t in range(1, horizon + 1):
        if policy.kind == "bernoulli_ts" and not log_probs and t > instance.n_arms:
            arm = ts_act(stats, action_rng)  # estimation stream untouched
            prob = math.nan
        else:
            draw = policy_step(policy, stats, t, action_rng, mc_rng)
            arm, prob = draw.arm, draw.behavior_prob
        reward = sample_reward(instance, arm, reward_rng)
        policy_update(stats, arm, reward)
        arms[t - 1] = arm
        probs[t - 1] = prob
        rewards[t - 1] = reward
    return arms, probs, rewards


def _regret_curve(
    arms: np.ndarray,
    rewards: np.ndarray,
    instance: BanditInstance,
    checkpoints: np.ndarray,
) -> RegretCurve:
    gaps = np.array(instance.gaps)
    cum_gap = np.cumsum(gaps[arms])
    cum_reward = np.cumsum(rewards)
    idx = checkpoints - 1
    return RegretCurve(
        times=checkpoints,
        gap_regret=cum_gap[idx],
        reward_regret=checkpoints * instance.best_mean - cum_reward[idx],
    )


def run_trial(
    policy: PolicyConfig,
    instance: BanditInstance,
    horizon: int,
    seed: int,
    checkpoints: Optional[np.ndarray] = None,
    log_probs: bool = True,
) -> tuple[TrialLog, RegretCurve]:
    """Execute one seeded trial: forced round-robin for the first K
    steps, the policy rule afterwards.

    ``log_probs=False`` skips Thompson-sampling Monte-Carlo probability
    estimation (the log then carries no probabilities); because the
    estimation stream is separate from the action and reward streams,
    the trajectory is identical either way.
    """
    if instance.n_arms < 1 or horizon < instance.n_arms:
        raise ValueError(
            f"horizon ({horizon}) must be at least the number of arms ({instance.n_arms})"
        )
    checkpoints = default_checkpoints(horizon) if checkpoints is None else checkpoints
    if len(checkpoints) == 0 or checkpoints[0] < 1 or checkpoints[-1] > horizon:
        raise ValueError("checkpoints must lie in [1, horizon]")

    extra = policy.rng_stream
    action_rng = _role_rng(seed, ROLE_POLICY, extra)
    mc_rng = _role_rng(seed, ROLE_MC, extra)
    reward_rng = _role_rng(seed, ROLE_REWARD, extra)

    if _fast_eligible(policy, instance):
        arms, probs, rewards = _kernels.bernoulli_trial(
            _kernels.KIND_CODES[policy.kind],
            np.array(instance.means),
            horizon,
            action_rng,
            mc_rng,
            reward_rng,
            policy.sigma_sq,
            policy.mc_samples,
            policy.mc_smoothing,
            log_probs,
        )
    else:
        arms, probs, rewards = _python_loop(
            policy, instance, horizon, action_rng, mc_rng, reward_rng, log_probs
        )

    # only TS pays anything for probability estimation, so the skip flag
    # has no effect on the other policies' logs
    skip = policy.kind == "bernoulli_ts" and not log_probs
    log = TrialLog(
        n_arms=instance.n_arms,
        horizon=horizon,
        seed=seed,
        fingerprint=_fingerprint(policy, instance, horizon),
        arms=arms,
        probs=None if skip else probs,
        rewards=rewards,
    )
    return log, _regret_curve(arms, rewards, instance, checkpoints)


def _indexed_trial(args):
    policy, instance, horizon, base_seed, index, checkpoints, log_probs, reducer = args
    log, curve = run_trial(
        policy,
        instance,
        horizon,
        trial_seed(base_seed, index),
        checkpoints=checkpoints,
        log_probs=log_probs,
    )
    return reducer(log, curve, index) if reducer is not None else (log, curve)


def map_trials(
    policy: PolicyConfig,
    instance: BanditInstance,
    horizon: int,
    n_trials: int,
    base_seed: int,
    jobs: int = 1,
    checkpoints: Optional[np.ndarray] = None,
    log_probs: bool = True,
    reducer: Optional[Callable] = None,
) -> list:
    """Run ``n_trials`` seeded trials, optionally reducing each one
    in-worker (``reducer(log, curve, index) -> small result``, must be a
    picklable callable when jobs > 1).  Results come back in trial order
    regardless of scheduling."""
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    arglist = [
        (policy, instance, horizon, base_seed, i, checkpoints, log_probs, reducer)
        for i in range(n_trials)
    ]
    if jobs <= 1 or n_trials == 1:
        return [_indexed_trial(a) for a in arglist]
    chunk = max(1, n_trials // (jobs * 8))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_indexed_trial, arglist, chunksize=chunk))


def _curve_only(log: TrialLog, curve: RegretCurve, index: int) -> RegretCurve:
    return curve


def run_batch(
    policy: PolicyConfig,
    instance: BanditInstance,
    horizon: int,
    n_trials: int,
    base_seed: int,
    jobs: int = 1,
    checkpoints: Optional[np.ndarray] = None,
    keep_logs: bool = False,
    log_probs: bool = True,
) -> BatchResult:
    """Aggregate a batch of independent trials.

    Per-trial seeds derive from (base_seed, trial index), and the
    reduction is keyed by trial index, so the result is identical for
    any ``jobs`` value.  Logs are retained only on request; 2000 trials
    of horizon 1e4 are ~0.4 GB as Python-held arrays.
    """
    checkpoints = default_checkpoints(horizon) if checkpoints is None else checkpoints
    reducer = None if keep_logs else _curve_only
    results = map_trials(
        policy,
        instance,
        horizon,
        n_trials,
        base_seed,
        jobs=jobs,
        checkpoints=checkpoints,
        log_probs=log_probs,
        reducer=reducer,
    )
    if keep_logs:
        logs = tuple(log for log, _ in results)
        curves = [curve for _, curve in results]
    else:
        logs = None
        curves = results
    gap = np.stack([c.gap_regret for c in curves])
    rew = np.stack([c.reward_regret for c in curves])
    if n_trials > 1:
        stderr = gap.std(axis=0, ddof=1) / math.sqrt(n_trials)
    else:
        stderr = np.zeros(gap.shape[1])
    return BatchResult(
        times=checkpoints,
        mean_gap_regret=gap.mean(axis=0),
        stderr_gap_regret=stderr,
        mean_reward_regret=rew.mean(axis=0),
        n_trials=n_trials,
        final_gap_regrets=gap[:, -1],
        logs=logs,
    )


def write_log(log: TrialLog, path) -> None:
    """Persist one trial in the line format; probabilities round-trip
    exactly (17 significant digits)."""
    if log.probs is None:
        raise ValueError("trial was run without behavior probabilities")
    with open(path, "w") as fh:
        fh.write(f"{LOG_HEADER_PREFIX} K={log.n_arms} T={log.horizon} seed={log.seed}\n")
        for i in range(log.horizon):
            fh.write(
                f"{i + 1}\t{log.arms[i]}\t{log.probs[i]:.17g}\t{log.rewards[i]:.17g}\n"
            )


def read_log(path) -> TrialLog:
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if not header.startswith(LOG_HEADER_PREFIX):
            raise LogParseError(f"line 1: expected header starting {LOG_HEADER_PREFIX!r}")
        try:
            fields = dict(part.split("=", 1) for part in header.split()[2:])
            n_arms = int(fields["K"])
            horizon = int(fields["T"])
            seed = int(fields["seed"])
        except (KeyError, ValueError) as exc:
            raise LogParseError(f"line 1: malformed header ({exc})") from exc
        arms = np.empty(horizon, dtype=np.int64)
        probs = np.empty(horizon)
        rewards = np.empty(horizon)
        for i in range(horizon):
            lineno = i + 2
            line = fh.readline()
            if not line:
                raise LogParseError(f"line {lineno}: expected {horizon} records, file ended")
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 4:
                raise LogParseError(f"line {lineno}: expected 4 tab-separated fields")
            try:
                t = int(parts[0])
                arm = int(parts[1])
                prob = float(parts[2])
                reward = float(parts[3])
            except ValueError as exc:
                raise LogParseError(f"line {lineno}: {exc}") from exc
            if t != i + 1:
                raise LogParseError(f"line {lineno}: time index {t}, expected {i + 1}")
            if not 0 <= arm < n_arms:
                raise LogParseError(f"line {lineno}: arm {arm} out of range")
            if not 0.0 <= prob <= 1.0:
                raise LogParseError(f"line {lineno}: probability {prob} outside [0, 1]")
            arms[i] = arm
            probs[i] = prob
            rewards[i] = reward
    return TrialLog(
        n_arms=n_arms,
        horizon=horizon,
        seed=seed,
        fingerprint="",
        arms=arms,
        probs=probs,
        rewards=rewards,
    )
