"""Acceptance gate: each test covers one exit criterion at its stated
tolerance and prints one [criterion N] PASS/FAIL line (visible with
``pytest -s``, or in captured output on failure).

Budget notes for a small machine: criterion 1 carries the full
2000-trial Thompson-sampling Monte-Carlo protocol and dominates the
suite (roughly 4e10 Beta draws; minutes to tens of minutes depending on
cores).  Everything else runs in seconds on the JIT kernels.
"""

import math
import os

import numpy as np
import pytest

from klms.diagnostics import BoundConfig, asymptotic_constant, chernoff_tail_check, finite_time_bound
from klms.envs import bernoulli_instance
from klms.klmath import binary_kl, kl_upper_inverse, refined_pinsker_lower_bound
from klms.ope import aggregate_ipw, ipw_general, ipw_uniform
from klms.policies import (
    ArmStats,
    PolicyConfig,
    klms_distribution,
    klucb_act,
    ms_distribution,
)
from klms.simulate import map_trials, run_batch, run_trial, trial_seed

JOBS = os.cpu_count() or 1

HIGH = bernoulli_instance([0.8, 0.9])
LOW = bernoulli_instance([0.2, 0.25])

# 50-digit oracle: 0.05 / kl(0.2, 0.25); the Bernoulli-optimal log-regret
# coefficient of the low instance
LOW_CONSTANT = 7.1407081495805224


def _line(criterion, ok, detail):
    print(f"\n[criterion {criterion}] {'PASS' if ok else 'FAIL'} - {detail}")


def _uniform_ipw(log, curve, index):
    return ipw_uniform(log, log.n_arms)


@pytest.mark.acceptance
def test_criterion_1_offline_evaluation_at_t10000():
    """KL-MS logs give MSE in [0.004, 0.016] around truth 0.85; Thompson
    sampling with M=1000 invalidates >= 25% of trials and its surviving
    trials carry >= 1.5x the KL-MS error."""
    horizon, n_trials, truth, seed = 10_000, 2000, 0.85, 20230815

    klms_reports = map_trials(
        PolicyConfig(kind="klms"), HIGH, horizon, n_trials, seed, jobs=JOBS,
        reducer=_uniform_ipw,
    )
    klms_agg = aggregate_ipw(klms_reports, truth)

    ts_reports = map_trials(
        PolicyConfig(kind="bernoulli_ts", mc_samples=1000), HIGH, horizon, n_trials,
        seed, jobs=JOBS, reducer=_uniform_ipw,
    )
    invalid_frac = sum(1 for r in ts_reports if not r.valid) / n_trials
    ts_agg = aggregate_ipw(ts_reports, truth)

    ok = (
        0.004 <= klms_agg.mse <= 0.016
        and klms_agg.n_invalid == 0
        and invalid_frac >= 0.25
        and ts_agg.mse >= 1.5 * klms_agg.mse
    )
    _line(
        1,
        ok,
        f"klms mse={klms_agg.mse:.5f} (band [0.004, 0.016]), "
        f"ts invalid fraction={invalid_frac:.3f} (>=0.25), "
        f"ts valid-trial mse={ts_agg.mse:.5f} "
        f"(={ts_agg.mse / klms_agg.mse:.2f}x klms, >=1.5x)",
    )
    assert 0.004 <= klms_agg.mse <= 0.016
    assert klms_agg.n_invalid == 0
    assert invalid_frac >= 0.25
    assert ts_agg.mse >= 1.5 * klms_agg.mse


@pytest.mark.acceptance
def test_criterion_2_offline_evaluation_tables_at_t1000():
    """KL-MS MSE at T=1000, 2000 trials: within a factor 2 of the
    0.0073-0.0078 band on the 0.8/0.9 instance; at most 3e-4 on the
    0.2/0.25 instance."""
    n_trials, seed = 2000, 20230818

    high_reports = map_trials(
        PolicyConfig(kind="klms"), HIGH, 1000, n_trials, seed, jobs=JOBS,
        reducer=_uniform_ipw,
    )
    high_mse = aggregate_ipw(high_reports, 0.85).mse

    low_reports = map_trials(
        PolicyConfig(kind="klms"), LOW, 1000, n_trials, seed, jobs=JOBS,
        reducer=_uniform_ipw,
    )
    low_mse = aggregate_ipw(low_reports, 0.225).mse

    ok = 0.0073 / 2 <= high_mse <= 0.0078 * 2 and low_mse <= 3e-4
    _line(
        2,
        ok,
        f"high-instance mse={high_mse:.5f} (band [{0.0073 / 2:.5f}, {0.0078 * 2:.5f}]), "
        f"low-instance mse={low_mse:.6f} (<=3e-4)",
    )
    assert 0.0073 / 2 <= high_mse <= 0.0078 * 2
    assert low_mse <= 3e-4


@pytest.mark.acceptance
def test_criterion_3_regret_ordering():
    """Mean final regret at T=10,000 over 500 trials is ordered
    Thompson < KL-MS < MS on both instances, each separation more than
    two combined standard errors."""
    horizon, n_trials, seed = 10_000, 500, 20230819
    details = []
    all_ok = True
    for name, inst in (("low", LOW), ("high", HIGH)):
        finals = {}
        for kind in ("bernoulli_ts", "klms", "ms"):
            batch = run_batch(
                PolicyConfig(kind=kind), inst, horizon, n_trials, seed, jobs=JOBS,
                log_probs=False,
            )
            finals[kind] = (batch.mean_gap_regret[-1], batch.stderr_gap_regret[-1])
        ts_m, ts_e = finals["bernoulli_ts"]
        kl_m, kl_e = finals["klms"]
        ms_m, ms_e = finals["ms"]
        sep_ts_kl = (kl_m - ts_m) / math.hypot(kl_e, ts_e)
        sep_kl_ms = (ms_m - kl_m) / math.hypot(ms_e, kl_e)
        ok = sep_ts_kl > 2.0 and sep_kl_ms > 2.0
        all_ok = all_ok and ok
        details.append(
            f"{name}: ts={ts_m:.1f} < klms={kl_m:.1f} < ms={ms_m:.1f} "
            f"(separations {sep_ts_kl:.1f}, {sep_kl_ms:.1f} stderr)"
        )
    _line(3, all_ok, "; ".join(details))
    assert all_ok, details


@pytest.mark.acceptance
@pytest.mark.slow
def test_criterion_4_asymptotic_trend():
    """Direction check only: KL-MS regret at T=1e6 divided by ln T lands
    within a factor 3 of the instance's asymptotic constant (the exact
    limit is not reachable at finite horizon)."""
    horizon, n_trials, seed = 1_000_000, 50, 20230820
    batch = run_batch(
        PolicyConfig(kind="klms"), LOW, horizon, n_trials, seed, jobs=JOBS,
        log_probs=False,
    )
    ratio = batch.mean_gap_regret[-1] / math.log(horizon)
    constant = asymptotic_constant(LOW)
    assert constant == pytest.approx(LOW_CONSTANT, rel=1e-12)
    ok = constant / 3.0 <= ratio <= constant * 3.0
    _line(
        4,
        ok,
        f"regret(1e6)/ln(1e6) = {ratio:.2f}, constant = {constant:.3f}, "
        f"factor = {ratio / constant:.2f} (within [1/3, 3])",
    )
    assert constant / 3.0 <= ratio <= constant * 3.0


def _random_states(seed, count):
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        k = int(rng.integers(2, 7))
        pulls = rng.integers(1, 201, size=k).tolist()
        means = rng.uniform(0.05, 0.95, size=k)
        if rng.random() < 0.3:
            i, j = rng.choice(k, size=2, replace=False)
            means[j] = means[i] = max(means[i], means[j])
        out.append([ArmStats(pulls=n, mean=m) for n, m in zip(pulls, means.tolist())])
    return out


@pytest.mark.acceptance
def test_criterion_5_property_suites():
    """The no-simulation-budget properties, in one pass: normalization,
    tie-breaking, both probability-transfer inequalities, the KL-MS vs
    MS weight comparison, divergence bounds on a grid, the inverse
    roundtrip, importance-weight identities, the concentration-checker
    grid, and byte-identical replay across worker counts."""
    # distribution properties on 1e4 randomized states
    for stats in _random_states(20230821, 10_000):
        p_kl = klms_distribution(stats)
        p_ms = ms_distribution(stats, sigma_sq=0.25)
        assert abs(p_kl.sum() - 1.0) <= 1e-12
        assert abs(p_ms.sum() - 1.0) <= 1e-12
        best = max(s.mean for s in stats)
        top = next(a for a, s in enumerate(stats) if s.mean == best)
        inflation = math.exp(stats[0].pulls * binary_kl(stats[0].mean, best))
        for a, s in enumerate(stats):
            cap = math.exp(-s.pulls * binary_kl(s.mean, best))
            assert p_kl[a] <= cap * (1.0 + 1e-12)
            assert p_kl[a] <= inflation * p_kl[0] * (1.0 + 1e-12)
            if s.mean < best:
                assert p_kl[a] / p_kl[top] <= p_ms[a] / p_ms[top] * (1.0 + 1e-12)

    # lowest-index tie-breaking for the deterministic argmax rule
    tied = [ArmStats(pulls=10, mean=0.4) for _ in range(4)]
    assert klucb_act(tied, t=50) == 0

    # divergence bounds on the 101x101 grid
    grid = np.linspace(0.0, 1.0, 101)
    for p in grid:
        for q in grid:
            kl = binary_kl(p, q)
            assert kl >= 2.0 * (p - q) ** 2 - 1e-12
            assert refined_pinsker_lower_bound(p, q) <= kl + 1e-12

    # inverse roundtrip at 1e-9 in divergence space
    for p in np.linspace(0.02, 0.98, 25):
        top_budget = binary_kl(p, 1.0 - 1e-6)
        for frac in np.linspace(0.0, 1.0, 21):
            budget = frac * top_budget
            back = binary_kl(p, kl_upper_inverse(p, budget, 1e-12))
            assert budget - 1e-9 <= back <= budget

    # importance-weight identity: uniform behavior, uniform target
    log, _ = run_trial(PolicyConfig(kind="uniform"), HIGH, 2000, seed=trial_seed(5, 0))
    rep = ipw_uniform(log, 2)
    assert rep.valid
    assert rep.estimate == pytest.approx(float(np.mean(log.rewards)), rel=1e-12)
    rep_gen = ipw_general(log, np.array([0.5, 0.5]))
    assert rep_gen.estimate == rep.estimate

    # concentration-checker grid
    rng = np.random.default_rng(20230822)
    for mean in np.arange(0.1, 0.95, 0.1):
        for eps in (0.05, 0.1, 0.2):
            if eps >= mean:
                continue
            for n in (10, 100, 1000):
                assert chernoff_tail_check(float(mean), eps, n, 2000, rng).passed

    # byte-identical replay and worker-count invariance
    for kind in ("klms", "ms", "bernoulli_ts", "klucb", "uniform"):
        policy = PolicyConfig(kind=kind, mc_samples=32)
        a, _ = run_trial(policy, HIGH, 300, seed=77)
        b, _ = run_trial(policy, HIGH, 300, seed=77)
        assert np.array_equal(a.arms, b.arms)
        assert np.array_equal(a.probs, b.probs)
        assert np.array_equal(a.rewards, b.rewards)
    serial = run_batch(PolicyConfig(kind="klms"), HIGH, 500, 16, 88, jobs=1)
    parallel = run_batch(PolicyConfig(kind="klms"), HIGH, 500, 16, 88, jobs=2)
    assert np.array_equal(serial.mean_gap_regret, parallel.mean_gap_regret)
    assert np.array_equal(serial.final_gap_regrets, parallel.final_gap_regrets)

    _line(5, True, "all property suites passed at their stated tolerances")


@pytest.mark.acceptance
def test_criterion_6_bound_validity_smoke():
    """The finite-time bound at delta=0, c=1/4 sits above the empirical
    mean KL-MS regret at T in {1e3, 1e4} on five randomized Bernoulli
    instances (direction check; the bound is loose by design)."""
    rng = np.random.default_rng(20230823)
    cfg = BoundConfig(delta=0.0, c=0.25)
    checks = []
    all_ok = True
    for i in range(5):
        k = int(rng.integers(2, 6))
        means = rng.uniform(0.1, 0.9, size=k).tolist()
        inst = bernoulli_instance(means)
        for horizon, n_trials in ((1000, 200), (10_000, 100)):
            batch = run_batch(
                PolicyConfig(kind="klms"), inst, horizon, n_trials, 600 + i, jobs=JOBS,
                log_probs=False,
            )
            bound = finite_time_bound(inst, horizon, cfg)
            empirical = batch.mean_gap_regret[-1]
            ok = bound >= empirical
            all_ok = all_ok and ok
            checks.append(f"K={k} T={horizon}: {bound:.0f} >= {empirical:.1f} {'ok' if ok else 'VIOLATED'}")
    _line(6, all_ok, "; ".join(checks))
    assert all_ok, checks
