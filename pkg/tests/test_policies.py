"""Policy tests: frozen closed-form examples, the probability-transfer
inequalities on randomized states, tie-breaking, and Monte-Carlo
estimation behavior including the exact-zero failure mode."""

import math

import numpy as np
import pytest

from klms.klmath import binary_kl
from klms.policies import (
    ActionDraw,
    ArmStats,
    PolicyConfig,
    draw_categorical,
    klms_distribution,
    klucb_act,
    klucb_exploration_budget,
    ms_distribution,
    new_state,
    policy_step,
    policy_update,
    ts_act,
    ts_mc_action_counts,
    ts_mc_action_prob,
)

# 50-digit oracle: K=2, N=(3,5), means=(0.9,0.5);
# kl(0.5,0.9)=ln(5/3), weight2=(3/5)^5
KLMS_EXAMPLE_P = (0.9278503562945368, 0.0721496437054632)
# same stats for the quadratic rule, sigma^2=1/4: weights (1, exp(-1.6))
MS_EXAMPLE_P = (0.8320183851339245, 0.1679816148660755)


def stats_from(pulls, means):
    return [ArmStats(pulls=n, mean=m) for n, m in zip(pulls, means)]


def random_states(seed, count, max_pulls=200, lo=0.05, hi=0.95):
    """Randomized post-forced-phase states; means kept off the extreme
    boundary so no weight under/overflows and ties are injected often."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        k = int(rng.integers(2, 7))
        pulls = rng.integers(1, max_pulls + 1, size=k)
        means = rng.uniform(lo, hi, size=k)
        if rng.random() < 0.3:  # force a tie at the top
            i, j = rng.choice(k, size=2, replace=False)
            means[j] = means[i] = max(means[i], means[j])
        out.append(stats_from(pulls.tolist(), means.tolist()))
    return out


class TestKlmsDistribution:
    def test_all_equal_means_uniform(self):
        p = klms_distribution(stats_from([4, 9, 2], [0.6, 0.6, 0.6]))
        assert p == pytest.approx([1 / 3] * 3, abs=1e-15)

    def test_frozen_example(self):
        p = klms_distribution(stats_from([3, 5], [0.9, 0.5]))
        assert p == pytest.approx(KLMS_EXAMPLE_P, rel=1e-13)

    def test_extreme_gap_underflows_cleanly(self):
        p = klms_distribution(stats_from([1, 10**6], [1.0, 0.0]))
        assert p[0] == 1.0
        assert p[1] == 0.0
        assert not np.any(np.isnan(p))

    def test_zero_pulls_rejected(self):
        with pytest.raises(ValueError, match="zero pulls"):
            klms_distribution(stats_from([0, 3], [0.5, 0.5]))

    def test_normalization_and_best_dominance_randomized(self):
        for stats in random_states(101, 10_000):
            p = klms_distribution(stats)
            assert abs(p.sum() - 1.0) <= 1e-12
            best = max(s.mean for s in stats)
            p_best = max(p[a] for a, s in enumerate(stats) if s.mean == best)
            assert all(
                p[a] <= p_best + 1e-15
                for a, s in enumerate(stats)
                if s.mean < best
            )

    def test_probability_transfer_inequalities_randomized(self):
        # p_a <= exp(-N_a kl(mean_a, best))  and
        # p_a <= exp(N_1 kl(mean_1, best)) * p_1  for the fixed reference
        # arm 1 (index 0 here)
        for stats in random_states(202, 10_000):
            p = klms_distribution(stats)
            best = max(s.mean for s in stats)
            ref = stats[0]
            inflation = math.exp(ref.pulls * binary_kl(ref.mean, best))
            for a, s in enumerate(stats):
                cap = math.exp(-s.pulls * binary_kl(s.mean, best))
                assert p[a] <= cap * (1.0 + 1e-12)
                assert p[a] <= inflation * p[0] * (1.0 + 1e-12)


class TestMsDistribution:
    def test_all_equal_means_uniform(self):
        p = ms_distribution(stats_from([4, 9], [0.3, 0.3]))
        assert p == pytest.approx([0.5, 0.5], abs=1e-15)

    def test_frozen_example(self):
        p = ms_distribution(stats_from([3, 5], [0.9, 0.5]), sigma_sq=0.25)
        assert p == pytest.approx(MS_EXAMPLE_P, rel=1e-13)

    def test_klms_weight_never_exceeds_ms_weight(self):
        # consequence of kl >= 2 gap^2: with sigma^2 = 1/4 the quadratic
        # rule always leaves at least as much weight on each non-best arm
        for stats in random_states(303, 10_000):
            p_kl = klms_distribution(stats)
            p_ms = ms_distribution(stats, sigma_sq=0.25)
            best = max(s.mean for s in stats)
            top = next(a for a, s in enumerate(stats) if s.mean == best)
            for a, s in enumerate(stats):
                if s.mean < best:
                    w_kl = p_kl[a] / p_kl[top]
                    w_ms = p_ms[a] / p_ms[top]
                    assert w_kl <= w_ms * (1.0 + 1e-12)

    def test_sigma_validation(self):
        with pytest.raises(ValueError):
            ms_distribution(stats_from([1], [0.5]), sigma_sq=0.0)


class TestThompson:
    def test_single_arm(self):
        stats = [ArmStats(pulls=1, mean=1.0)]
        rng = np.random.default_rng(0)
        assert all(ts_act(stats, rng) == 0 for _ in range(20))
        assert ts_mc_action_prob(stats, 0, 100, rng) == 1.0

    def test_dominant_posterior(self):
        stats = [
            ArmStats(alpha=1e6, beta=1.0),
            ArmStats(alpha=1.0, beta=1e6),
        ]
        rng = np.random.default_rng(1)
        picks = np.array([ts_act(stats, rng) for _ in range(10_000)])
        assert np.mean(picks == 0) >= 0.999

    def test_symmetric_posteriors(self):
        stats = [ArmStats(alpha=5.5, beta=3.5), ArmStats(alpha=5.5, beta=3.5)]
        rng = np.random.default_rng(2)
        picks = np.array([ts_act(stats, rng) for _ in range(10_000)])
        assert abs(np.mean(picks == 0) - 0.5) < 0.02

    def test_mc_prob_zero_preserved(self):
        # the documented failure mode: a dominated arm gets estimate 0.0
        stats = [
            ArmStats(alpha=1.0, beta=1e6),
            ArmStats(alpha=1e6, beta=1.0),
        ]
        rng = np.random.default_rng(3)
        assert ts_mc_action_prob(stats, 0, 1000, rng) == 0.0

    def test_mc_prob_symmetric_concentration(self):
        # binomial oracle: 3 sigma = 3*0.5/sqrt(1e5) ~ 0.005
        stats = [ArmStats(alpha=2.5, beta=2.5), ArmStats(alpha=2.5, beta=2.5)]
        rng = np.random.default_rng(4)
        est = ts_mc_action_prob(stats, 0, 100_000, rng)
        assert abs(est - 0.5) < 0.01

    def test_mc_counts_sum_to_m(self):
        stats = [ArmStats(alpha=2.0, beta=3.0), ArmStats(alpha=1.0, beta=1.0)]
        counts = ts_mc_action_counts(stats, 777, np.random.default_rng(5))
        assert counts.sum() == 777


class TestKlucb:
    def test_tie_breaks_to_lowest_index(self):
        stats = stats_from([10, 10, 10], [0.4, 0.4, 0.4])
        assert klucb_act(stats, t=100) == 0

    def test_less_pulled_arm_wins_on_equal_means(self):
        stats = stats_from([1, 100], [0.5, 0.5])
        assert klucb_act(stats, t=1000) == 0

    def test_frozen_index_comparison(self):
        # oracle (50-digit bisection-free root solve):
        # budget = ln(1 + 200 ln^2 200)/50 = 0.172665480946688
        # ucb(0.2) = 0.482779550448547, ucb(0.25) = 0.538761534769990
        stats = stats_from([50, 50], [0.2, 0.25])
        assert klucb_act(stats, t=200) == 1
        budget = klucb_exploration_budget(200, 50)
        assert budget == pytest.approx(0.17266548094668799, rel=1e-13)

    def test_argmax_invariant_to_tolerance(self):
        rng = np.random.default_rng(6)
        for _ in range(200):
            k = int(rng.integers(2, 6))
            stats = stats_from(
                rng.integers(1, 500, size=k).tolist(),
                rng.uniform(0.05, 0.95, size=k).tolist(),
            )
            t = int(rng.integers(k + 1, 10_000))
            choices = {klucb_act(stats, t, tol) for tol in (1e-12, 1e-10, 1e-8)}
            assert len(choices) == 1

    def test_forced_phase_guard(self):
        with pytest.raises(ValueError, match="forced"):
            klucb_act(stats_from([1, 1], [0.5, 0.5]), t=2)


class TestPolicyStep:
    def test_forced_phase(self):
        for kind in ("klms", "ms", "bernoulli_ts", "klucb", "uniform"):
            cfg = PolicyConfig(kind=kind)
            stats = new_state(3)
            draw = policy_step(cfg, stats, t=1, rng=np.random.default_rng(0))
            assert draw.arm == 0
            assert draw.behavior_prob == 1.0
            draw3 = policy_step(cfg, stats, t=3, rng=np.random.default_rng(0))
            assert draw3.arm == 2

    def test_uniform_exact_prob(self):
        cfg = PolicyConfig(kind="uniform")
        stats = stats_from([1, 1, 1, 1], [0.1, 0.2, 0.3, 0.4])
        draw = policy_step(cfg, stats, t=5, rng=np.random.default_rng(1))
        assert draw.behavior_prob == 0.25
        assert draw.distribution == (0.25, 0.25, 0.25, 0.25)

    def test_klms_after_one_win_one_loss(self):
        # N=(1,1), means=(1,0): kl(0,1)=inf so arm 2 weight underflows to 0
        cfg = PolicyConfig(kind="klms")
        stats = stats_from([1, 1], [1.0, 0.0])
        draw = policy_step(cfg, stats, t=3, rng=np.random.default_rng(2))
        assert draw.distribution == (1.0, 0.0)
        assert draw.arm == 0
        assert draw.behavior_prob == 1.0

    def test_distribution_invariants_randomized(self):
        rng = np.random.default_rng(7)
        for kind in ("klms", "ms", "uniform"):
            cfg = PolicyConfig(kind=kind)
            for stats in random_states(404, 300):
                draw = policy_step(cfg, stats, t=len(stats) + 1, rng=rng)
                assert draw.distribution is not None
                assert abs(sum(draw.distribution) - 1.0) <= 1e-12
                assert draw.distribution[draw.arm] == draw.behavior_prob

    def test_ts_requires_mc_stream(self):
        cfg = PolicyConfig(kind="bernoulli_ts")
        stats = stats_from([1, 1], [0.5, 0.5])
        with pytest.raises(ValueError, match="mc_rng"):
            policy_step(cfg, stats, t=3, rng=np.random.default_rng(0))

    def test_ts_prob_estimated_before_independent_action(self):
        # the estimate must come off mc_rng alone and the action off rng
        # alone: replaying with a fresh mc stream but the same action
        # stream reproduces the action exactly
        cfg = PolicyConfig(kind="bernoulli_ts", mc_samples=64)
        stats = stats_from([3, 3], [0.7, 0.4])
        d1 = policy_step(
            cfg, stats, t=7, rng=np.random.default_rng(11), mc_rng=np.random.default_rng(50)
        )
        d2 = policy_step(
            cfg, stats, t=7, rng=np.random.default_rng(11), mc_rng=np.random.default_rng(51)
        )
        assert d1.arm == d2.arm

    def test_ts_smoothing_option(self):
        cfg = PolicyConfig(kind="bernoulli_ts", mc_samples=10, mc_smoothing=True)
        stats = [ArmStats(alpha=1e6, beta=1.0), ArmStats(alpha=1.0, beta=1e6)]
        draw = policy_step(
            cfg, stats, t=3, rng=np.random.default_rng(0), mc_rng=np.random.default_rng(1)
        )
        # dominated arm never wins the 10 samples; smoothed floor is 1/(M+K)
        assert draw.arm == 0
        assert draw.behavior_prob == pytest.approx(11 / 12)

    def test_determinism(self):
        for kind in ("klms", "ms", "bernoulli_ts", "klucb", "uniform"):
            cfg = PolicyConfig(kind=kind, mc_samples=32)
            stats_a = stats_from([2, 5, 1], [0.5, 0.8, 0.3])
            stats_b = stats_from([2, 5, 1], [0.5, 0.8, 0.3])
            d1 = policy_step(
                cfg, stats_a, t=4, rng=np.random.default_rng(9), mc_rng=np.random.default_rng(10)
            )
            d2 = policy_step(
                cfg, stats_b, t=4, rng=np.random.default_rng(9), mc_rng=np.random.default_rng(10)
            )
            assert d1 == d2


class TestPolicyUpdate:
    def test_first_reward(self):
        stats = new_state(2)
        policy_update(stats, 0, 1.0)
        assert stats[0].pulls == 1
        assert stats[0].mean == 1.0

    def test_running_mean(self):
        stats = [ArmStats(pulls=4, mean=0.5)]
        policy_update(stats, 0, 1.0)
        assert stats[0].pulls == 5
        assert stats[0].mean == pytest.approx(0.6)

    def test_beta_posterior_update(self):
        stats = new_state(1)
        policy_update(stats, 0, 1.0)
        assert (stats[0].alpha, stats[0].beta) == (1.5, 0.5)
        policy_update(stats, 0, 0.25)
        assert stats[0].alpha == pytest.approx(1.75)
        assert stats[0].beta == pytest.approx(1.25)

    def test_reward_domain(self):
        with pytest.raises(ValueError):
            policy_update(new_state(1), 0, 1.5)


class TestDrawCategorical:
    def test_matches_empirical_frequencies(self):
        probs = np.array([0.2, 0.5, 0.3])
        rng = np.random.default_rng(12)
        picks = np.array([draw_categorical(probs, rng) for _ in range(100_000)])
        freqs = np.bincount(picks, minlength=3) / len(picks)
        assert np.allclose(freqs, probs, atol=0.01)

    def test_point_mass(self):
        rng = np.random.default_rng(0)
        assert draw_categorical(np.array([0.0, 1.0]), rng) == 1


def test_policy_config_validation():
    with pytest.raises(ValueError):
        PolicyConfig(kind="nope")
    with pytest.raises(ValueError):
        PolicyConfig(kind="ms", sigma_sq=-1.0)
    with pytest.raises(ValueError):
        PolicyConfig(kind="bernoulli_ts", mc_samples=0)
    assert PolicyConfig(kind="bernoulli_ts", mc_samples=100).label == "bernoulli_ts(M=100)"
