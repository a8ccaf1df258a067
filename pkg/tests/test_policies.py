import math

import numpy as np
import pytest

from typedbandits.core import ParameterSet, classify_condition, derive_structure
from typedbandits.policies import (
    ArmStats,
    KtPolicyConfig,
    kt_select,
    record,
    ucb_index,
    ucb_select,
    ucb_step,
)


def stats_from(counts, sums, t=None):
    st = ArmStats(len(counts))
    st.counts = np.asarray(counts, dtype=np.float64)
    st.sums = np.asarray(sums, dtype=np.float64)
    st.means = np.divide(st.sums, st.counts, out=np.zeros_like(st.sums),
                         where=st.counts > 0)
    st.t = int(st.counts.sum()) if t is None else t
    return st


class TestArmStats:
    def test_fresh_record(self):
        st = ArmStats(3)
        st.record(0, 1)
        assert st.counts[0] == 1 and st.means[0] == 1.0 and st.t == 1

    def test_running_mean(self):
        st = stats_from([0, 0, 4], [0, 0, 2])
        st.record(2, 0)
        assert st.means[2] == pytest.approx(0.4)

    def test_t_equals_total_counts(self):
        st = ArmStats(5)
        for arm in (0, 3, 4):
            st.record(arm, 1)
        assert st.t == 3 == st.counts.sum()

    def test_rejects_bad_reward(self):
        st = ArmStats(2)
        with pytest.raises(ValueError):
            st.record(0, 0.5)

    def test_rejects_bad_arm(self):
        st = ArmStats(2)
        with pytest.raises(ValueError):
            st.record(2, 1)

    def test_record_function_wrapper(self):
        st = ArmStats(2)
        assert record(st, 1, 1) is st
        assert st.counts[1] == 1


class TestUcbIndex:
    @pytest.mark.parametrize("mean,count,t,expected", [
        (0.5, 10, 100, 1.45970),
        (0.0, 1, 2, 1.17741),
        (1.0, 1_000_000, 1_000_000, 1.00526),
    ])
    def test_values(self, mean, count, t, expected):
        assert ucb_index(mean, count, t) == pytest.approx(expected, abs=1e-4)

    def test_unpulled_arm_rejected(self):
        with pytest.raises(ValueError):
            ucb_index(0.5, 0, 10)


class TestUcbSelect:
    def test_symmetric_tie_lowest_index(self):
        st = stats_from([10, 10, 10], [5, 5, 5])
        assert ucb_select(st, {0, 1, 2}) == 0

    def test_dominant_mean(self):
        st = stats_from([100, 100], [50, 90])
        assert st.t == 200
        assert ucb_select(st, {0, 1}) == 1

    def test_exploration_bonus_dominates(self):
        # indices: 0.6 + sqrt(2 ln 52 / 50) = 0.997 vs 0.5 + sqrt(2 ln 52 / 2) = 2.487
        st = stats_from([50, 2], [30, 1])
        assert st.t == 52
        assert ucb_select(st, {0, 1}) == 1

    def test_singleton_subset(self):
        st = stats_from([3, 3, 3], [1, 2, 3])
        for a in range(3):
            assert ucb_select(st, {a}) == a

    def test_empty_subset_rejected(self):
        st = stats_from([1, 1], [0, 1])
        with pytest.raises(ValueError):
            ucb_select(st, set())

    def test_unpulled_subset_member_rejected(self):
        st = stats_from([1, 0], [1, 0])
        with pytest.raises(ValueError):
            ucb_select(st, {0, 1})

    def test_argmax_invariant_under_constant_shift(self):
        rng = np.random.default_rng(21)
        for _ in range(50):
            counts = rng.integers(1, 30, 5).astype(float)
            sums = np.minimum(counts, rng.integers(0, 30, 5)).astype(float)
            st = stats_from(counts, sums)
            pick = ucb_select(st, range(5))
            shifted = stats_from(counts, sums)
            shifted.means = st.means + 0.17
            assert ucb_select(shifted, range(5)) == pick


class TestUcbStep:
    def test_sweeps_unpulled_first(self):
        st = ArmStats(3)
        seen = []
        for _ in range(3):
            a = ucb_step(st)
            seen.append(a)
            st.record(a, 0)
        assert seen == [0, 1, 2]

    def test_subset_sweep(self):
        st = ArmStats(4)
        assert ucb_step(st, [1, 3]) == 1
        st.record(1, 1)
        assert ucb_step(st, [1, 3]) == 3


class TestKtSelect:
    def test_initial_sweep(self, fig2_params):
        cfg = KtPolicyConfig(fig2_params, 0.0)
        st = ArmStats(4)
        st.record(0, 1)
        st.record(1, 0)
        assert st.t == 2
        assert kt_select(st, cfg) == 2

    def test_c1_returns_optimal_arm(self, fig2_params):
        cfg = KtPolicyConfig(fig2_params, 0.0)
        st = stats_from([10, 10, 10, 10], [5.9, 5.1, 4.9, 5.2])
        st.t = 40
        assert kt_select(st, cfg) == 0

    def test_c2_runs_ucb_on_elite(self, fig1_params):
        cfg = KtPolicyConfig(fig1_params, 0.0)
        counts = np.full(21, 5.0)
        sums = np.full(21, 5 * 0.49)
        sums[0] = 5 * 0.56
        st = stats_from(counts, sums)
        derived = derive_structure(fig1_params)
        verdict = classify_condition(derived, fig1_params, st.means)
        assert verdict.tag == "C2" and verdict.matched_type == 0
        pick = kt_select(st, cfg)
        # hand-rolled UCB step over the elite arms
        elite = sorted(derived.elite)
        vals = [st.means[a] + math.sqrt(2 * math.log(st.t) / st.counts[a])
                for a in elite]
        assert pick == elite[int(np.argmax(vals))]

    def test_c3_round_robin(self, fig2_params):
        cfg = KtPolicyConfig(fig2_params, 0.0)
        st = stats_from([3, 3, 3, 2], [3, 0, 3, 0])  # means far from both rows
        assert st.t == 11
        assert kt_select(st, cfg) == 11 % 4

    def test_zero_regret_when_matched_true_type(self, fig2_params):
        # whenever classification yields C1 with the true type, the policy
        # plays that type's optimal arm
        cfg = KtPolicyConfig(fig2_params, 0.0)
        derived = derive_structure(fig2_params)
        rng = np.random.default_rng(3)
        for _ in range(200):
            emp = fig2_params.means[1] + rng.uniform(-0.04, 0.04, 4)
            st = stats_from([9, 9, 9, 9], 9 * np.clip(emp, 0, 1))
            verdict = classify_condition(derived, fig2_params, st.means)
            if verdict.tag == "C1" and verdict.matched_type == 1:
                assert kt_select(st, cfg) == derived.best_arm[1]

    def test_stats_width_mismatch_rejected(self, fig2_params):
        cfg = KtPolicyConfig(fig2_params, 0.0)
        with pytest.raises(ValueError):
            kt_select(ArmStats(3), cfg)


class TestKtPolicyConfig:
    def test_exact_reference_validates(self):
        with pytest.raises(ValueError, match="tied maxima"):
            KtPolicyConfig(ParameterSet([[0.5, 0.5]]), 0.0)

    def test_tied_reference_allowed_with_delta(self):
        cfg = KtPolicyConfig(ParameterSet([[0.5, 0.5], [0.4, 0.6]]), 0.05)
        assert cfg.best_arm.tolist() == [0, 1]

    def test_negative_delta_rejected(self, fig2_params):
        with pytest.raises(ValueError):
            KtPolicyConfig(fig2_params, -0.1)

    def test_confusion_flags(self, fig1_params):
        cfg = KtPolicyConfig(fig1_params, 0.0)
        assert cfg.confusion_nonempty[0]
        assert not cfg.confusion_nonempty[1:].any()

    def test_caller_supplied_epsilon(self, fig2_params):
        cfg = KtPolicyConfig(fig2_params, 0.01, epsilon_star=0.08)
        assert cfg.epsilon_star == 0.08
