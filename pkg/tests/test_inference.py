"""Tests for the approximate and exact RSES tests"""

import math
import unittest

import numpy as np
import pytest
from scipy import stats

from src.core import numerics
from src.core.app_config import app_config
from src.core.errors import DomainError
from src.models.models import Dataset, Group
from src.models.results import ResponseTable, TestMethod
from src.services import inference_service
from src.services.inference_service import (
    conditional_critical_value,
    conditional_p_value,
    critical_values,
    exact_decision,
    exact_test,
    local_level,
    resolve_local_levels,
    zpooled_exact_response_test,
)


def split(data: Dataset) -> tuple[Dataset, Dataset]:
    return data.subset(Group.EXPERIMENTAL), data.subset(Group.CONTROL)


def brute_force_zpooled(k_e, n_e, k_c, n_c, grid=20001):
    """Supremum of the tail probability over a fine grid of the nuisance p"""
    abs_z = np.abs(
        inference_service.pooled_z_statistic(
            np.arange(n_e + 1)[:, None], n_e, np.arange(n_c + 1)[None, :], n_c
        )
    )
    mask = (abs_z >= abs_z[k_e, k_c] - 1e-12).astype(float)
    best = 0.0
    for p in np.linspace(0.0, 1.0, grid)[1:-1]:
        pmf_e = stats.binom.pmf(np.arange(n_e + 1), n_e, p)
        pmf_c = stats.binom.pmf(np.arange(n_c + 1), n_c, p)
        best = max(best, float(pmf_e @ mask @ pmf_c))
    return best


class TestLocalLevels(unittest.TestCase):
    def test_equal_split(self):
        self.assertAlmostEqual(local_level(0.05), 1 - 0.95 ** (1 / 3), places=15)
        self.assertAlmostEqual(local_level(0.05), 0.016952, places=6)

    def test_custom_levels_accepted(self):
        a1, a2 = 0.01, 0.02
        a3 = 1 - 0.95 / ((1 - a1) * (1 - a2))
        self.assertEqual(resolve_local_levels(0.05, (a1, a2, a3)), (a1, a2, a3))

    def test_custom_levels_must_compose_to_alpha(self):
        with self.assertRaises(DomainError):
            resolve_local_levels(0.05, (0.01, 0.01, 0.01))
        with self.assertRaises(DomainError):
            resolve_local_levels(0.05, (0.05, 0.0, 0.0))

    def test_alpha_out_of_range(self):
        with self.assertRaises(DomainError):
            local_level(1.5)


class TestApproxTest:
    def test_statistics_match_formulas(self, small_dataset):
        data_e, data_c = split(small_dataset)
        outcome = inference_service.approx_test(data_e, data_c, 0.05)

        pooled = 3 / 5
        size_term = 1 / 3 + 1 / 2
        expected_p = (2 / 3 - 1 / 2) / math.sqrt(pooled * (1 - pooled) * size_term)
        assert outcome.stat_p == pytest.approx(expected_p)
        # responder means are 3 in both groups
        assert outcome.stat_theta1 == pytest.approx(0.0, abs=1e-15)
        assert outcome.stat_theta0 == pytest.approx(
            math.log(5.0) / math.sqrt(size_term / (1 - pooled))
        )
        assert outcome.method is TestMethod.APPROXIMATE
        assert not outcome.reject_global

    def test_empty_stratum_statistic_is_zero(self):
        data_e = Dataset.single_group(Group.EXPERIMENTAL, [True, True], [1.0, 2.0])
        data_c = Dataset.single_group(Group.CONTROL, [True, False], [1.0, 2.0])
        outcome = inference_service.approx_test(data_e, data_c, 0.05)
        assert outcome.stat_theta0 == 0.0
        assert not outcome.reject_theta0

    def test_no_responders_anywhere(self):
        data_e = Dataset.single_group(Group.EXPERIMENTAL, [False, False], [1.0, 2.0])
        data_c = Dataset.single_group(Group.CONTROL, [False], [3.0])
        outcome = inference_service.approx_test(data_e, data_c, 0.05)
        assert outcome.stat_p == 0.0
        assert outcome.stat_theta1 == 0.0

    def test_strong_hazard_difference_rejects(self):
        rng = np.random.default_rng(5)
        responders = np.ones(200, dtype=bool)
        data_e = Dataset.single_group(Group.EXPERIMENTAL, responders, rng.exponential(1.0, 200))
        data_c = Dataset.single_group(Group.CONTROL, responders, rng.exponential(0.2, 200))
        outcome = inference_service.approx_test(data_e, data_c, 0.05)
        assert outcome.reject_theta1
        assert outcome.reject_global

    def test_swapping_groups_negates_statistics(self, random_trial):
        data_e, data_c = split(random_trial)
        forward = inference_service.approx_test(data_e, data_c, 0.05)
        backward = inference_service.approx_test(data_c, data_e, 0.05)
        for name in ("stat_p", "stat_theta1", "stat_theta0"):
            assert getattr(backward, name) == pytest.approx(-getattr(forward, name), rel=1e-12)
        assert backward.reject_global == forward.reject_global

    def test_empty_group(self, small_dataset):
        data_e, _ = split(small_dataset)
        with pytest.raises(DomainError):
            inference_service.approx_test(data_e, Dataset(), 0.05)


class TestZPooledResponseTest:
    def test_no_responders_gives_one(self):
        p_value, reject = zpooled_exact_response_test(ResponseTable(0, 6, 0, 4), 0.05)
        assert p_value == 1.0
        assert not reject

    def test_all_responders_gives_one(self):
        p_value, _ = zpooled_exact_response_test(ResponseTable(5, 5, 3, 3), 0.05)
        assert p_value == 1.0

    def test_matches_brute_force(self):
        p_value, _ = zpooled_exact_response_test(ResponseTable(3, 5, 0, 5), 0.05)
        assert p_value == pytest.approx(brute_force_zpooled(3, 5, 0, 5), abs=1e-6)

    def test_swap_symmetry(self):
        table = ResponseTable(7, 12, 2, 9)
        assert zpooled_exact_response_test(table, 0.05)[0] == pytest.approx(
            zpooled_exact_response_test(table.swapped(), 0.05)[0], abs=1e-9
        )

    def test_region_agrees_with_p_values(self):
        n_e, n_c, level = 8, 6, 0.05
        region = inference_service.exact_rejection_region(n_e, n_c, level)
        assert region.shape == (n_e + 1, n_c + 1)
        for k_e in range(n_e + 1):
            for k_c in range(n_c + 1):
                _, reject = zpooled_exact_response_test(ResponseTable(k_e, n_e, k_c, n_c), level)
                assert region[k_e, k_c] == reject

    def test_region_size_bounded_by_level(self):
        n_e, n_c, level = 10, 10, local_level(0.05)
        region = inference_service.exact_rejection_region(n_e, n_c, level)
        for p in (0.1, 0.3, 0.5, 0.8):
            size = (
                stats.binom.pmf(np.arange(n_e + 1), n_e, p)
                @ region.astype(float)
                @ stats.binom.pmf(np.arange(n_c + 1), n_c, p)
            )
            assert size <= level + 1e-9

    def test_region_follows_runtime_settings(self, monkeypatch):
        assert inference_service.exact_rejection_region(10, 10, 0.05).any()
        # all |T_p| sit below the tolerance, which reads as no difference
        monkeypatch.setattr(app_config, "tie_tolerance", 10.0)
        assert not inference_service.exact_rejection_region(10, 10, 0.05).any()


class TestConditionalHazardTest:
    @pytest.mark.parametrize("k", [1, 3, 10, 50])
    def test_balanced_critical_value(self, k):
        """With k_E = k_C the two tails are mirror images"""
        level = local_level(0.05)
        expected = math.log(numerics.beta_prime_quantile(k, k, 1 - level / 2))
        assert conditional_critical_value(k, k, level) == pytest.approx(expected, abs=1e-10)

    def test_unbalanced_residual(self):
        level = local_level(0.05)
        c = conditional_critical_value(4, 7, level)
        r = 7 / 4
        upper = stats.betaprime.sf(r * math.exp(c), 7, 4)
        tail = upper + stats.betaprime.cdf(r * math.exp(-c), 7, 4)
        assert tail == pytest.approx(level, rel=1e-8)

    def test_vectorised_matches_scalar(self):
        k_e = np.array([[1, 2], [5, 9]])
        k_c = np.array([[3, 2], [1, 9]])
        table = critical_values(k_e, k_c, 0.02)
        for idx in np.ndindex(k_e.shape):
            assert table[idx] == pytest.approx(
                conditional_critical_value(int(k_e[idx]), int(k_c[idx]), 0.02), abs=1e-11
            )

    def test_cache_rows_and_columns_zero_are_nan(self):
        inference_service.critical_value_cache.clear()
        table = inference_service.critical_value_cache.table(3, 4, 0.03)
        assert table.shape == (4, 5)
        assert np.isnan(table[0]).all() and np.isnan(table[:, 0]).all()
        grown = inference_service.critical_value_cache.table(6, 2, 0.03)
        assert grown[2, 2] == pytest.approx(table[2, 2])

    def test_critical_value_rejects_empty_stratum(self):
        with pytest.raises(DomainError):
            conditional_critical_value(0, 3, 0.05)

    def test_empty_stratum_p_value(self):
        assert conditional_p_value(0, 0.0, 4, 2.0) == 1.0

    def test_equal_means_p_value(self):
        assert conditional_p_value(3, 6.0, 5, 10.0) == pytest.approx(1.0, abs=1e-12)

    def test_p_value_at_critical_value_equals_level(self):
        level = 0.01
        k_e, k_c = 6, 4
        c = conditional_critical_value(k_e, k_c, level)
        # mean_C / mean_E = e^c
        total_e = float(k_e)
        total_c = k_c * math.exp(c)
        assert conditional_p_value(k_e, total_e, k_c, total_c) == pytest.approx(level, rel=1e-8)

    @pytest.mark.slow
    @pytest.mark.parametrize("k_e,k_c", [(3, 3), (4, 9)])
    def test_p_value_uniform_under_equal_hazards(self, k_e, k_c):
        rng = np.random.default_rng(k_e * 100 + k_c)
        runs = 100_000
        total_e = rng.gamma(k_e, 1.0 / 0.2, size=runs)
        total_c = rng.gamma(k_c, 1.0 / 0.2, size=runs)
        p_values = [
            conditional_p_value(k_e, float(t_e), k_c, float(t_c))
            for t_e, t_c in zip(total_e, total_c, strict=True)
        ]
        assert stats.kstest(p_values, "uniform").pvalue > 1e-3


class TestExactTest:
    def test_scale_invariance(self, random_trial):
        data_e, data_c = split(random_trial)
        base = exact_test(data_e, data_c, 0.05)
        rescaled = exact_test(data_e.scaled(7.5), data_c.scaled(7.5), 0.05)
        assert rescaled.p_value_p == pytest.approx(base.p_value_p, abs=1e-12)
        assert rescaled.p_value_theta1 == pytest.approx(base.p_value_theta1, rel=1e-9)
        assert rescaled.p_value_theta0 == pytest.approx(base.p_value_theta0, rel=1e-9)

    def test_swap_invariance(self, random_trial):
        data_e, data_c = split(random_trial)
        forward = exact_test(data_e, data_c, 0.05)
        backward = exact_test(
            data_c.relabeled(Group.EXPERIMENTAL), data_e.relabeled(Group.CONTROL), 0.05
        )
        assert backward.p_value_p == pytest.approx(forward.p_value_p, abs=1e-9)
        assert backward.p_value_theta1 == pytest.approx(forward.p_value_theta1, rel=1e-9)
        assert backward.p_value_theta0 == pytest.approx(forward.p_value_theta0, rel=1e-9)

    def test_decisions_follow_p_values(self, random_trial):
        data_e, data_c = split(random_trial)
        outcome = exact_test(data_e, data_c, 0.05)
        level = local_level(0.05)
        assert outcome.reject_theta1 == (outcome.p_value_theta1 <= level)
        assert outcome.reject_theta0 == (outcome.p_value_theta0 <= level)
        assert outcome.reject_global == (
            outcome.reject_p or outcome.reject_theta1 or outcome.reject_theta0
        )

    @pytest.mark.parametrize("seed", [1, 2, 3, 4, 5])
    def test_cached_decisions_match(self, seed):
        rng = np.random.default_rng(seed)
        responder_e = rng.random(15) < 0.5
        responder_c = rng.random(12) < 0.3
        data_e = Dataset.single_group(
            Group.EXPERIMENTAL, responder_e, rng.exponential(np.where(responder_e, 4.0, 1.0))
        )
        data_c = Dataset.single_group(
            Group.CONTROL, responder_c, rng.exponential(np.where(responder_c, 2.0, 1.0))
        )
        full = exact_test(data_e, data_c, 0.1)
        fast = exact_decision(data_e, data_c, 0.1)
        assert (fast.reject_p, fast.reject_theta1, fast.reject_theta0) == (
            full.reject_p,
            full.reject_theta1,
            full.reject_theta0,
        )

    def test_run_test_dispatch(self, small_dataset):
        data_e, data_c = split(small_dataset)
        for method in TestMethod:
            outcome = inference_service.run_test(method, data_e, data_c, 0.05)
            assert outcome.method is method

    def test_custom_local_levels_recorded(self, small_dataset):
        data_e, data_c = split(small_dataset)
        levels = (0.03, 0.01, 1 - 0.95 / (0.97 * 0.99))
        outcome = exact_test(data_e, data_c, 0.05, levels)
        assert outcome.local_levels == levels
