"""Tests for the exact operating characteristics"""

import math

import numpy as np
import pytest

from src.core import numerics
from src.core.app_config import app_config
from src.core.errors import DomainError
from src.models.models import RsesParams, TwoGroupModel
from src.models.results import OcRequest, TestMethod
from src.services import oc_service, scenarios
from src.services.inference_service import local_level


def rate(model, n_e, n_c, test, alpha=0.05):
    return oc_service.rejection_probability(OcRequest(model, n_e, n_c, alpha, test))


class TestHandComputedCases:
    """With one subject per group every cell can be worked out by hand"""

    @pytest.mark.parametrize("p", [0.13, 0.5, 0.9])
    def test_exact_test_single_subjects(self, p):
        result = oc_service.type1_error(RsesParams(p, 0.2, 0.7), 1, 1, 0.05, TestMethod.EXACT)
        expected = local_level(0.05) * (p * p + (1 - p) * (1 - p))
        assert result.rejection_probability == pytest.approx(expected, rel=1e-10)
        assert result.response_part == 0.0

    @pytest.mark.parametrize("p", [0.13, 0.5, 0.9])
    def test_approx_test_single_subjects(self, p):
        result = oc_service.type1_error(RsesParams(p, 0.2, 0.7), 1, 1, 0.05, TestMethod.APPROXIMATE)
        z = float(numerics.normal_quantile(1.0 - local_level(0.05) / 2.0))
        expected = (p * p + (1 - p) * (1 - p)) * 2.0 / (1.0 + math.exp(z * math.sqrt(2.0)))
        assert result.rejection_probability == pytest.approx(expected, rel=1e-10)

    def test_approx_test_is_anticonservative_at_tiny_sizes(self):
        params = RsesParams(0.5, 0.2, 0.7)
        exact = oc_service.type1_error(params, 1, 1, 0.05, TestMethod.EXACT)
        approx = oc_service.type1_error(params, 1, 1, 0.05, TestMethod.APPROXIMATE)
        assert approx.rejection_probability > exact.rejection_probability


class TestTypeOneError:
    @pytest.mark.parametrize(
        "params",
        [RsesParams(0.13, 0.0568, 0.142), RsesParams(0.5, 0.142, 0.142), RsesParams(0.9, 1.0, 3.0)],
    )
    @pytest.mark.parametrize("n_e,n_c", [(10, 10), (25, 15)])
    def test_exact_test_holds_level(self, params, n_e, n_c):
        result = oc_service.type1_error(params, n_e, n_c, 0.05, TestMethod.EXACT)
        assert 0.0 < result.rejection_probability <= 0.05 + 1e-12

    def test_parts_add_up(self, null_model):
        result = rate(null_model, 20, 20, TestMethod.EXACT)
        assert result.rejection_probability == pytest.approx(
            result.response_part + result.stratum_part, abs=1e-15
        )
        assert result.enumeration_size == 21 * 21
        assert result.truncation_error == 0.0


class TestInvariances:
    @pytest.mark.parametrize("test", list(TestMethod))
    def test_hazard_scale_invariance(self, survival_model, test):
        base = rate(survival_model, 12, 9, test).rejection_probability
        scaled = rate(survival_model.scaled(3.7), 12, 9, test).rejection_probability
        assert scaled == pytest.approx(base, rel=1e-9)

    @pytest.mark.parametrize("test", list(TestMethod))
    def test_group_swap(self, response_model, test):
        forward = rate(response_model, 14, 9, test).rejection_probability
        backward = rate(response_model.swapped(), 9, 14, test).rejection_probability
        assert backward == pytest.approx(forward, rel=1e-8)

    def test_power_grows_with_sample_size(self, survival_model):
        rates = [
            rate(survival_model, n, n, TestMethod.EXACT).rejection_probability
            for n in (20, 60, 150)
        ]
        assert rates[0] < rates[1] < rates[2]

    @pytest.mark.slow
    @pytest.mark.parametrize("test", [TestMethod.EXACT, TestMethod.APPROXIMATE])
    def test_power_nondecreasing_for_response_effect(self, test):
        model = next(s.model for s in scenarios.power_scenarios() if s.name == "+resp p_E=0.26")
        rates = oc_service.power_curve(model, [25, 50, 100, 200], 0.05, test)["rate"].tolist()
        assert all(a <= b for a, b in zip(rates, rates[1:], strict=False))

    def test_response_effect_detected(self):
        model = TwoGroupModel(RsesParams(0.8, 0.1, 0.1), RsesParams(0.1, 0.1, 0.1))
        result = rate(model, 40, 40, TestMethod.EXACT)
        assert result.rejection_probability > 0.9
        assert result.response_part > result.stratum_part


class TestTruncation:
    def test_truncated_enumeration_error_bound(self, response_model, monkeypatch):
        full = rate(response_model, 60, 60, TestMethod.EXACT)
        monkeypatch.setattr(app_config, "full_enumeration_limit", 10)
        truncated = rate(response_model, 60, 60, TestMethod.EXACT)
        assert truncated.truncation_error > 0.0
        assert truncated.enumeration_size < 61 * 61
        assert abs(full.rejection_probability - truncated.rejection_probability) <= (
            truncated.truncation_error + 1e-15
        )


class TestPowerCurve:
    def test_columns_and_values(self, survival_model):
        frame = oc_service.power_curve(survival_model, [10, 20], 0.05, TestMethod.APPROXIMATE)
        assert list(frame.columns) == ["n", "rate", "truncation_error"]
        assert frame["n"].tolist() == [10, 20]
        assert frame["rate"].iloc[1] == pytest.approx(
            rate(survival_model, 20, 20, TestMethod.APPROXIMATE).rejection_probability
        )

    def test_allocation_ratio(self, survival_model):
        frame = oc_service.power_curve(survival_model, [7], 0.05, TestMethod.EXACT, ratio=1.5)
        expected = rate(survival_model, 11, 7, TestMethod.EXACT).rejection_probability
        assert frame["rate"].iloc[0] == pytest.approx(expected)

    def test_rates_are_probabilities(self, response_model):
        frame = oc_service.power_curve(response_model, range(5, 30, 5), 0.05, TestMethod.EXACT)
        assert np.all((frame["rate"] >= 0) & (frame["rate"] <= 1))


def test_request_validation(null_model):
    with pytest.raises(DomainError):
        OcRequest(null_model, 0, 5, 0.05, TestMethod.EXACT)
    with pytest.raises(DomainError):
        OcRequest(null_model, 5, 5, 1.0, TestMethod.EXACT)
