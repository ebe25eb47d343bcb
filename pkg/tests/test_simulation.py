"""Tests for the Monte Carlo rejection rates"""

import numpy as np
import pytest

from src.core.errors import DomainError
from src.models.models import Group
from src.models.results import OcRequest, SimulatedTest, TestMethod
from src.services import oc_service, simulation_service
from src.services.simulation_service import simulate_dataset, simulate_rejection_rate


class TestSimulateDataset:
    def test_sizes_and_labels(self, response_model):
        data = simulate_dataset(response_model, 7, 4, seed=3)
        assert len(data) == 11
        assert data.count(Group.EXPERIMENTAL) == 7
        assert data.experimental[:7].all() and not data.experimental[7:].any()

    def test_deterministic(self, response_model):
        first = simulate_dataset(response_model, 10, 10, seed=42, run=5)
        second = simulate_dataset(response_model, 10, 10, seed=42, run=5)
        np.testing.assert_array_equal(first.time, second.time)
        other = simulate_dataset(response_model, 10, 10, seed=42, run=6)
        assert not np.array_equal(first.time, other.time)


class TestRejectionRate:
    def test_thread_count_does_not_change_tally(self, survival_model, monkeypatch):
        monkeypatch.setattr(simulation_service, "CHUNK_SIZE", 7)
        single = simulate_rejection_rate(
            survival_model, 15, 15, 0.05, "approx-rses", runs=60, seed=11, threads=1
        )
        pooled = simulate_rejection_rate(
            survival_model, 15, 15, 0.05, "approx-rses", runs=60, seed=11, threads=3
        )
        assert single.rejections == pooled.rejections

    @pytest.mark.parametrize(
        "simulated,method",
        [
            (SimulatedTest.APPROX_RSES, TestMethod.APPROXIMATE),
            (SimulatedTest.EXACT_RSES, TestMethod.EXACT),
        ],
    )
    def test_agrees_with_exact_operating_characteristic(self, survival_model, simulated, method):
        n, runs = 15, 3000
        report = simulate_rejection_rate(survival_model, n, n, 0.05, simulated, runs, seed=2024)
        exact = oc_service.rejection_probability(
            OcRequest(survival_model, n, n, 0.05, method)
        ).rejection_probability
        se = np.sqrt(exact * (1 - exact) / runs)
        assert abs(report.rate - exact) < 4 * se + 1e-3

    def test_logrank_holds_level_under_equal_curves(self, null_model):
        runs = 3000
        report = simulate_rejection_rate(null_model, 30, 30, 0.05, "logrank", runs, seed=9)
        assert abs(report.rate - 0.05) < 4 * np.sqrt(0.05 * 0.95 / runs)

    def test_logrank_level_override(self, survival_model):
        strict = simulate_rejection_rate(
            survival_model, 20, 20, 0.05, "stratified-logrank", 500, seed=1, logrank_level=0.001
        )
        loose = simulate_rejection_rate(
            survival_model, 20, 20, 0.05, "stratified-logrank", 500, seed=1, logrank_level=0.2
        )
        assert strict.rejections <= loose.rejections

    def test_report(self, null_model):
        report = simulate_rejection_rate(null_model, 5, 5, 0.05, "logrank", runs=10, seed=0)
        data = report.to_dict()
        assert data["test"] == "logrank"
        assert data["runs"] == 10
        assert data["rate"] == data["rejections"] / 10

    def test_invalid_arguments(self, null_model):
        with pytest.raises(DomainError):
            simulate_rejection_rate(null_model, 5, 5, 0.05, "logrank", runs=0, seed=0)
        with pytest.raises(DomainError):
            simulate_rejection_rate(null_model, 5, 5, 0.05, "wilcoxon", runs=10, seed=0)
        with pytest.raises(DomainError):
            simulate_rejection_rate(null_model, 0, 5, 0.05, "logrank", runs=10, seed=0)
