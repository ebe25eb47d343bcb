"""Tests for the risk table and the (stratified) logrank statistic"""

import math
import unittest

import numpy as np
import pytest

from src.core.errors import DegenerateStatisticError, DomainError
from src.models.models import Dataset
from src.services import logrank_service


def trial(times_e, times_c, responder_e=None, responder_c=None):
    responder_e = [True] * len(times_e) if responder_e is None else responder_e
    responder_c = [True] * len(times_c) if responder_c is None else responder_c
    return Dataset(
        np.array([True] * len(times_e) + [False] * len(times_c)),
        np.array(responder_e + responder_c),
        np.array(times_e + times_c, dtype=float),
    )


class TestRiskTable(unittest.TestCase):
    def test_alternating_times(self):
        rows = logrank_service.risk_table(trial([1, 3, 5], [2, 4, 6]))
        self.assertEqual([r.event_time for r in rows], [1, 2, 3, 4, 5, 6])
        self.assertEqual([r.at_risk for r in rows], [6, 5, 4, 3, 2, 1])
        self.assertEqual([r.at_risk_e for r in rows], [3, 2, 2, 1, 1, 0])
        self.assertEqual([r.events_e for r in rows], [1, 0, 1, 0, 1, 0])

    def test_ties_share_a_row(self):
        rows = logrank_service.risk_table(trial([1, 1, 2], [1, 3]))
        self.assertEqual(len(rows), 3)
        first = rows[0]
        counts = (first.at_risk, first.at_risk_e, first.events, first.events_e)
        self.assertEqual(counts, (5, 3, 3, 2))

    def test_empty(self):
        self.assertEqual(logrank_service.risk_table(Dataset()), [])


class TestLogrankStatistic:
    def test_hand_computed(self):
        data = trial([1, 3, 5], [2, 4, 6])
        expected = 3 - 67 / 30
        variance = 0.25 + 0.24 + 0.25 + 2 / 9 + 0.25
        assert logrank_service.logrank_statistic(data) == pytest.approx(
            expected / math.sqrt(variance), rel=1e-12
        )

    def test_two_subjects(self):
        assert logrank_service.logrank_statistic(trial([1], [2])) == pytest.approx(1.0)

    def test_tie_variance_correction(self):
        difference, variance = logrank_service._observed_minus_expected(trial([1, 1, 2], [1, 3]))
        # rows: (Y, Y_E, d, d_E) = (5, 3, 3, 2), (2, 1, 1, 1), (1, 0, 1, 0)
        assert difference == pytest.approx(3 - (1.8 + 0.5))
        assert variance == pytest.approx(3 * 0.6 * 0.4 * 2 / 4 + 0.25)

    def test_single_tied_pair_is_degenerate(self):
        with pytest.raises(DegenerateStatisticError):
            logrank_service.logrank_statistic(trial([1], [1]))

    def test_empty_dataset(self):
        with pytest.raises(DomainError):
            logrank_service.logrank_statistic(Dataset())

    def test_group_swap_flips_sign(self, random_trial):
        forward = logrank_service.logrank_statistic(random_trial)
        assert logrank_service.logrank_statistic(random_trial.swapped()) == pytest.approx(-forward)

    def test_rank_invariance(self, random_trial):
        forward = logrank_service.logrank_statistic(random_trial)
        transformed = Dataset(
            random_trial.experimental, random_trial.responder, np.sqrt(random_trial.time) * 4.0
        )
        assert logrank_service.logrank_statistic(transformed) == pytest.approx(forward, rel=1e-12)


class TestStratifiedLogrank:
    def test_one_group_stratum_adds_nothing(self):
        # responders only in E; non-responders form the alternating example
        data = trial([1, 3, 5, 0.5, 0.7], [2, 4, 6], [False] * 3 + [True] * 2, [False] * 3)
        expected = logrank_service.logrank_statistic(trial([1, 3, 5], [2, 4, 6]))
        assert logrank_service.stratified_logrank_statistic(data) == pytest.approx(expected)

    def test_sums_stratum_contributions(self, random_trial):
        data = random_trial
        parts = []
        for mask in (data.responder, ~data.responder):
            stratum = Dataset(data.experimental[mask], data.responder[mask], data.time[mask])
            parts.append(logrank_service._observed_minus_expected(stratum))
        (d_1, v_1), (d_0, v_0) = parts
        assert logrank_service.stratified_logrank_statistic(random_trial) == pytest.approx(
            (d_1 + d_0) / math.sqrt(v_1 + v_0)
        )

    def test_degenerate_when_no_stratum_compares_groups(self):
        data = trial([1, 2], [3, 4], [True, True], [False, False])
        with pytest.raises(DegenerateStatisticError):
            logrank_service.stratified_logrank_statistic(data)
