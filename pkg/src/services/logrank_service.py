"""Logrank and stratified logrank statistics for uncensored two-group data"""

import logging
import math

import numpy as np

from src.core.errors import DegenerateStatisticError, DomainError
from src.models.models import Dataset
from src.models.results import RiskTableRow

logger = logging.getLogger(__name__)


def _risk_arrays(data: Dataset) -> tuple[np.ndarray, ...]:
    """Event times with total/E at-risk and event counts; tied times share one row"""
    event_times, inverse, events = np.unique(data.time, return_inverse=True, return_counts=True)
    events_e = np.bincount(
        inverse, weights=data.experimental.astype(float), minlength=len(event_times)
    )
    # Without censoring everyone with T >= t is still at risk at t
    at_risk = len(data) - np.concatenate([[0], np.cumsum(events)[:-1]])
    at_risk_e = int(np.count_nonzero(data.experimental)) - np.concatenate(
        [[0], np.cumsum(events_e)[:-1]]
    )
    return event_times, at_risk, at_risk_e, events, events_e


def risk_table(data: Dataset) -> list[RiskTableRow]:
    if len(data) == 0:
        return []
    times, at_risk, at_risk_e, events, events_e = _risk_arrays(data)
    return [
        RiskTableRow(float(t), int(y), int(y_e), int(d), int(d_e))
        for t, y, y_e, d, d_e in zip(times, at_risk, at_risk_e, events, events_e, strict=True)
    ]


def _observed_minus_expected(data: Dataset) -> tuple[float, float]:
    """(O - E, V) for group E with the hypergeometric variance"""
    if len(data) == 0:
        return 0.0, 0.0
    _times, at_risk, at_risk_e, events, events_e = _risk_arrays(data)
    at_risk = at_risk.astype(float)
    share = at_risk_e / at_risk
    expected = events * share
    with np.errstate(divide="ignore", invalid="ignore"):
        correction = np.where(at_risk > 1, (at_risk - events) / (at_risk - 1.0), 0.0)
    variance = events * share * (1.0 - share) * correction
    return math.fsum(events_e - expected), math.fsum(variance)


def _standardise(difference: float, variance: float) -> float:
    if not variance > 0.0:
        raise DegenerateStatisticError("logrank variance is zero")
    return difference / math.sqrt(variance)


def logrank_statistic(data: Dataset) -> float:
    """(O - E) / sqrt(V) for group E over all distinct event times"""
    if len(data) == 0:
        raise DomainError("logrank statistic needs at least one event")
    return _standardise(*_observed_minus_expected(data))


def stratified_logrank_statistic(data: Dataset) -> float:
    """Logrank statistic summed over the responder and non-responder strata

    A stratum that is empty or holds only one group adds nothing.
    """
    if len(data) == 0:
        raise DomainError("logrank statistic needs at least one event")
    difference = variance = 0.0
    for mask in (data.responder, ~data.responder):
        stratum = Dataset(data.experimental[mask], data.responder[mask], data.time[mask])
        d, v = _observed_minus_expected(stratum)
        difference += d
        variance += v
    return _standardise(difference, variance)
