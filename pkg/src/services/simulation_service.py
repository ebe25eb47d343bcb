"""Monte Carlo rejection rates of the logrank and RSES tests

Run ``i`` draws its data from its own substream (seed, i), so the tally is
the same for any thread count or chunking.
"""

import logging

import numpy as np
from joblib import Parallel, delayed

from src.core import numerics
from src.core.app_config import app_config
from src.core.errors import DegenerateStatisticError, DomainError
from src.models.models import Dataset, TwoGroupModel
from src.models.results import SimulatedTest, SimulationReport
from src.services import logrank_service
from src.services.inference_service import (
    approx_test,
    critical_value_cache,
    exact_decision,
    exact_rejection_region,
    resolve_local_levels,
)
from src.services.model_service import make_rng, sample_trial

logger = logging.getLogger(__name__)

CHUNK_SIZE = 2000


def simulate_dataset(model: TwoGroupModel, n_e: int, n_c: int, seed: int, run: int = 0) -> Dataset:
    """The combined dataset drawn for one run"""
    data_e, data_c = sample_trial(model, n_e, n_c, make_rng(seed, run))
    return Dataset.combine(data_e, data_c)


def _logrank_rejects(statistic, data: Dataset, critical: float) -> bool:
    try:
        return abs(statistic(data)) > critical
    except DegenerateStatisticError:
        return False


def _decision_rule(
    test: SimulatedTest,
    alpha: float,
    logrank_level: float,
    local_levels: tuple[float, float, float] | None,
):
    if test is SimulatedTest.APPROX_RSES:
        return lambda e, c: approx_test(e, c, alpha, local_levels).reject_global
    if test is SimulatedTest.EXACT_RSES:
        return lambda e, c: exact_decision(e, c, alpha, local_levels).reject_global

    critical = float(numerics.normal_quantile(1.0 - logrank_level / 2.0))
    statistic = (
        logrank_service.logrank_statistic
        if test is SimulatedTest.LOGRANK
        else logrank_service.stratified_logrank_statistic
    )
    return lambda e, c: _logrank_rejects(statistic, Dataset.combine(e, c), critical)


def _warm_exact_caches(n_e: int, n_c: int, alpha: float, local_levels) -> None:
    levels = resolve_local_levels(alpha, local_levels)
    exact_rejection_region(n_e, n_c, levels[0])
    critical_value_cache.table(n_e, n_c, levels[1])
    critical_value_cache.table(n_e, n_c, levels[2])


def _count_rejections(
    decide, model: TwoGroupModel, n_e: int, n_c: int, seed: int, runs: range
) -> int:
    rejections = 0
    for run in runs:
        data_e, data_c = sample_trial(model, n_e, n_c, make_rng(seed, run))
        rejections += bool(decide(data_e, data_c))
    return rejections


def simulate_rejection_rate(
    model: TwoGroupModel,
    n_e: int,
    n_c: int,
    alpha: float,
    test: SimulatedTest | str,
    runs: int,
    seed: int,
    logrank_level: float | None = None,
    local_levels: tuple[float, float, float] | None = None,
    threads: int | None = None,
) -> SimulationReport:
    """Simulated rejection rate of ``test``

    Logrank tests reject when |T| exceeds the normal critical value at
    ``logrank_level`` (default ``alpha``); degenerate statistics count as
    non-rejections.
    """
    test = SimulatedTest.parse(test)
    if runs < 1:
        raise DomainError(f"runs must be at least 1, got {runs}")
    if n_e < 1 or n_c < 1:
        raise DomainError("group sizes must be at least 1")
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    logrank_level = alpha if logrank_level is None else logrank_level
    threads = app_config.threads if threads is None else threads

    if test is SimulatedTest.EXACT_RSES:
        _warm_exact_caches(n_e, n_c, alpha, local_levels)
    decide = _decision_rule(test, alpha, logrank_level, local_levels)

    chunks = [range(start, min(start + CHUNK_SIZE, runs)) for start in range(0, runs, CHUNK_SIZE)]
    logger.info(
        f"Simulating {test.value}: {runs} runs in {len(chunks)} chunks on {threads} thread(s)"
    )
    counts = Parallel(n_jobs=threads, prefer="threads")(
        delayed(_count_rejections)(decide, model, n_e, n_c, seed, chunk) for chunk in chunks
    )
    rejections = int(np.sum(counts))

    report = SimulationReport(test=test, runs=runs, rejections=rejections, seed=seed)
    logger.info(f"{test.value}: rate {report.rate:.5f} (SE {report.standard_error:.5f})")
    return report
