"""Exact operating characteristics of the approximate and exact RSES tests

Both tests are evaluated by enumerating the responder counts (kE, kC).
Given the counts, the two stratum tests are independent and their
rejection probabilities follow from the beta prime distribution of the
scaled ratio of stratum time totals.
"""

import logging
import math
from collections.abc import Iterable

import numpy as np
import pandas as pd

from src.core import numerics
from src.core.app_config import app_config
from src.models.models import RsesParams, TwoGroupModel
from src.models.results import OcRequest, OcResult, TestMethod
from src.services.inference_service import (
    critical_value_cache,
    exact_rejection_region,
    pooled_z_statistic,
    resolve_local_levels,
)

logger = logging.getLogger(__name__)


def _cell_weights(request: OcRequest) -> tuple[np.ndarray, np.ndarray, float]:
    """Product-binomial pmf f(kE, kC) with the mask of evaluated cells

    Above ``full_enumeration_limit`` cells below ``truncation_threshold`` are
    skipped and their total mass is returned as the truncation error.
    """
    pmf_e = numerics.binomial_pmf_vector(request.n_e, request.model.experimental.p)
    pmf_c = numerics.binomial_pmf_vector(request.n_c, request.model.control.p)
    weights = np.outer(pmf_e, pmf_c)

    if max(request.n_e, request.n_c) <= app_config.full_enumeration_limit:
        return weights, np.ones(weights.shape, dtype=bool), 0.0

    kept = weights >= app_config.truncation_threshold
    dropped = math.fsum(weights[~kept])
    logger.debug(f"Truncated {int((~kept).sum())} cells carrying mass {dropped:.3g}")
    return weights, kept, dropped


def _stratum_acceptance(
    k_e: np.ndarray, k_c: np.ndarray, hazard_ratio: float, threshold: np.ndarray
) -> np.ndarray:
    """P(|theta_hat_E - theta_hat_C| <= threshold | kE, kC) with hazard_ratio = lambda_C / lambda_E

    Cells with an empty stratum on either side never reject (acceptance 1).
    """
    acceptance = np.ones(k_e.shape)
    live = (k_e >= 1) & (k_c >= 1)
    if not np.any(live):
        return acceptance
    a = k_c[live].astype(float)
    b = k_e[live].astype(float)
    centre = hazard_ratio * a / b
    c = threshold[live]
    upper = numerics.beta_prime_cdf(a, b, centre * np.exp(c))
    lower = numerics.beta_prime_cdf(a, b, centre * np.exp(-c))
    acceptance[live] = np.clip(np.asarray(upper) - np.asarray(lower), 0.0, 1.0)
    return acceptance


def _count_grids(n_e: int, n_c: int, kept: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    k_e, k_c = np.meshgrid(np.arange(n_e + 1), np.arange(n_c + 1), indexing="ij")
    return k_e[kept], k_c[kept]


def _assemble(
    weights: np.ndarray,
    kept: np.ndarray,
    response_region: np.ndarray,
    acceptance_1: np.ndarray,
    acceptance_0: np.ndarray,
    truncation_error: float,
) -> OcResult:
    # Cells are visited in lexicographic (kE, kC) order; fsum keeps the
    # reduction exact and schedule-independent
    f = weights[kept]
    in_region = response_region[kept]
    response_part = math.fsum(f[in_region])
    accepted = acceptance_1[~in_region] * acceptance_0[~in_region]
    stratum_part = math.fsum(f[~in_region] * (1.0 - accepted))
    total = min(1.0, max(0.0, response_part + stratum_part))
    return OcResult(
        rejection_probability=total,
        response_part=response_part,
        stratum_part=stratum_part,
        enumeration_size=int(kept.sum()),
        truncation_error=truncation_error,
    )


def _hazard_ratios(model: TwoGroupModel) -> tuple[float, float]:
    return (
        model.control.lambda1 / model.experimental.lambda1,
        model.control.lambda0 / model.experimental.lambda0,
    )


def exact_power_exact_test(request: OcRequest) -> OcResult:
    """Exact rejection probability of the exact RSES test

    P = P(R_p) + sum over cells outside R_p of f * (1 - u1 * u0), with u the
    conditional acceptance probabilities of the stratum tests.
    """
    levels = resolve_local_levels(request.alpha, request.local_levels)
    n_e, n_c = request.n_e, request.n_c
    weights, kept, truncation_error = _cell_weights(request)
    k_e, k_c = _count_grids(n_e, n_c, kept)
    ratio_1, ratio_0 = _hazard_ratios(request.model)

    region = exact_rejection_region(n_e, n_c, levels[0])
    crit_1 = critical_value_cache.table(n_e, n_c, levels[1])
    crit_0 = critical_value_cache.table(n_e, n_c, levels[2])

    m_e, m_c = n_e - k_e, n_c - k_c
    acceptance_1 = _stratum_acceptance(k_e, k_c, ratio_1, np.nan_to_num(crit_1[k_e, k_c]))
    acceptance_0 = _stratum_acceptance(m_e, m_c, ratio_0, np.nan_to_num(crit_0[m_e, m_c]))

    result = _assemble(weights, kept, region, acceptance_1, acceptance_0, truncation_error)
    logger.debug(f"Exact test OC n_e={n_e}, n_c={n_c}: {result.rejection_probability:.6g}")
    return result


def exact_power_approx_test(request: OcRequest) -> OcResult:
    """Exact rejection probability of the approximate (Wald-type) RSES test

    The Wald rule |T_theta| > z is a fixed threshold on the log-hazard
    difference once (kE, kC) and hence the pooled response estimate are known.
    """
    levels = resolve_local_levels(request.alpha, request.local_levels)
    n_e, n_c = request.n_e, request.n_c
    weights, kept, truncation_error = _cell_weights(request)
    k_e, k_c = _count_grids(n_e, n_c, kept)
    ratio_1, ratio_0 = _hazard_ratios(request.model)
    z_p, z_1, z_0 = (float(numerics.normal_quantile(1.0 - a / 2.0)) for a in levels)

    all_e, all_c = np.meshgrid(np.arange(n_e + 1), np.arange(n_c + 1), indexing="ij")
    region = np.abs(pooled_z_statistic(all_e, n_e, all_c, n_c)) > z_p

    pooled = (k_e + k_c) / (n_e + n_c)
    size_term = 1.0 / n_e + 1.0 / n_c
    with np.errstate(divide="ignore", invalid="ignore"):
        threshold_1 = np.nan_to_num(z_1 * np.sqrt(size_term / pooled), posinf=0.0)
        threshold_0 = np.nan_to_num(z_0 * np.sqrt(size_term / (1.0 - pooled)), posinf=0.0)

    acceptance_1 = _stratum_acceptance(k_e, k_c, ratio_1, threshold_1)
    acceptance_0 = _stratum_acceptance(n_e - k_e, n_c - k_c, ratio_0, threshold_0)

    result = _assemble(weights, kept, region, acceptance_1, acceptance_0, truncation_error)
    logger.debug(f"Approximate test OC n_e={n_e}, n_c={n_c}: {result.rejection_probability:.6g}")
    return result


def rejection_probability(request: OcRequest) -> OcResult:
    if request.test is TestMethod.APPROXIMATE:
        return exact_power_approx_test(request)
    return exact_power_exact_test(request)


def type1_error(
    model_null: RsesParams,
    n_e: int,
    n_c: int,
    alpha: float,
    test: TestMethod,
    local_levels: tuple[float, float, float] | None = None,
) -> OcResult:
    """Rejection probability when both groups share ``model_null``"""
    request = OcRequest(TwoGroupModel.null(model_null), n_e, n_c, alpha, test, local_levels)
    return rejection_probability(request)


def power_curve(
    model: TwoGroupModel,
    n_values: Iterable[int],
    alpha: float,
    test: TestMethod,
    ratio: float = 1.0,
    local_levels: tuple[float, float, float] | None = None,
) -> pd.DataFrame:
    """Rejection probability for each control group size n, with nE = ceil(ratio * n)"""
    rows = []
    for n in n_values:
        n_e = math.ceil(ratio * n)
        result = rejection_probability(OcRequest(model, n_e, n, alpha, test, local_levels))
        rows.append(
            {
                "n": n,
                "rate": result.rejection_probability,
                "truncation_error": result.truncation_error,
            }
        )
        logger.info(f"n={n}: rejection probability {result.rejection_probability:.6f}")
    return pd.DataFrame(rows, columns=["n", "rate", "truncation_error"])
