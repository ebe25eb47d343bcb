"""Approximate and exact sample size calculation

The approximate method multiplies the normal-approximation acceptance
probabilities of the three local tests and solves for the control group
size on a continuous scale. The exact method walks from there using exact
power of the exact test.
"""

import logging
import math

import pandas as pd

from src.core import numerics
from src.core.app_config import app_config
from src.core.errors import DomainError, NumericalError, UndefinedDesignError
from src.models.results import DesignMethod, DesignResult, DesignSpec, OcRequest, TestMethod
from src.services import oc_service, scenarios
from src.services.inference_service import resolve_local_levels

logger = logging.getLogger(__name__)

BISECTION_WIDTH = 0.25
MAX_BRACKET_DOUBLINGS = 60


def _sizes(spec: DesignSpec, n_c: float) -> tuple[float, float]:
    if not n_c > 0:
        raise DomainError(f"control group size must be positive, got {n_c}")
    return spec.ratio * n_c, n_c


def _pooled_response(spec: DesignSpec, n_c: float) -> float:
    n_e, n_c = _sizes(spec, n_c)
    p_e, p_c = spec.model_alt.experimental.p, spec.model_alt.control.p
    pooled = (n_e * p_e + n_c * p_c) / (n_e + n_c)
    if pooled <= 0.0 or pooled >= 1.0:
        raise DomainError("pooled response probability is 0 or 1; strata cannot be compared")
    return pooled


def _z(spec: DesignSpec, index: int) -> float:
    level = resolve_local_levels(spec.alpha, spec.local_levels)[index]
    return float(numerics.normal_quantile(1.0 - level / 2.0))


def _acceptance(critical: float, effect: float, sd: float) -> float:
    if sd == 0.0:
        return 1.0 if critical >= effect else 0.0
    return float(numerics.normal_cdf((critical - effect) / sd))


def accept_prob_p(spec: DesignSpec, n_c: float) -> float:
    """Approximate probability of accepting equal response probabilities"""
    pooled = _pooled_response(spec, n_c)
    n_e, n_c = _sizes(spec, n_c)
    p_e, p_c = spec.model_alt.experimental.p, spec.model_alt.control.p
    size_term = 1.0 / n_e + 1.0 / n_c
    critical = _z(spec, 0) * math.sqrt(pooled * (1.0 - pooled) * size_term)
    sd = math.sqrt(p_e * (1.0 - p_e) / n_e + p_c * (1.0 - p_c) / n_c)
    return _acceptance(critical, abs(p_e - p_c), sd)


def accept_prob_theta1(spec: DesignSpec, n_c: float) -> float:
    """Approximate probability of accepting equal responder log-hazards

    1 when a group has no responders under the alternative.
    """
    pooled = _pooled_response(spec, n_c)
    n_e, n_c = _sizes(spec, n_c)
    e, c = spec.model_alt.experimental, spec.model_alt.control
    if e.p == 0.0 or c.p == 0.0:
        return 1.0
    critical = _z(spec, 1) * math.sqrt(1.0 / pooled * (1.0 / n_e + 1.0 / n_c))
    sd = math.sqrt(1.0 / (n_e * e.p) + 1.0 / (n_c * c.p))
    return _acceptance(critical, abs(e.theta1 - c.theta1), sd)


def accept_prob_theta0(spec: DesignSpec, n_c: float) -> float:
    """Approximate probability of accepting equal non-responder log-hazards"""
    pooled = _pooled_response(spec, n_c)
    n_e, n_c = _sizes(spec, n_c)
    e, c = spec.model_alt.experimental, spec.model_alt.control
    if e.p == 1.0 or c.p == 1.0:
        return 1.0
    critical = _z(spec, 2) * math.sqrt(1.0 / (1.0 - pooled) * (1.0 / n_e + 1.0 / n_c))
    sd = math.sqrt(1.0 / (n_e * (1.0 - e.p)) + 1.0 / (n_c * (1.0 - c.p)))
    return _acceptance(critical, abs(e.theta0 - c.theta0), sd)


def acceptance_product(spec: DesignSpec, n_c: float) -> float:
    return accept_prob_p(spec, n_c) * accept_prob_theta1(spec, n_c) * accept_prob_theta0(spec, n_c)


def _has_effect(spec: DesignSpec) -> bool:
    e, c = spec.model_alt.experimental, spec.model_alt.control
    tolerance = app_config.relation_tolerance
    if not math.isclose(e.p, c.p, abs_tol=tolerance):
        return True
    testable_1 = e.p > 0.0 and c.p > 0.0
    testable_0 = e.p < 1.0 and c.p < 1.0
    return (testable_1 and not math.isclose(e.theta1, c.theta1, abs_tol=tolerance)) or (
        testable_0 and not math.isclose(e.theta0, c.theta0, abs_tol=tolerance)
    )


def experimental_size(spec: DesignSpec, n_c: int) -> int:
    """nE = ceil(r * nC), guarded against representation error in r * nC"""
    return math.ceil(round(spec.ratio * n_c, 9))


def _exact_power(spec: DesignSpec, n_c: int, test: TestMethod) -> float:
    request = OcRequest(
        spec.model_alt, experimental_size(spec, n_c), n_c, spec.alpha, test, spec.local_levels
    )
    return oc_service.rejection_probability(request).rejection_probability


def _continuous_root(spec: DesignSpec) -> tuple[int, int]:
    """Smallest integer nC with acceptance product <= beta, and the evaluation count"""
    evaluations = 1
    if acceptance_product(spec, 1.0) <= spec.beta:
        return 1, evaluations

    lo, hi = 1.0, 2.0
    for _ in range(MAX_BRACKET_DOUBLINGS):
        evaluations += 1
        if acceptance_product(spec, hi) <= spec.beta:
            break
        lo, hi = hi, hi * 2.0
    else:
        raise NumericalError("could not bracket the approximate sample size")

    while hi - lo >= BISECTION_WIDTH:
        mid = (lo + hi) / 2.0
        evaluations += 1
        if acceptance_product(spec, mid) <= spec.beta:
            hi = mid
        else:
            lo = mid

    n_c = math.ceil(hi)
    while n_c > 1 and acceptance_product(spec, n_c - 1) <= spec.beta:
        evaluations += 1
        n_c -= 1
    return n_c, evaluations


def approx_sample_size(spec: DesignSpec, evaluate_power: bool = True) -> DesignResult:
    """Approximate sample size; with ``evaluate_power`` the exact power of both tests is attached"""
    if not _has_effect(spec):
        raise UndefinedDesignError("undefined design: the alternative has no group difference")
    n_c, evaluations = _continuous_root(spec)
    n_e = experimental_size(spec, n_c)
    logger.info(f"Approximate sample size: n_C={n_c}, n_E={n_e} ({evaluations} evaluations)")

    achieved = approx_power = math.nan
    if evaluate_power:
        achieved = _exact_power(spec, n_c, TestMethod.EXACT)
        approx_power = _exact_power(spec, n_c, TestMethod.APPROXIMATE)
    return DesignResult(
        n_c=n_c,
        n_e=n_e,
        achieved_power=achieved,
        method=DesignMethod.APPROXIMATE,
        iterations=evaluations,
        approx_test_power=approx_power,
    )


def exact_sample_size(spec: DesignSpec) -> DesignResult:
    """Walk from the approximate size using exact power of the exact test

    Moves up while power falls short of 1 - beta, otherwise down while the
    next smaller size still reaches it.
    """
    start = approx_sample_size(spec, evaluate_power=False).n_c
    target = 1.0 - spec.beta
    cap = app_config.exact_scan_cap_factor * start
    trace: list[tuple[int, float]] = []

    def power(n_c: int) -> float:
        value = _exact_power(spec, n_c, TestMethod.EXACT)
        trace.append((n_c, value))
        logger.debug(f"Exact power at n_C={n_c}: {value:.6f}")
        return value

    n_c = start
    current = power(n_c)
    if current < target:
        while current < target:
            n_c += 1
            if n_c > cap:
                raise NumericalError(
                    f"exact sample size exceeds {cap} "
                    f"(cap factor {app_config.exact_scan_cap_factor})"
                )
            current = power(n_c)
    else:
        while n_c > 1:
            below = power(n_c - 1)
            if below < target:
                break
            n_c, current = n_c - 1, below

    logger.info(f"Exact sample size: n_C={n_c} after {len(trace)} power evaluations")
    return DesignResult(
        n_c=n_c,
        n_e=experimental_size(spec, n_c),
        achieved_power=current,
        method=DesignMethod.EXACT_ITERATIVE,
        iterations=len(trace),
        approx_test_power=_exact_power(spec, n_c, TestMethod.APPROXIMATE),
        power_trace=tuple(trace),
    )


def sample_size(spec: DesignSpec, method: DesignMethod) -> DesignResult:
    if method is DesignMethod.EXACT_ITERATIVE:
        return exact_sample_size(spec)
    return approx_sample_size(spec)


def reference_design_grid(
    gamma: float = scenarios.BASE_HAZARD,
    alpha: float = 0.05,
    beta: float = 0.2,
    ratio: float = 1.0,
) -> pd.DataFrame:
    """Approximate sample sizes and exact power of both tests across the constellation grid"""
    rows = []
    for constellation, p_e, model in scenarios.design_constellations(gamma):
        result = approx_sample_size(DesignSpec(model, ratio, alpha, beta))
        rows.append(
            {
                "constellation": constellation,
                "p_e": p_e,
                "n_c": result.n_c,
                "n_e": result.n_e,
                "exact_test_power": result.achieved_power,
                "approx_test_power": result.approx_test_power,
            }
        )
        logger.info(f"Constellation {constellation}, p_E={p_e}: n_C={result.n_c}")
    return pd.DataFrame(rows)
