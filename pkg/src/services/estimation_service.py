"""Maximum likelihood estimation, asymptotic confidence intervals and their exact coverage"""

import logging
import math
from collections.abc import Iterable

import numpy as np
import pandas as pd

from src.core import numerics
from src.core.errors import DomainError
from src.models.models import Dataset, Group
from src.models.results import ConfidenceInterval, MleResult

logger = logging.getLogger(__name__)


def fit_mle(data: Dataset, group: Group) -> MleResult:
    """Closed-form MLEs of (p, theta1, theta0) for one group

    A log-hazard estimate is ``None`` when its stratum is empty (no unique
    maximiser exists).
    """
    subset = data.subset(group)
    n = len(subset)
    if n == 0:
        raise DomainError(f"no data for group {group.value}")

    k = int(np.count_nonzero(subset.responder))
    responder_times = subset.time[subset.responder]
    other_times = subset.time[~subset.responder]

    theta1 = -math.log(math.fsum(responder_times) / k) if k >= 1 else None
    theta0 = -math.log(math.fsum(other_times) / (n - k)) if k <= n - 1 else None

    logger.debug(f"MLE group {group.value}: n={n}, k={k}, theta1={theta1}, theta0={theta0}")
    return MleResult(n=n, k=k, p_hat=k / n, theta1_hat=theta1, theta0_hat=theta0)


def log_likelihood(data: Dataset, group: Group, p: float, theta1: float, theta0: float) -> float:
    """Log-likelihood of one group's records at (p, theta1, theta0)

    Separates into a binomial part and one exponential part per stratum.
    """
    subset = data.subset(group)
    n = len(subset)
    k = int(np.count_nonzero(subset.responder))
    t1 = math.fsum(subset.time[subset.responder])
    t0 = math.fsum(subset.time[~subset.responder])
    with np.errstate(divide="ignore"):
        binomial_part = float(
            (k * np.log(p) if k else 0.0) + ((n - k) * np.log1p(-p) if n - k else 0.0)
        )
    return (
        binomial_part
        + k * theta1
        - math.exp(theta1) * t1
        + (n - k) * theta0
        - math.exp(theta0) * t0
    )


def fisher_information(n: int, p: float) -> np.ndarray:
    """Fisher information of (p, theta1, theta0) for a group of size n"""
    if not 0.0 < p < 1.0:
        raise DomainError("Fisher information needs 0 < p < 1")
    return np.diag([n / (p * (1.0 - p)), n * p, n * (1.0 - p)])


def asymptotic_variances(n: int, p: float) -> tuple[float, float, float]:
    """Variances of (p_hat, theta1_hat, theta0_hat), asymptotically uncorrelated"""
    info = fisher_information(n, p)
    return tuple(float(v) for v in 1.0 / np.diag(info))


def _z(level: float) -> float:
    if not 0.0 < level < 1.0:
        raise DomainError(f"confidence level must lie in (0, 1), got {level}")
    return float(numerics.normal_quantile(1.0 - (1.0 - level) / 2.0))


def ci_p(result: MleResult, level: float = 0.95) -> ConfidenceInterval:
    """Wald interval for p; deliberately not clipped to [0, 1]"""
    half_width = _z(level) * math.sqrt(result.p_hat * (1.0 - result.p_hat) / result.n)
    return ConfidenceInterval(result.p_hat - half_width, result.p_hat + half_width, level)


def ci_theta1(result: MleResult, level: float = 0.95) -> ConfidenceInterval:
    z = _z(level)
    if result.theta1_hat is None:
        return ConfidenceInterval(-math.inf, math.inf, level)
    half_width = z * math.sqrt(1.0 / (result.n * result.p_hat))
    return ConfidenceInterval(result.theta1_hat - half_width, result.theta1_hat + half_width, level)


def ci_theta0(result: MleResult, level: float = 0.95) -> ConfidenceInterval:
    z = _z(level)
    if result.theta0_hat is None:
        return ConfidenceInterval(-math.inf, math.inf, level)
    half_width = z * math.sqrt(1.0 / (result.n * (1.0 - result.p_hat)))
    return ConfidenceInterval(result.theta0_hat - half_width, result.theta0_hat + half_width, level)


def coverage_p(n: int, p0: float, level: float = 0.95) -> float:
    """Exact coverage probability of the Wald interval for p"""
    if n < 1:
        raise DomainError("coverage needs n >= 1")
    z = _z(level)
    k = np.arange(n + 1)
    p_hat = k / n
    covered = np.abs(p0 - p_hat) <= z * np.sqrt(p_hat * (1.0 - p_hat) / n)
    pmf = numerics.binomial_pmf_vector(n, p0)
    return math.fsum(pmf[covered])


def _conditional_log_hazard_coverage(counts: np.ndarray, z: float) -> np.ndarray:
    """P(|theta_hat - theta| <= z / sqrt(k) | k) using lambda * exp(-theta_hat) ~ Gamma(k, k)"""
    half_width = z / np.sqrt(counts)
    upper = numerics.gamma_cdf(counts, counts, np.exp(half_width))
    lower = numerics.gamma_cdf(counts, counts, np.exp(-half_width))
    return np.asarray(upper) - np.asarray(lower)


def coverage_theta1(n: int, p0: float, level: float = 0.95) -> float:
    """Exact coverage of the responder log-hazard interval; k = 0 counts as covered"""
    if n < 1:
        raise DomainError("coverage needs n >= 1")
    z = _z(level)
    pmf = numerics.binomial_pmf_vector(n, p0)
    k = np.arange(1, n + 1)
    conditional = _conditional_log_hazard_coverage(k, z)
    return math.fsum(np.concatenate([[pmf[0]], pmf[1:] * conditional]))


def coverage_theta0(n: int, p0: float, level: float = 0.95) -> float:
    """Exact coverage of the non-responder log-hazard interval; k = n counts as covered"""
    if n < 1:
        raise DomainError("coverage needs n >= 1")
    z = _z(level)
    pmf = numerics.binomial_pmf_vector(n, p0)
    k = np.arange(0, n)
    conditional = _conditional_log_hazard_coverage(n - k, z)
    return math.fsum(np.concatenate([pmf[:n] * conditional, [pmf[n]]]))


def coverage_grid(
    n_values: Iterable[int], p_values: Iterable[float], level: float = 0.95
) -> pd.DataFrame:
    """Coverage of all three intervals on an (n, p) grid, n-major order"""
    p_values = list(p_values)
    rows = [
        {
            "n": n,
            "p": p,
            "coverage_p": coverage_p(n, p, level),
            "coverage_theta1": coverage_theta1(n, p, level),
            "coverage_theta0": coverage_theta0(n, p, level),
        }
        for n in n_values
        for p in p_values
    ]
    return pd.DataFrame(
        rows, columns=["n", "p", "coverage_p", "coverage_theta1", "coverage_theta0"]
    )
