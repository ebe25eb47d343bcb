"""Approximate and exact tests of the global null hypothesis of equal parameter triples

The global null is the intersection of three local nulls (equal response
probabilities, equal responder log-hazards, equal non-responder log-hazards).
Each local test runs at its own local level; the global null is rejected when
any local test rejects.
"""

import logging
import math
import threading
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import optimize, special, stats

from src.core import numerics
from src.core.app_config import app_config
from src.core.errors import DomainError, NumericalError
from src.models.models import Dataset
from src.models.results import ResponseTable, TestMethod, TestOutcome

logger = logging.getLogger(__name__)

CRITICAL_VALUE_TOLERANCE = 1e-13
MAX_ROOT_ITERATIONS = 200


def local_level(alpha: float) -> float:
    """Per-hypothesis level 1 - (1 - alpha)^(1/3) of the equal split"""
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    return -math.expm1(math.log1p(-alpha) / 3.0)


def resolve_local_levels(
    alpha: float, local_levels: tuple[float, float, float] | None = None
) -> tuple[float, float, float]:
    """Levels for the response, responder-hazard and non-responder-hazard tests"""
    if local_levels is None:
        level = local_level(alpha)
        return level, level, level
    if len(local_levels) != 3 or not all(0.0 < a < 1.0 for a in local_levels):
        raise DomainError("local levels must be three values in (0, 1)")
    kept = math.prod(1.0 - a for a in local_levels)
    if not math.isclose(kept, 1.0 - alpha, rel_tol=1e-9, abs_tol=1e-12):
        raise DomainError("complements of the local levels must multiply to 1 - alpha")
    return tuple(float(a) for a in local_levels)


@dataclass(frozen=True)
class GroupSummary:
    """Sufficient statistics of one group"""

    n: int
    k: int
    responder_total: float
    other_total: float

    @classmethod
    def of(cls, data: Dataset) -> "GroupSummary":
        n = len(data)
        if n == 0:
            raise DomainError("test needs a nonempty dataset in each group")
        k = int(np.count_nonzero(data.responder))
        return cls(
            n=n,
            k=k,
            responder_total=math.fsum(data.time[data.responder]),
            other_total=math.fsum(data.time[~data.responder]),
        )


def _log_hazard_difference(k_e: int, total_e: float, k_c: int, total_c: float) -> float:
    """theta_hat_E - theta_hat_C = log(mean_C / mean_E)"""
    return math.log((total_c / k_c) / (total_e / k_e))


# Response test ---------------------------------------------------------------


def pooled_z_statistic(k_e, n_e, k_c, n_c) -> float | np.ndarray:
    """Two-sample binomial z statistic with pooled variance; 0 when the pooled p is 0 or 1"""
    k_e = np.asarray(k_e, dtype=float)
    k_c = np.asarray(k_c, dtype=float)
    pooled = (k_e + k_c) / (n_e + n_c)
    variance = pooled * (1.0 - pooled) * (1.0 / n_e + 1.0 / n_c)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(variance > 0, (k_e / n_e - k_c / n_c) / np.sqrt(variance), 0.0)
    return float(z) if z.ndim == 0 else z


@lru_cache(maxsize=64)
def _abs_z_table(n_e: int, n_c: int) -> np.ndarray:
    k_e = np.arange(n_e + 1)[:, None]
    k_c = np.arange(n_c + 1)[None, :]
    table = np.abs(pooled_z_statistic(k_e, n_e, k_c, n_c))
    table.setflags(write=False)
    return table


def _nuisance_grid(grid_points: int) -> np.ndarray:
    return np.linspace(0.0, 1.0, grid_points + 2)[1:-1]


@lru_cache(maxsize=64)
def _binomial_grid(n: int, grid_points: int) -> np.ndarray:
    """pmf of Bin(n, p) for every p on the nuisance grid, shape (grid, n + 1)"""
    grid = _nuisance_grid(grid_points)
    table = stats.binom.pmf(np.arange(n + 1)[None, :], n, grid[:, None])
    table.setflags(write=False)
    return table


def _tail_probability(mask: np.ndarray, n_e: int, n_c: int, p: float) -> float:
    pmf_e = numerics.binomial_pmf_vector(n_e, p)
    pmf_c = numerics.binomial_pmf_vector(n_c, p)
    return float(pmf_e @ mask @ pmf_c)


def _tail_supremum(mask: np.ndarray, n_e: int, n_c: int) -> float:
    """sup over the nuisance p of P_p((K_E, K_C) in mask)

    Grid search over ``zpooled_grid_points`` values, then a bounded
    golden-section refinement around the best grid point.
    """
    grid_points = app_config.zpooled_grid_points
    weights = mask.astype(float)
    tails = np.einsum(
        "pi,ij,pj->p", _binomial_grid(n_e, grid_points), weights, _binomial_grid(n_c, grid_points)
    )
    best = int(np.argmax(tails))
    grid = _nuisance_grid(grid_points)
    lo = grid[best - 1] if best > 0 else grid[0] / 2.0
    hi = grid[best + 1] if best < grid_points - 1 else (1.0 + grid[-1]) / 2.0

    refined = optimize.minimize_scalar(
        lambda p: -_tail_probability(weights, n_e, n_c, p),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": app_config.zpooled_refine_tolerance},
    )
    return float(min(1.0, max(tails[best], -refined.fun)))


def _response_p_value(abs_z: np.ndarray, observed: float, n_e: int, n_c: int) -> float:
    if observed <= app_config.tie_tolerance:
        return 1.0
    return _tail_supremum(abs_z >= observed - app_config.tie_tolerance, n_e, n_c)


def zpooled_exact_response_test(table: ResponseTable, alpha_local: float) -> tuple[float, bool]:
    """Z-pooled exact unconditional test of equal response probabilities

    Outcomes at least as extreme as the observed |T_p| (ties included) form the
    tail; the p-value is its supremum probability over the nuisance p.
    """
    abs_z = _abs_z_table(table.n_e, table.n_c)
    p_value = _response_p_value(abs_z, abs_z[table.k_e, table.k_c], table.n_e, table.n_c)
    return p_value, p_value <= alpha_local


def exact_rejection_region(n_e: int, n_c: int, alpha_local: float) -> np.ndarray:
    """Boolean (n_e + 1, n_c + 1) region of the Z-pooled test at ``alpha_local``

    The p-value is nonincreasing in |T_p|, so the region is {|T_p| >= t*} for
    the smallest attained t* whose p-value does not exceed the level.
    """
    return _zpooled_region(
        n_e,
        n_c,
        alpha_local,
        app_config.zpooled_grid_points,
        app_config.zpooled_refine_tolerance,
        app_config.tie_tolerance,
    )


@lru_cache(maxsize=256)
def _zpooled_region(
    n_e: int,
    n_c: int,
    alpha_local: float,
    grid_points: int,
    refine_tolerance: float,
    tie_tolerance: float,
) -> np.ndarray:
    # grid_points and refine_tolerance reach _tail_supremum via app_config; here they key the cache
    abs_z = _abs_z_table(n_e, n_c)
    thresholds = np.unique(abs_z[abs_z > tie_tolerance])
    lo, hi = 0, len(thresholds)
    while lo < hi:
        mid = (lo + hi) // 2
        if _response_p_value(abs_z, thresholds[mid], n_e, n_c) <= alpha_local:
            hi = mid
        else:
            lo = mid + 1

    if lo == len(thresholds):
        region = np.zeros_like(abs_z, dtype=bool)
    else:
        region = abs_z >= thresholds[lo] - tie_tolerance
    logger.debug(
        f"Z-pooled region n_e={n_e}, n_c={n_c}, level={alpha_local:.6g}: "
        f"{int(region.sum())} of {region.size} cells"
    )
    region.setflags(write=False)
    return region


# Conditional hazard tests ----------------------------------------------------


def _two_sided_tail(k_e, k_c, c):
    """P(|log(R / r)| > c) for R ~ beta'(k_c, k_e), r = k_c / k_e"""
    r = k_c / k_e
    return numerics.beta_prime_sf(k_c, k_e, r * np.exp(c)) + numerics.beta_prime_cdf(
        k_c, k_e, r * np.exp(-c)
    )


def _two_sided_tail_slope(k_e, k_c, c):
    """Derivative of :func:`_two_sided_tail` with respect to c"""
    r = k_c / k_e
    log_norm = special.betaln(k_c, k_e)

    def x_density(x):
        # x * f(x) for the beta prime(k_c, k_e) density f
        return np.exp(k_c * np.log(x) - (k_c + k_e) * np.log1p(x) - log_norm)

    return -(x_density(r * np.exp(c)) + x_density(r * np.exp(-c)))


def critical_values(k_e: np.ndarray, k_c: np.ndarray, alpha_local: float) -> np.ndarray:
    """Solve 1 - F(r e^c) + F(r e^-c) = alpha_local elementwise

    F is the beta prime(k_c, k_e) CDF and r = k_c / k_e. Safeguarded Newton on
    log(tail) with a bisection fallback inside a maintained bracket.
    """
    if not 0.0 < alpha_local < 1.0:
        raise DomainError(f"local level must lie in (0, 1), got {alpha_local}")
    k_e = np.asarray(k_e, dtype=float)
    k_c = np.asarray(k_c, dtype=float)
    if np.any(k_e < 1) or np.any(k_c < 1):
        raise DomainError("critical values need at least one subject per stratum")
    k_e, k_c = np.broadcast_arrays(k_e, k_c)
    log_level = math.log(alpha_local)

    lo = np.zeros(k_e.shape)
    hi = np.ones(k_e.shape)
    for _ in range(64):
        short = _two_sided_tail(k_e, k_c, hi) > alpha_local
        if not np.any(short):
            break
        lo = np.where(short, hi, lo)
        hi = np.where(short, hi * 2.0, hi)
    else:
        raise NumericalError("could not bracket the conditional critical value")

    c = (lo + hi) / 2.0
    for iteration in range(MAX_ROOT_ITERATIONS):
        tail = _two_sided_tail(k_e, k_c, c)
        h = np.log(tail) - log_level
        lo = np.where(h > 0, c, lo)
        hi = np.where(h > 0, hi, c)
        if np.all(np.abs(h) < 1e-13) or np.all(hi - lo < CRITICAL_VALUE_TOLERANCE):
            break
        slope = _two_sided_tail_slope(k_e, k_c, c) / tail
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = c - h / slope
        inside = np.isfinite(newton) & (newton > lo) & (newton < hi)
        c = np.where(inside, newton, (lo + hi) / 2.0)
    else:
        raise NumericalError("conditional critical value did not converge")
    logger.debug(f"Critical values solved for {c.size} cells in {iteration + 1} iterations")
    return c


def conditional_critical_value(k_e: int, k_c: int, alpha_local: float) -> float:
    """Critical |log-hazard difference| of the conditional two-sided test"""
    if k_e < 1 or k_c < 1:
        raise DomainError("critical value needs k_e >= 1 and k_c >= 1")
    return float(critical_values(np.array([k_e]), np.array([k_c]), alpha_local)[0])


class _CriticalValueCache:
    """Per-level tables c[k_e, k_c] grown on demand; rows/columns 0 are NaN"""

    def __init__(self):
        self._lock = threading.Lock()
        self._tables: dict[float, np.ndarray] = {}

    def table(self, max_k_e: int, max_k_c: int, alpha_local: float) -> np.ndarray:
        with self._lock:
            existing = self._tables.get(alpha_local)
            if (
                existing is not None
                and existing.shape[0] > max_k_e
                and existing.shape[1] > max_k_c
            ):
                return existing[: max_k_e + 1, : max_k_c + 1]

            rows = max(max_k_e, existing.shape[0] - 1 if existing is not None else 0)
            cols = max(max_k_c, existing.shape[1] - 1 if existing is not None else 0)
            table = np.full((rows + 1, cols + 1), np.nan)
            if rows >= 1 and cols >= 1:
                k_e, k_c = np.meshgrid(
                    np.arange(1, rows + 1), np.arange(1, cols + 1), indexing="ij"
                )
                table[1:, 1:] = critical_values(k_e, k_c, alpha_local)
            table.setflags(write=False)
            self._tables[alpha_local] = table
            logger.debug(f"Critical value table grown to {table.shape} at level {alpha_local:.6g}")
            return table[: max_k_e + 1, : max_k_c + 1]

    def clear(self):
        with self._lock:
            self._tables.clear()


critical_value_cache = _CriticalValueCache()


def conditional_p_value(k_e: int, total_e: float, k_c: int, total_c: float) -> float:
    """Exact conditional p-value for equal stratum hazards

    Sums both beta prime tails at the symmetric log-distance |d| of the
    observed log-hazard difference; 1 when a stratum is empty.
    """
    if k_e == 0 or k_c == 0:
        return 1.0
    d = abs(_log_hazard_difference(k_e, total_e, k_c, total_c))
    return float(min(1.0, _two_sided_tail(float(k_e), float(k_c), d)))


# Global tests ----------------------------------------------------------------


def approx_test(
    data_e: Dataset,
    data_c: Dataset,
    alpha: float,
    local_levels: tuple[float, float, float] | None = None,
) -> TestOutcome:
    """Wald-type test with the equal local level split"""
    levels = resolve_local_levels(alpha, local_levels)
    e, c = GroupSummary.of(data_e), GroupSummary.of(data_c)
    pooled = (e.k + c.k) / (e.n + c.n)
    size_term = 1.0 / e.n + 1.0 / c.n

    stat_p = float(pooled_z_statistic(e.k, e.n, c.k, c.n))

    if e.k == 0 or c.k == 0:
        stat_theta1 = 0.0
    else:
        diff = _log_hazard_difference(e.k, e.responder_total, c.k, c.responder_total)
        stat_theta1 = diff / math.sqrt(size_term / pooled)

    if e.k == e.n or c.k == c.n:
        stat_theta0 = 0.0
    else:
        diff = _log_hazard_difference(e.n - e.k, e.other_total, c.n - c.k, c.other_total)
        stat_theta0 = diff / math.sqrt(size_term / (1.0 - pooled))

    z = [float(numerics.normal_quantile(1.0 - level / 2.0)) for level in levels]
    return TestOutcome(
        method=TestMethod.APPROXIMATE,
        local_level=levels[0],
        local_levels=levels,
        reject_p=abs(stat_p) > z[0],
        reject_theta1=abs(stat_theta1) > z[1],
        reject_theta0=abs(stat_theta0) > z[2],
        stat_p=stat_p,
        stat_theta1=stat_theta1,
        stat_theta0=stat_theta0,
    )


def exact_test(
    data_e: Dataset,
    data_c: Dataset,
    alpha: float,
    local_levels: tuple[float, float, float] | None = None,
) -> TestOutcome:
    """Z-pooled response test plus conditional beta prime tests of the stratum hazards"""
    levels = resolve_local_levels(alpha, local_levels)
    e, c = GroupSummary.of(data_e), GroupSummary.of(data_c)

    p_value_p, reject_p = zpooled_exact_response_test(ResponseTable(e.k, e.n, c.k, c.n), levels[0])
    p_value_theta1 = conditional_p_value(e.k, e.responder_total, c.k, c.responder_total)
    p_value_theta0 = conditional_p_value(e.n - e.k, e.other_total, c.n - c.k, c.other_total)

    return TestOutcome(
        method=TestMethod.EXACT,
        local_level=levels[0],
        local_levels=levels,
        reject_p=reject_p,
        reject_theta1=p_value_theta1 <= levels[1],
        reject_theta0=p_value_theta0 <= levels[2],
        p_value_p=p_value_p,
        p_value_theta1=p_value_theta1,
        p_value_theta0=p_value_theta0,
    )


def exact_decision(
    data_e: Dataset,
    data_c: Dataset,
    alpha: float,
    local_levels: tuple[float, float, float] | None = None,
) -> TestOutcome:
    """Exact-test decisions from the cached region and critical-value tables

    Decisions match :func:`exact_test`; p-values are left unset.
    """
    levels = resolve_local_levels(alpha, local_levels)
    e, c = GroupSummary.of(data_e), GroupSummary.of(data_c)

    reject_p = bool(exact_rejection_region(e.n, c.n, levels[0])[e.k, c.k])

    reject_theta1 = False
    if e.k >= 1 and c.k >= 1:
        crit = critical_value_cache.table(e.k, c.k, levels[1])[e.k, c.k]
        d = _log_hazard_difference(e.k, e.responder_total, c.k, c.responder_total)
        reject_theta1 = abs(d) > crit

    reject_theta0 = False
    m_e, m_c = e.n - e.k, c.n - c.k
    if m_e >= 1 and m_c >= 1:
        crit = critical_value_cache.table(m_e, m_c, levels[2])[m_e, m_c]
        d = _log_hazard_difference(m_e, e.other_total, m_c, c.other_total)
        reject_theta0 = abs(d) > crit

    return TestOutcome(
        method=TestMethod.EXACT,
        local_level=levels[0],
        local_levels=levels,
        reject_p=reject_p,
        reject_theta1=bool(reject_theta1),
        reject_theta0=bool(reject_theta0),
    )


def run_test(
    method: TestMethod,
    data_e: Dataset,
    data_c: Dataset,
    alpha: float,
    local_levels: tuple[float, float, float] | None = None,
) -> TestOutcome:
    if method is TestMethod.APPROXIMATE:
        return approx_test(data_e, data_c, alpha, local_levels)
    return exact_test(data_e, data_c, alpha, local_levels)
