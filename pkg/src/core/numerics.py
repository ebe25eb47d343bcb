"""Special functions and distribution primitives

Thin, validated wrappers around ``scipy.special`` / ``scipy.stats`` that every
service builds on. All functions accept scalars or numpy arrays; scalar input
returns a Python float.
"""

import logging
from typing import TypeAlias

import numpy as np
from numpy.typing import ArrayLike
from scipy import optimize, special, stats

from src.core.errors import DomainError

logger = logging.getLogger(__name__)

Probability: TypeAlias = float

QUANTILE_TOLERANCE = 1e-10


def _result(value: np.ndarray) -> float | np.ndarray:
    """Return a float for 0-d results, the array otherwise"""
    value = np.asarray(value, dtype=float)
    return float(value) if value.ndim == 0 else value


def _check(condition: ArrayLike, message: str) -> None:
    if not np.all(condition):
        raise DomainError(message)


def regularized_lower_gamma(shape: ArrayLike, x: ArrayLike) -> float | np.ndarray:
    """P(G <= x) for G ~ Gamma(shape, rate 1)"""
    shape = np.asarray(shape, dtype=float)
    x = np.asarray(x, dtype=float)
    _check(shape > 0, "gamma shape must be positive")
    _check(x >= 0, "gamma argument must be nonnegative")
    return _result(special.gammainc(shape, x))


def gamma_cdf(shape: ArrayLike, rate: ArrayLike, x: ArrayLike) -> float | np.ndarray:
    """CDF of the Gamma(shape, rate) distribution"""
    rate = np.asarray(rate, dtype=float)
    _check(rate > 0, "gamma rate must be positive")
    return regularized_lower_gamma(shape, rate * np.asarray(x, dtype=float))


def regularized_incomplete_beta(a: ArrayLike, b: ArrayLike, x: ArrayLike) -> float | np.ndarray:
    """CDF of the Beta(a, b) distribution at x"""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    x = np.asarray(x, dtype=float)
    _check((a > 0) & (b > 0), "beta parameters must be positive")
    _check((x >= 0) & (x <= 1), "beta argument must lie in [0, 1]")
    return _result(special.betainc(a, b, x))


def beta_prime_cdf(a: ArrayLike, b: ArrayLike, x: ArrayLike) -> float | np.ndarray:
    """CDF of the beta prime distribution: I_{x/(1+x)}(a, b)

    For x > 1 the complementary form 1 - I_{1/(1+x)}(b, a) keeps precision in
    the upper tail.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    x = np.asarray(x, dtype=float)
    _check((a > 0) & (b > 0), "beta prime parameters must be positive")
    _check(x >= 0, "beta prime argument must be nonnegative")
    with np.errstate(divide="ignore", invalid="ignore"):
        lower = special.betainc(a, b, np.where(np.isinf(x), 1.0, x / (1.0 + x)))
        upper = 1.0 - special.betainc(b, a, 1.0 / (1.0 + x))
    return _result(np.where(x > 1.0, upper, lower))


def beta_prime_sf(a: ArrayLike, b: ArrayLike, x: ArrayLike) -> float | np.ndarray:
    """Survival function 1 - F(x) of the beta prime distribution"""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    x = np.asarray(x, dtype=float)
    _check((a > 0) & (b > 0), "beta prime parameters must be positive")
    _check(x >= 0, "beta prime argument must be nonnegative")
    return _result(special.betainc(b, a, 1.0 / (1.0 + x)))


def beta_prime_quantile(a: float, b: float, q: Probability) -> float:
    """Inverse of :func:`beta_prime_cdf`

    Seeded from ``betaincinv`` and polished by a bracketed Brent search on the
    CDF itself.
    """
    if not 0.0 < q < 1.0:
        raise DomainError(f"quantile level must lie in (0, 1), got {q}")
    if a <= 0 or b <= 0:
        raise DomainError("beta prime parameters must be positive")

    if q <= 0.5:
        y = special.betaincinv(a, b, q)
        seed = y / (1.0 - y)
    else:
        z = special.betaincinv(b, a, 1.0 - q)
        seed = (1.0 - z) / z

    def objective(x: float) -> float:
        return float(beta_prime_cdf(a, b, x)) - q

    if not np.isfinite(seed) or seed <= 0.0:
        seed = 1.0
    if abs(objective(seed)) <= QUANTILE_TOLERANCE * 1e-2:
        return float(seed)

    lo, hi = seed, seed
    for _ in range(200):
        if objective(lo) <= 0.0:
            break
        lo /= 2.0
    for _ in range(200):
        if objective(hi) >= 0.0:
            break
        hi *= 2.0
    return float(optimize.brentq(objective, lo, hi, xtol=1e-300, rtol=4 * np.finfo(float).eps))


def normal_cdf(x: ArrayLike) -> float | np.ndarray:
    return _result(special.ndtr(np.asarray(x, dtype=float)))


def normal_quantile(q: ArrayLike) -> float | np.ndarray:
    q = np.asarray(q, dtype=float)
    _check((q > 0) & (q < 1), "normal quantile level must lie in (0, 1)")
    return _result(special.ndtri(q))


def binomial_pmf(n: int, p: Probability, k: ArrayLike) -> float | np.ndarray:
    """Binomial probability mass, evaluated in log-space"""
    k = np.asarray(k)
    if n < 0:
        raise DomainError("binomial size must be nonnegative")
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"binomial probability must lie in [0, 1], got {p}")
    _check((k >= 0) & (k <= n), "binomial count must lie in [0, n]")
    return _result(np.exp(stats.binom.logpmf(k, n, p)))


def binomial_pmf_vector(n: int, p: Probability) -> np.ndarray:
    """Full pmf over k = 0..n"""
    return np.asarray(binomial_pmf(n, p, np.arange(n + 1)), dtype=float).reshape(n + 1)
