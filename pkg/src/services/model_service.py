"""Survival model service: survival/density evaluation, curve relation, data generation"""

import logging
import math

import numpy as np
from numpy.typing import ArrayLike

from src.core.app_config import app_config
from src.core.errors import DomainError
from src.models.models import CurveRelation, Dataset, Group, RsesParams, TwoGroupModel

logger = logging.getLogger(__name__)

# Number of derivatives at 0 compared before two curves count as equal there
DERIVATIVE_ORDERS = 3
RELATION_GRID_POINTS = 20001


def survival(params: RsesParams, t: ArrayLike) -> float | np.ndarray:
    """S(t) = p exp(-lambda1 t) + (1 - p) exp(-lambda0 t)"""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("survival time must be nonnegative")
    value = params.p * np.exp(-params.lambda1 * t) + (1.0 - params.p) * np.exp(-params.lambda0 * t)
    return float(value) if value.ndim == 0 else value


def marginal_cdf(params: RsesParams, t: ArrayLike) -> float | np.ndarray:
    return 1.0 - survival(params, t)


def joint_density(params: RsesParams, x: int, t: ArrayLike) -> float | np.ndarray:
    """Density of (X, T) at response flag ``x`` and time ``t``"""
    if x not in (0, 1):
        raise DomainError(f"response flag must be 0 or 1, got {x}")
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DomainError("density time must be positive")
    if x == 1:
        value = params.p * params.lambda1 * np.exp(-params.lambda1 * t)
    else:
        value = (1.0 - params.p) * params.lambda0 * np.exp(-params.lambda0 * t)
    return float(value) if value.ndim == 0 else value


def survival_curve(model: TwoGroupModel, times: ArrayLike) -> tuple[np.ndarray, np.ndarray]:
    """Survival of both groups on a time grid"""
    times = np.asarray(times, dtype=float)
    return (
        np.asarray(survival(model.experimental, times)),
        np.asarray(survival(model.control, times)),
    )


def _close(a: float, b: float, tolerance: float) -> bool:
    return math.isclose(a, b, rel_tol=tolerance, abs_tol=tolerance)


def _completely_equal(e: RsesParams, c: RsesParams, tolerance: float) -> bool:
    same_p = _close(e.p, c.p, tolerance)
    same_l1 = _close(e.lambda1, c.lambda1, tolerance)
    same_l0 = _close(e.lambda0, c.lambda0, tolerance)
    if same_p and same_l1 and same_l0:
        return True
    if _close(e.p, 0.0, tolerance) and _close(c.p, 0.0, tolerance) and same_l0:
        return True
    if _close(e.p, 1.0, tolerance) and _close(c.p, 1.0, tolerance) and same_l1:
        return True
    return same_l1 and same_l0 and _close(e.lambda1, e.lambda0, tolerance)


def _moment(params: RsesParams, order: int) -> float:
    return params.p * params.lambda1**order + (1.0 - params.p) * params.lambda0**order


def _start_sign(e: RsesParams, c: RsesParams, tolerance: float) -> int:
    """Sign of S_E - S_C just after 0, from the first unequal derivative

    S^(k)(0) = (-1)^k m_k with m_k the k-th hazard moment of the mixture.
    """
    for order in range(1, DERIVATIVE_ORDERS + 1):
        m_e, m_c = _moment(e, order), _moment(c, order)
        if not _close(m_e, m_c, tolerance):
            return (-1) ** order * (1 if m_e > m_c else -1)
    return 0


def _exponential_terms(params: RsesParams, tolerance: float) -> list[tuple[float, float]]:
    """(rate, weight) pairs of the non-empty strata, equal rates merged"""
    terms = [(params.lambda1, params.p), (params.lambda0, 1.0 - params.p)]
    terms = [(rate, weight) for rate, weight in terms if not _close(weight, 0.0, tolerance)]
    if len(terms) == 2 and _close(terms[0][0], terms[1][0], tolerance):
        terms = [(terms[0][0], terms[0][1] + terms[1][1])]
    return terms


def _tail_sign(e: RsesParams, c: RsesParams, tolerance: float) -> int:
    """Sign of S_E - S_C as t grows, from the slowest decaying surviving term

    With a single fitter stratum per group this is the comparison of the
    minimal hazards, ties broken by the share of the fitter stratum; remaining
    ties move on to the next rate.
    """
    coefficients: list[list[float]] = []
    for sign, params in ((1.0, e), (-1.0, c)):
        for rate, weight in _exponential_terms(params, tolerance):
            for entry in coefficients:
                if _close(entry[0], rate, tolerance):
                    entry[1] += sign * weight
                    break
            else:
                coefficients.append([rate, sign * weight])
    for _rate, weight in sorted(coefficients):
        if not _close(weight, 0.0, tolerance):
            return 1 if weight > 0 else -1
    return 0


def _grid_sign_changes(model: TwoGroupModel) -> bool:
    hazards = [
        model.experimental.lambda1,
        model.experimental.lambda0,
        model.control.lambda1,
        model.control.lambda0,
    ]
    t_max = 50.0 / min(hazards)
    t = np.linspace(t_max / RELATION_GRID_POINTS, t_max, RELATION_GRID_POINTS)
    s_e, s_c = survival_curve(model, t)
    diff = s_e - s_c
    signs = np.sign(diff[np.abs(diff) > 1e-12])
    return bool(signs.size and np.any(signs != signs[0]))


def classify_relation(model: TwoGroupModel, tolerance: float | None = None) -> CurveRelation:
    """Classify the marginal survival curves as equal, uniformly different or crossing"""
    tolerance = app_config.relation_tolerance if tolerance is None else tolerance
    e, c = model.experimental, model.control

    if _completely_equal(e, c, tolerance):
        return CurveRelation.COMPLETELY_EQUAL

    start = _start_sign(e, c, tolerance)
    tail = _tail_sign(e, c, tolerance)
    logger.debug(f"Curve relation: start sign {start}, tail sign {tail}")
    if start == 0 and tail == 0:
        return CurveRelation.COMPLETELY_EQUAL
    if start != tail or _grid_sign_changes(model):
        return CurveRelation.CROSSING
    return CurveRelation.UNIFORMLY_DIFFERENT


def make_rng(seed: int, stream: int | None = None) -> np.random.Generator:
    """PCG64 generator for ``seed``; ``stream`` selects an independent substream

    Substreams follow the SeedSequence spawn-key rule (seed, stream index), so
    the stream for a given run never depends on how runs are scheduled.
    """
    if stream is None:
        sequence = np.random.SeedSequence(seed)
    else:
        sequence = np.random.SeedSequence(seed, spawn_key=(stream,))
    return np.random.Generator(np.random.PCG64(sequence))


def sample(
    params: RsesParams,
    n: int,
    rng: np.random.Generator,
    group: Group = Group.EXPERIMENTAL,
) -> Dataset:
    """Draw ``n`` subjects of one group

    Each subject consumes two uniforms in fixed order: the response flag, then
    the exponential survival time of its stratum by inversion.
    """
    if n < 1:
        raise DomainError(f"sample size must be at least 1, got {n}")
    uniforms = rng.random((n, 2))
    responder = uniforms[:, 0] < params.p
    hazard = np.where(responder, params.lambda1, params.lambda0)
    time = -np.log1p(-uniforms[:, 1]) / hazard
    # u == 0 gives t == 0; nudge to the smallest positive time
    time = np.maximum(time, np.finfo(float).tiny)
    return Dataset.single_group(group, responder, time)


def sample_trial(
    model: TwoGroupModel, n_e: int, n_c: int, rng: np.random.Generator
) -> tuple[Dataset, Dataset]:
    """Experimental group first, then control, from one stream"""
    return (
        sample(model.experimental, n_e, rng, Group.EXPERIMENTAL),
        sample(model.control, n_c, rng, Group.CONTROL),
    )
