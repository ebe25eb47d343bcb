"""Request and result models shared by the services and the CLI"""

import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any

from src.core.errors import DomainError
from src.models.models import TwoGroupModel


class TestMethod(Enum):
    __test__ = False

    APPROXIMATE = "approximate"
    EXACT = "exact"

    @classmethod
    def parse(cls, value: "str | TestMethod") -> "TestMethod":
        if isinstance(value, TestMethod):
            return value
        aliases = {"approx": cls.APPROXIMATE, "approximate": cls.APPROXIMATE, "exact": cls.EXACT}
        try:
            return aliases[str(value).strip().lower()]
        except KeyError as e:
            raise DomainError(f"unknown test method {value!r}") from e


class SimulatedTest(Enum):
    LOGRANK = "logrank"
    STRATIFIED_LOGRANK = "stratified-logrank"
    APPROX_RSES = "approx-rses"
    EXACT_RSES = "exact-rses"

    @classmethod
    def parse(cls, value: "str | SimulatedTest") -> "SimulatedTest":
        if isinstance(value, SimulatedTest):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError as e:
            raise DomainError(f"unknown simulated test {value!r}") from e


class DesignMethod(Enum):
    APPROXIMATE = "approximate"
    EXACT_ITERATIVE = "exact-iterative"


@dataclass(frozen=True)
class MleResult:
    """Maximum likelihood estimates of one group

    ``theta1_hat``/``theta0_hat`` are log-hazards and are ``None`` when the
    corresponding stratum is empty.
    """

    n: int
    k: int
    p_hat: float
    theta1_hat: float | None
    theta0_hat: float | None

    @property
    def lambda1_hat(self) -> float | None:
        return None if self.theta1_hat is None else math.exp(self.theta1_hat)

    @property
    def lambda0_hat(self) -> float | None:
        return None if self.theta0_hat is None else math.exp(self.theta0_hat)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class ConfidenceInterval:
    lower: float
    upper: float
    level: float

    def __post_init__(self):
        if self.lower > self.upper:
            raise DomainError(f"interval bounds out of order: {self.lower} > {self.upper}")

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.lower) and math.isfinite(self.upper)

    def contains(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class ResponseTable:
    k_e: int
    n_e: int
    k_c: int
    n_c: int

    def __post_init__(self):
        if self.n_e < 1 or self.n_c < 1:
            raise DomainError("both groups need at least one subject")
        if not (0 <= self.k_e <= self.n_e and 0 <= self.k_c <= self.n_c):
            raise DomainError("responder counts must lie in [0, n]")

    def swapped(self) -> "ResponseTable":
        return ResponseTable(self.k_c, self.n_c, self.k_e, self.n_e)


@dataclass(frozen=True)
class TestOutcome:
    """Local and global decisions of an RSES test

    The approximate test fills the ``stat_*`` fields, the exact test the
    ``p_value_*`` fields.
    """

    __test__ = False

    method: TestMethod
    local_level: float
    reject_p: bool
    reject_theta1: bool
    reject_theta0: bool
    local_levels: tuple[float, float, float] | None = None
    stat_p: float | None = None
    stat_theta1: float | None = None
    stat_theta0: float | None = None
    p_value_p: float | None = None
    p_value_theta1: float | None = None
    p_value_theta0: float | None = None

    @property
    def reject_global(self) -> bool:
        return self.reject_p or self.reject_theta1 or self.reject_theta0

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["method"] = self.method.value
        data["reject_global"] = self.reject_global
        return data


@dataclass(frozen=True)
class OcRequest:
    model: TwoGroupModel
    n_e: int
    n_c: int
    alpha: float
    test: TestMethod
    local_levels: tuple[float, float, float] | None = None

    def __post_init__(self):
        if self.n_e < 1 or self.n_c < 1:
            raise DomainError("group sizes must be at least 1")
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")


@dataclass(frozen=True)
class OcResult:
    """Exact rejection probability with its decomposition

    ``response_part`` is the probability of rejecting through the response
    test, ``stratum_part`` the probability of rejecting only through one of
    the conditional hazard tests.
    """

    rejection_probability: float
    response_part: float
    stratum_part: float
    enumeration_size: int
    truncation_error: float = 0.0

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class DesignSpec:
    """Alternative, allocation ratio r = nE / nC and error rates

    ``local_levels`` optionally replaces the equal split of ``alpha`` by three
    per-hypothesis levels (response, responder hazard, non-responder hazard).
    """

    model_alt: TwoGroupModel
    ratio: float = 1.0
    alpha: float = 0.05
    beta: float = 0.2
    local_levels: tuple[float, float, float] | None = None

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise DomainError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0.0 < self.beta < 1.0:
            raise DomainError(f"beta must lie in (0, 1), got {self.beta}")
        if not self.ratio > 0:
            raise DomainError(f"allocation ratio must be positive, got {self.ratio}")
        if self.local_levels is not None:
            if len(self.local_levels) != 3 or not all(0 < a < 1 for a in self.local_levels):
                raise DomainError("local levels must be three values in (0, 1)")
            kept = math.prod(1.0 - a for a in self.local_levels)
            if not math.isclose(kept, 1.0 - self.alpha, rel_tol=1e-9, abs_tol=1e-12):
                raise DomainError("complements of the local levels must multiply to 1 - alpha")

    def swapped(self) -> "DesignSpec":
        return DesignSpec(
            self.model_alt.swapped(), 1.0 / self.ratio, self.alpha, self.beta, self.local_levels
        )


@dataclass(frozen=True)
class DesignResult:
    n_c: int
    n_e: int
    achieved_power: float
    method: DesignMethod
    iterations: int
    approx_test_power: float | None = None
    power_trace: tuple[tuple[int, float], ...] = field(default_factory=tuple)

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["method"] = self.method.value
        data["power_trace"] = [list(step) for step in self.power_trace]
        return data


@dataclass(frozen=True)
class RiskTableRow:
    event_time: float
    at_risk: int
    at_risk_e: int
    events: int
    events_e: int

    def __post_init__(self):
        if not (0 <= self.at_risk_e <= self.at_risk and 0 <= self.events_e <= self.events):
            raise DomainError("inconsistent risk table counts")
        if self.events > self.at_risk:
            raise DomainError("more events than subjects at risk")


@dataclass(frozen=True)
class SimulationReport:
    test: SimulatedTest
    runs: int
    rejections: int
    seed: int

    @property
    def rate(self) -> float:
        return self.rejections / self.runs

    @property
    def standard_error(self) -> float:
        rate = self.rate
        return math.sqrt(rate * (1.0 - rate) / self.runs)

    def to_dict(self) -> dict[str, Any]:
        return {
            "test": self.test.value,
            "runs": self.runs,
            "rejections": self.rejections,
            "rate": self.rate,
            "standard_error": self.standard_error,
            "seed": self.seed,
        }
