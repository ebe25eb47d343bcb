"""Core data models for RsesTrial"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np

from src.core.errors import DomainError


class Group(Enum):
    EXPERIMENTAL = "E"
    CONTROL = "C"

    @classmethod
    def parse(cls, value: "str | Group") -> "Group":
        if isinstance(value, Group):
            return value
        try:
            return cls(str(value).strip().upper())
        except ValueError as e:
            raise DomainError(f"group must be 'E' or 'C', got {value!r}") from e


class CurveRelation(Enum):
    COMPLETELY_EQUAL = "CompletelyEqual"
    UNIFORMLY_DIFFERENT = "UniformlyDifferent"
    CROSSING = "Crossing"


@dataclass(frozen=True)
class RsesParams:
    """Parameter triple of one group

    ``p`` is the response probability, ``lambda1``/``lambda0`` the responder
    and non-responder hazards per unit time.
    """

    p: float
    lambda1: float
    lambda0: float

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise DomainError(f"response probability must lie in [0, 1], got {self.p}")
        if not (self.lambda1 > 0 and np.isfinite(self.lambda1)):
            raise DomainError(f"responder hazard must be positive, got {self.lambda1}")
        if not (self.lambda0 > 0 and np.isfinite(self.lambda0)):
            raise DomainError(f"non-responder hazard must be positive, got {self.lambda0}")

    @property
    def theta1(self) -> float:
        return float(np.log(self.lambda1))

    @property
    def theta0(self) -> float:
        return float(np.log(self.lambda0))

    def scaled(self, factor: float) -> "RsesParams":
        """Same response probability with both hazards multiplied by ``factor``"""
        return RsesParams(self.p, self.lambda1 * factor, self.lambda0 * factor)

    def to_dict(self) -> dict[str, Any]:
        return {"p": self.p, "lambda1": self.lambda1, "lambda0": self.lambda0}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RsesParams":
        try:
            return cls(float(data["p"]), float(data["lambda1"]), float(data["lambda0"]))
        except KeyError as e:
            raise DomainError(f"parameter triple is missing {e.args[0]!r}") from e
        except (TypeError, ValueError) as e:
            raise DomainError(f"parameter triple is not numeric: {data}") from e


@dataclass(frozen=True)
class TwoGroupModel:
    experimental: RsesParams
    control: RsesParams

    def swapped(self) -> "TwoGroupModel":
        return TwoGroupModel(self.control, self.experimental)

    def scaled(self, factor: float) -> "TwoGroupModel":
        return TwoGroupModel(self.experimental.scaled(factor), self.control.scaled(factor))

    def params(self, group: Group) -> RsesParams:
        return self.experimental if group is Group.EXPERIMENTAL else self.control

    def to_dict(self) -> dict[str, Any]:
        return {"experimental": self.experimental.to_dict(), "control": self.control.to_dict()}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "TwoGroupModel":
        try:
            return cls(
                RsesParams.from_dict(data["experimental"]), RsesParams.from_dict(data["control"])
            )
        except KeyError as e:
            raise DomainError(f"model is missing group {e.args[0]!r}") from e

    @classmethod
    def null(cls, params: RsesParams) -> "TwoGroupModel":
        """Both groups share one parameter triple"""
        return cls(params, params)


@dataclass(frozen=True)
class SubjectRecord:
    group: Group
    responder: bool
    time: float

    def __post_init__(self):
        if not (self.time > 0 and np.isfinite(self.time)):
            raise DomainError(f"survival time must be positive, got {self.time}")


@dataclass(frozen=True, eq=False)
class Dataset:
    """Column-oriented collection of subject records

    ``experimental`` marks membership of group E, ``responder`` the response
    flag X, ``time`` the survival time T.
    """

    experimental: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))
    responder: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))
    time: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=float))

    def __post_init__(self):
        experimental = np.asarray(self.experimental, dtype=bool).reshape(-1)
        responder = np.asarray(self.responder, dtype=bool).reshape(-1)
        time = np.asarray(self.time, dtype=float).reshape(-1)
        if not (len(experimental) == len(responder) == len(time)):
            raise DomainError("dataset columns must have equal length")
        if time.size and not np.all((time > 0) & np.isfinite(time)):
            raise DomainError("survival times must be positive and finite")
        object.__setattr__(self, "experimental", experimental)
        object.__setattr__(self, "responder", responder)
        object.__setattr__(self, "time", time)

    def __len__(self) -> int:
        return int(self.time.size)

    @classmethod
    def from_records(cls, records: list[SubjectRecord]) -> "Dataset":
        return cls(
            np.array([r.group is Group.EXPERIMENTAL for r in records], dtype=bool),
            np.array([r.responder for r in records], dtype=bool),
            np.array([r.time for r in records], dtype=float),
        )

    @classmethod
    def single_group(cls, group: Group, responder: np.ndarray, time: np.ndarray) -> "Dataset":
        responder = np.asarray(responder, dtype=bool)
        return cls(np.full(responder.shape, group is Group.EXPERIMENTAL), responder, time)

    @property
    def records(self) -> list[SubjectRecord]:
        return [
            SubjectRecord(Group.EXPERIMENTAL if e else Group.CONTROL, bool(x), float(t))
            for e, x, t in zip(self.experimental, self.responder, self.time, strict=True)
        ]

    def subset(self, group: Group) -> "Dataset":
        mask = self.experimental if group is Group.EXPERIMENTAL else ~self.experimental
        return Dataset(self.experimental[mask], self.responder[mask], self.time[mask])

    def count(self, group: Group) -> int:
        return int(np.count_nonzero(self.experimental == (group is Group.EXPERIMENTAL)))

    def relabeled(self, group: Group) -> "Dataset":
        """All records assigned to ``group``"""
        return Dataset.single_group(group, self.responder, self.time)

    def swapped(self) -> "Dataset":
        return Dataset(~self.experimental, self.responder, self.time)

    def scaled(self, factor: float) -> "Dataset":
        return Dataset(self.experimental, self.responder, self.time * factor)

    @staticmethod
    def combine(*datasets: "Dataset") -> "Dataset":
        return Dataset(
            np.concatenate([d.experimental for d in datasets]),
            np.concatenate([d.responder for d in datasets]),
            np.concatenate([d.time for d in datasets]),
        )
