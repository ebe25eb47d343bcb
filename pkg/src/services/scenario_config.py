"""Scenario file loading and validation"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from jsonschema import Draft202012Validator

from src.core.errors import DomainError, ScenarioConfigError
from src.models.models import TwoGroupModel
from src.models.results import DesignSpec, SimulatedTest, TestMethod
from src.services.inference_service import resolve_local_levels
from src.utils.paths import get_schema_path

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ScenarioCell:
    name: str
    model: TwoGroupModel


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario file"""

    scenarios: tuple[ScenarioCell, ...]
    name: str = ""
    alpha: float = 0.05
    beta: float = 0.2
    ratio: float = 1.0
    local_levels: tuple[float, float, float] | None = None
    test: TestMethod = TestMethod.EXACT
    tests: tuple[SimulatedTest, ...] = (SimulatedTest.EXACT_RSES,)
    sizes: tuple[int, ...] = ()
    runs: int = 100000
    seed: int = 0
    logrank_level: float | None = None
    output: str | None = None
    raw: dict[str, Any] = field(default_factory=dict, compare=False, repr=False)

    def design_spec(self, cell: ScenarioCell) -> DesignSpec:
        return DesignSpec(cell.model, self.ratio, self.alpha, self.beta, self.local_levels)


class ScenarioConfigLoader:
    """Load a scenario JSON file and validate it against the shipped schema

    Validation is complete before any computation starts: schema errors and
    domain errors (e.g. local levels that do not match alpha) both surface as
    :class:`ScenarioConfigError`.
    """

    def __init__(self, config_path: str | Path, schema_path: str | Path | None = None):
        self.config_path = Path(config_path)
        self.schema_path = Path(schema_path) if schema_path else get_schema_path()
        self.config: dict[str, Any] = {}

    def load(self) -> ScenarioConfig:
        """Read, validate and convert the scenario file"""
        with open(self.config_path, encoding="utf-8") as f:
            try:
                self.config = json.load(f)
            except json.JSONDecodeError as e:
                raise ScenarioConfigError(
                    f"{self.config_path}: invalid JSON at line {e.lineno}: {e.msg}"
                ) from e

        self._validate_schema()
        try:
            scenario = self._build()
        except DomainError as e:
            raise ScenarioConfigError(f"{self.config_path}: {e}") from e
        logger.info(
            f"Loaded {len(scenario.scenarios)} scenario(s) from {self.config_path}"
        )
        return scenario

    def _validate_schema(self):
        with open(self.schema_path, encoding="utf-8") as f:
            schema = json.load(f)
        errors = sorted(
            Draft202012Validator(schema).iter_errors(self.config), key=lambda e: list(e.path)
        )
        if errors:
            first = errors[0]
            location = "/".join(str(part) for part in first.path) or "<root>"
            raise ScenarioConfigError(
                f"{self.config_path}: {location}: {first.message}"
                + (f" (and {len(errors) - 1} more)" if len(errors) > 1 else "")
            )

    def _build(self) -> ScenarioConfig:
        cells = tuple(
            ScenarioCell(entry.get("name", f"scenario-{index + 1}"), TwoGroupModel.from_dict(entry))
            for index, entry in enumerate(self.get("scenarios"))
        )
        alpha = float(self.get("alpha", 0.05))
        local_levels = self.get("local_levels")
        if local_levels is not None:
            local_levels = resolve_local_levels(alpha, tuple(local_levels))

        return ScenarioConfig(
            scenarios=cells,
            name=self.get("name", self.config_path.stem),
            alpha=alpha,
            beta=float(self.get("beta", 0.2)),
            ratio=float(self.get("ratio", 1.0)),
            local_levels=local_levels,
            test=TestMethod.parse(self.get("test", "exact")),
            tests=tuple(SimulatedTest.parse(t) for t in self.get("tests", ["exact-rses"])),
            sizes=tuple(int(n) for n in self.get("sizes", [])),
            runs=int(self.get("runs", 100000)),
            seed=int(self.get("seed", 0)),
            logrank_level=self.get("logrank_level"),
            output=self.get("output"),
            raw=self.config,
        )

    def get(self, key: str, default: Any = None) -> Any:
        """Get configuration value by key (supports dot notation)"""
        keys = key.split(".")
        value = self.config

        for k in keys:
            if isinstance(value, dict) and k in value:
                value = value[k]
            else:
                return default

        return value
