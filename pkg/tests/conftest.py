"""Test configuration and shared fixtures for RsesTrial"""

import json
import sys
from pathlib import Path

import numpy as np
import pytest

# Project root holds main.py, cli.py and cli_commands.py next to src/
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from src.core.app_config import AppConfig, app_config  # noqa: E402
from src.models.models import Dataset, Group, RsesParams, TwoGroupModel  # noqa: E402

GAMMA = 0.142


@pytest.fixture(autouse=True)
def reset_app_config():
    """Undo CLI or test changes to the shared configuration"""
    yield
    for key, value in AppConfig().to_dict().items():
        setattr(app_config, key, value)


@pytest.fixture
def configs_dir():
    return project_root / "configs"


@pytest.fixture
def small_dataset():
    """Three E subjects (two responders) and two C subjects (one responder)"""
    return Dataset(
        experimental=np.array([True, True, True, False, False]),
        responder=np.array([True, True, False, True, False]),
        time=np.array([2.0, 4.0, 1.0, 3.0, 5.0]),
    )


@pytest.fixture
def null_model():
    return TwoGroupModel.null(RsesParams(0.13, 0.4 * GAMMA, GAMMA))


@pytest.fixture
def response_model():
    """Higher response probability in E, equal stratum hazards"""
    control = RsesParams(0.13, 0.4 * GAMMA, GAMMA)
    return TwoGroupModel(RsesParams(0.26, control.lambda1, control.lambda0), control)


@pytest.fixture
def survival_model():
    """Equal response probabilities, E hazards halved"""
    control = RsesParams(0.13, 0.4 * GAMMA, GAMMA)
    return TwoGroupModel(control.scaled(0.5), control)


@pytest.fixture
def random_trial():
    """Random two-group dataset with both strata populated in each group"""
    rng = np.random.default_rng(7)
    n = 40
    experimental = np.repeat([True, False], n)
    responder = rng.random(2 * n) < 0.4
    responder[[0, 1, n, n + 1]] = [True, False, True, False]
    time = rng.exponential(1.0 / np.where(responder, 0.05, 0.15))
    return Dataset(experimental, responder, time)


@pytest.fixture
def write_csv(tmp_path):
    """Write CSV text to a temporary file and return its path"""

    def _write(text: str, name: str = "trial.csv") -> Path:
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write


@pytest.fixture
def write_scenario(tmp_path):
    """Write a scenario dict as JSON and return its path"""

    def _write(data: dict, name: str = "scenario.json") -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return path

    return _write

