"""Path utilities for RsesTrial
Provides cross-platform user data directory handling
"""

import logging
from pathlib import Path
from platform import system

logger = logging.getLogger(__name__)

PROJECT_ROOT = Path(__file__).resolve().parents[2]


def get_user_data_dir() -> Path:
    """Get the user data directory for RsesTrial"""
    if system() == "Windows":
        return Path.home() / "Documents" / "RsesTrial"
    elif system() == "Darwin":  # macOS
        return Path.home() / "Library" / "Application Support" / "RsesTrial"
    else:  # Linux and others
        return Path.home() / ".local" / "share" / "rsestrial"


def get_default_log_path() -> Path:
    return get_user_data_dir() / "rsestrial.log"


def ensure_user_data_dir() -> Path:
    """Ensure user data directory exists and return its path"""
    data_dir = get_user_data_dir()
    data_dir.mkdir(parents=True, exist_ok=True)
    return data_dir


def get_schema_path() -> Path:
    """JSON Schema of the scenario file shipped in docs/"""
    return PROJECT_ROOT / "docs" / "scenario_schema.json"
