"""Configuration and numerical settings for RsesTrial"""

import logging
import os
from dataclasses import asdict, dataclass
from typing import Any

logger = logging.getLogger(__name__)


@dataclass
class AppConfig:
    """Application configuration with numerical tolerances"""

    # Execution
    threads: int = 1
    output_format: str = "text"  # Options: "text", "json"

    # Development Flags
    debug_mode: bool = False
    verbose_logging: bool = False

    # Output
    float_digits: int = 10

    # Z-pooled exact unconditional test
    zpooled_grid_points: int = 1000
    zpooled_refine_tolerance: float = 1e-6
    tie_tolerance: float = 1e-12

    # Exact enumeration
    full_enumeration_limit: int = 500
    truncation_threshold: float = 1e-14

    # Curve classification
    relation_tolerance: float = 1e-9

    # Exact sample size scan
    exact_scan_cap_factor: int = 10

    @classmethod
    def from_env(cls) -> "AppConfig":
        """Create configuration from environment variables

        Only the thread count can be overridden (``RSES_THREADS``).
        """
        config = cls()

        threads_env = os.getenv("RSES_THREADS")
        if threads_env is not None:
            try:
                threads = int(threads_env)
                if threads >= 1:
                    config.threads = threads
                else:
                    logger.warning(f"Ignoring RSES_THREADS={threads_env}: must be >= 1")
            except ValueError:
                logger.warning(f"Ignoring non-integer RSES_THREADS={threads_env}")

        return config

    def to_dict(self) -> dict[str, Any]:
        """Convert configuration to dictionary"""
        return asdict(self)


# Global configuration instance
app_config = AppConfig.from_env()
