"""
CLI options for RsesTrial
Global option parsing, argument validators and configuration from flags
"""

import argparse
import logging
from dataclasses import asdict

from src.core.app_config import AppConfig, app_config
from src.utils.logger import setup_logger


def probability(value: str) -> float:
    """argparse type for a value in the open interval (0, 1)"""
    try:
        number = float(value)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"not a number: {value!r}") from e
    if not 0.0 < number < 1.0:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1), got {value}")
    return number


def positive_int(value: str) -> int:
    try:
        number = int(value)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"not an integer: {value!r}") from e
    if number < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {value}")
    return number


def positive_float(value: str) -> float:
    try:
        number = float(value)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"not a number: {value!r}") from e
    if not number > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {value}")
    return number


def unit_interval(value: str) -> float:
    """argparse type for a value in the closed interval [0, 1]"""
    try:
        number = float(value)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"not a number: {value!r}") from e
    if not 0.0 <= number <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1], got {value}")
    return number


def add_global_options(parser: argparse.ArgumentParser) -> None:
    """Options shared by every subcommand"""
    output_group = parser.add_argument_group("Output Options")
    output_group.add_argument(
        "--format",
        choices=["text", "json"],
        default=app_config.output_format,
        help="Report format (default: %(default)s)",
    )
    output_group.add_argument(
        "--json",
        action="store_const",
        const="json",
        dest="format",
        help="Shorthand for --format json",
    )

    perf_group = parser.add_argument_group("Performance Options")
    perf_group.add_argument(
        "--threads",
        type=positive_int,
        metavar="N",
        help=f"Worker threads for simulation (default: {app_config.threads}, env RSES_THREADS)",
    )

    dev_group = parser.add_argument_group("Development Options")
    dev_group.add_argument("-v", "--verbose", action="store_true", help="Enable verbose logging")
    dev_group.add_argument("--debug", action="store_true", help="Enable debug mode")
    dev_group.add_argument("--log-file", metavar="PATH", help="Also write the log to PATH")
    dev_group.add_argument(
        "--log-to-file", action="store_true", help="Also write the log to the default log file"
    )


def create_config_from_args(args: argparse.Namespace) -> AppConfig:
    """Create AppConfig from command-line arguments"""
    config = AppConfig.from_env()

    config.output_format = args.format
    if args.threads:
        config.threads = args.threads
    if args.debug:
        config.debug_mode = True
    if args.verbose:
        config.verbose_logging = True

    return config


def apply_config(config: AppConfig) -> None:
    """Copy ``config`` into the shared ``app_config`` instance read by the services"""
    for key, value in asdict(config).items():
        setattr(app_config, key, value)


def configure_logging(config: AppConfig, args: argparse.Namespace) -> None:
    if config.debug_mode:
        level = logging.DEBUG
    elif config.verbose_logging:
        level = logging.INFO
    else:
        level = logging.WARNING
    setup_logger(level, log_file=args.log_file, log_to_file=args.log_to_file)
