"""
RsesTrial CLI - analysis, operating characteristics and planning commands
for two-group trials under the responder-stratified exponential survival model
"""

import argparse
import json
import logging
import math
import sys
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd

from cli import (
    add_global_options,
    apply_config,
    configure_logging,
    create_config_from_args,
    positive_float,
    positive_int,
    probability,
    unit_interval,
)
from src import __version__
from src.core.app_config import app_config
from src.core.errors import RsesError, ScenarioConfigError
from src.models.models import Group
from src.models.results import DesignMethod, DesignSpec, SimulatedTest, TestMethod
from src.services import (
    dataset_io,
    design_service,
    estimation_service,
    inference_service,
    model_service,
    oc_service,
    simulation_service,
)
from src.services.scenario_config import ScenarioConfig, ScenarioConfigLoader

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 4


def _clean(value: Any) -> Any:
    """JSON-safe copy: numpy scalars unwrapped, non-finite floats as strings"""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [_clean(v) for v in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, Path):
        return str(value)
    return value


def _fmt(value: Any) -> str:
    if value is None:
        return "absent"
    if isinstance(value, bool | np.bool_):
        return "yes" if value else "no"
    if isinstance(value, float | np.floating):
        return f"{float(value):.{app_config.float_digits}g}"
    return str(value)


class CLIOutput:
    """Handle CLI output formatting

    Text mode prints aligned tables; JSON mode collects results and prints one
    envelope at the end. Errors always go to stderr.
    """

    def __init__(self, json_output: bool = False, verbose: bool = False):
        self.json_output = json_output
        self.verbose = verbose
        self.data: list[dict[str, Any]] = []
        self.provenance: dict[str, Any] = {}

    def print(self, message: str, level: str = "info"):
        if self.json_output:
            self.data.append({"type": level, "message": message})
        else:
            print(message)

    def print_table(self, headers: list[str], rows: list[list[Any]], title: str = ""):
        if self.json_output:
            records = [dict(zip(headers, row, strict=True)) for row in rows]
            self.data.append({"type": "table", "title": title, "rows": records})
            return

        rows = [[_fmt(cell) for cell in row] for row in rows]
        if title:
            print(f"\n{title}")
            print("=" * len(title))

        col_widths = [len(h) for h in headers]
        for row in rows:
            for i, cell in enumerate(row):
                col_widths[i] = max(col_widths[i], len(cell))

        separator = "+" + "+".join("-" * (w + 2) for w in col_widths) + "+"
        header_row = "|" + "|".join(f" {h:<{col_widths[i]}} " for i, h in enumerate(headers)) + "|"

        print(separator)
        print(header_row)
        print(separator)
        for row in rows:
            print("|" + "|".join(f" {cell:<{col_widths[i]}} " for i, cell in enumerate(row)) + "|")
        print(separator)

    def print_stats(self, stats: dict[str, Any], title: str = "Statistics"):
        if self.json_output:
            self.data.append({"type": "stats", "title": title, "stats": stats})
        else:
            print(f"\n{title}")
            print("=" * len(title))
            for key, value in stats.items():
                key_formatted = key.replace("_", " ").title()
                print(f"  {key_formatted}: {_fmt(value)}")

    def print_csv(self, frame: pd.DataFrame, path: str | None = None, title: str = ""):
        """CSV to ``path`` (or stdout in text mode); JSON mode also records the rows"""
        if path:
            dataset_io.write_table(frame, path)
        if self.json_output:
            self.data.append(
                {"type": "table", "title": title, "rows": frame.to_dict(orient="records")}
            )
        elif path:
            print(f"{title or 'table'}: {len(frame)} rows written to {path}")
        else:
            sys.stdout.write(dataset_io.to_csv_text(frame))

    def print_note(self, message: str):
        """Side information that must not mix with CSV on stdout"""
        if self.json_output:
            self.data.append({"type": "note", "message": message})
        else:
            print(message, file=sys.stderr)

    def print_json(self, command: str, input_echo: dict[str, Any], provenance: dict[str, Any]):
        if self.json_output:
            envelope = {
                "version": __version__,
                "command": command,
                "input": input_echo,
                "results": self.data,
                "provenance": provenance,
            }
            print(json.dumps(_clean(envelope), indent=2, allow_nan=False))

    def print_error(self, message: str):
        print(f"ERROR: {message}", file=sys.stderr)

    def print_warning(self, message: str):
        print(f"WARNING: {message}", file=sys.stderr)


def _load_scenarios(path: str) -> ScenarioConfig:
    return ScenarioConfigLoader(path).load()


def _select_scenarios(config: ScenarioConfig, name: str | None):
    if name is None:
        return config.scenarios
    chosen = tuple(cell for cell in config.scenarios if cell.name == name)
    if not chosen:
        raise ScenarioConfigError(f"no scenario named {name!r}")
    return chosen


def _local_levels(args: argparse.Namespace, config: ScenarioConfig | None = None):
    if getattr(args, "local_levels", None):
        return tuple(args.local_levels)
    return config.local_levels if config else None


def _output_path(args: argparse.Namespace, config: ScenarioConfig) -> str | None:
    """-o wins over the scenario file's ``output``"""
    return args.output or config.output


def cmd_fit(args: argparse.Namespace, output: CLIOutput) -> int:
    """Per-group MLEs with their asymptotic confidence intervals"""
    data = dataset_io.read_dataset(args.input)

    estimate_rows = []
    interval_rows = []
    for group in (Group.EXPERIMENTAL, Group.CONTROL):
        result = estimation_service.fit_mle(data, group)
        estimate_rows.append(
            [group.value, result.n, result.k, result.p_hat, result.theta1_hat, result.theta0_hat]
        )
        intervals = {
            "p": (result.p_hat, estimation_service.ci_p(result, args.level)),
            "theta1": (result.theta1_hat, estimation_service.ci_theta1(result, args.level)),
            "theta0": (result.theta0_hat, estimation_service.ci_theta0(result, args.level)),
        }
        for name, (estimate, ci) in intervals.items():
            interval_rows.append([group.value, name, estimate, ci.lower, ci.upper])

    output.print_table(
        ["group", "n", "k", "p_hat", "theta1_hat", "theta0_hat"],
        estimate_rows,
        "Maximum Likelihood Estimates",
    )
    output.print_table(
        ["group", "parameter", "estimate", "lower", "upper"],
        interval_rows,
        f"Asymptotic {args.level:.0%} Confidence Intervals",
    )
    return EXIT_OK


def cmd_test(args: argparse.Namespace, output: CLIOutput) -> int:
    """Global test of equal parameter triples"""
    data = dataset_io.read_dataset(args.input)
    method = TestMethod.parse(args.method)
    outcome = inference_service.run_test(
        method,
        data.subset(Group.EXPERIMENTAL),
        data.subset(Group.CONTROL),
        args.alpha,
        _local_levels(args),
    )

    levels = outcome.local_levels
    if method is TestMethod.APPROXIMATE:
        values = [outcome.stat_p, outcome.stat_theta1, outcome.stat_theta0]
        value_header = "statistic"
    else:
        values = [outcome.p_value_p, outcome.p_value_theta1, outcome.p_value_theta0]
        value_header = "p_value"
    decisions = [outcome.reject_p, outcome.reject_theta1, outcome.reject_theta0]

    output.print_stats(
        {"method": method.value, "alpha": args.alpha, "local_level": outcome.local_level},
        "RSES Test",
    )
    output.print_table(
        ["hypothesis", "local_level", value_header, "reject"],
        [
            [name, level, value, decision]
            for name, level, value, decision in zip(
                ["p", "theta1", "theta0"], levels, values, decisions, strict=True
            )
        ],
        "Local Tests",
    )
    output.print_stats({"reject_global": outcome.reject_global}, "Global Decision")
    return EXIT_OK


def cmd_oc(args: argparse.Namespace, output: CLIOutput) -> int:
    """Exact rejection probabilities over a grid of control group sizes"""
    config = _load_scenarios(args.config)
    sizes = args.grid or list(config.sizes)
    if not sizes:
        raise ScenarioConfigError("no sizes given: use --grid or 'sizes' in the scenario file")
    test = TestMethod.parse(args.test) if args.test else config.test
    cells = _select_scenarios(config, args.scenario)

    frames = []
    for cell in cells:
        curve = oc_service.power_curve(
            cell.model, sizes, config.alpha, test, config.ratio, _local_levels(args, config)
        )
        if (curve["truncation_error"] > 0).any():
            output.print_warning(
                f"{cell.name}: enumeration truncated, max dropped mass "
                f"{curve['truncation_error'].max():.3g}"
            )
        curve = curve[["n", "rate"]]
        if len(cells) > 1:
            curve.insert(0, "scenario", cell.name)
        frames.append(curve)

    output.print_csv(
        pd.concat(frames, ignore_index=True), _output_path(args, config), "rejection probability"
    )
    return EXIT_OK


def cmd_samplesize(args: argparse.Namespace, output: CLIOutput) -> int:
    """Approximate or exact sample sizes"""
    if args.reference_grid:
        frame = design_service.reference_design_grid(args.gamma, args.alpha, args.beta)
        output.print_csv(frame, args.output, "reference design grid")
        return EXIT_OK
    if not args.config:
        output.print_error("samplesize needs a scenario file or --reference-grid")
        return EXIT_USAGE

    config = _load_scenarios(args.config)
    method = DesignMethod.EXACT_ITERATIVE if args.method == "exact" else DesignMethod.APPROXIMATE
    rows = []
    for cell in _select_scenarios(config, args.scenario):
        spec = DesignSpec(
            cell.model, config.ratio, config.alpha, config.beta, _local_levels(args, config)
        )
        result = design_service.sample_size(spec, method)
        rows.append(
            [
                cell.name,
                result.n_c,
                result.n_e,
                result.achieved_power,
                result.approx_test_power,
                result.iterations,
            ]
        )
    output.print_table(
        ["scenario", "n_c", "n_e", "exact_test_power", "approx_test_power", "iterations"],
        rows,
        f"Sample Size ({method.value})",
    )
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace, output: CLIOutput) -> int:
    """Monte Carlo rejection rates"""
    config = _load_scenarios(args.config)
    tests = [SimulatedTest.parse(t) for t in args.test] if args.test else list(config.tests)
    sizes = args.n or list(config.sizes)
    if not sizes:
        raise ScenarioConfigError("no sizes given: use --n or 'sizes' in the scenario file")
    runs = args.runs if args.runs is not None else config.runs
    seed = args.seed if args.seed is not None else config.seed
    cells = _select_scenarios(config, args.scenario)

    if args.emit_data:
        first = cells[0]
        n_c = sizes[0]
        dataset = simulation_service.simulate_dataset(
            first.model, design_service.experimental_size(config.design_spec(first), n_c), n_c, seed
        )
        dataset_io.write_dataset(dataset, args.emit_data)
        output.print_note(f"simulated dataset of {first.name} written to {args.emit_data}")

    output.provenance.update({"seed": seed, "runs": runs})
    rows = []
    for cell in cells:
        for n_c in sizes:
            n_e = design_service.experimental_size(config.design_spec(cell), n_c)
            for test in tests:
                report = simulation_service.simulate_rejection_rate(
                    cell.model,
                    n_e,
                    n_c,
                    config.alpha,
                    test,
                    runs,
                    seed,
                    logrank_level=config.logrank_level,
                    local_levels=_local_levels(args, config),
                )
                rows.append({"scenario": cell.name, "n_e": n_e, "n_c": n_c, **report.to_dict()})

    frame = pd.DataFrame(
        rows,
        columns=[
            "scenario",
            "test",
            "n_e",
            "n_c",
            "runs",
            "rejections",
            "rate",
            "standard_error",
            "seed",
        ],
    )
    output.print_csv(frame, _output_path(args, config), "simulation")
    return EXIT_OK


def cmd_curves(args: argparse.Namespace, output: CLIOutput) -> int:
    """Survival curve grid of one scenario and its curve relation"""
    config = _load_scenarios(args.config)
    cell = _select_scenarios(config, args.scenario)[0]
    model = cell.model

    t_max = args.tmax
    if t_max is None:
        # time at which the slowest stratum is down to 1 percent
        slowest = min(
            model.experimental.lambda1,
            model.experimental.lambda0,
            model.control.lambda1,
            model.control.lambda0,
        )
        t_max = math.log(100.0) / slowest
    times = np.linspace(0.0, t_max, args.points)
    s_e, s_c = model_service.survival_curve(model, times)
    relation = model_service.classify_relation(model)

    frame = pd.DataFrame({"t": times, "S_E": s_e, "S_C": s_c}, columns=["t", "S_E", "S_C"])
    path = _output_path(args, config)
    if path or output.json_output:
        output.print(f"relation: {relation.value}")
    else:
        output.print_note(f"relation: {relation.value}")
    output.print_csv(frame, path, "survival curves")
    return EXIT_OK


def cmd_coverage(args: argparse.Namespace, output: CLIOutput) -> int:
    """Exact coverage of the asymptotic confidence intervals"""
    frame = estimation_service.coverage_grid(args.n_grid, args.p_grid, args.level)
    output.print_csv(frame, args.output, "coverage")
    return EXIT_OK


COMMANDS = {
    "fit": cmd_fit,
    "test": cmd_test,
    "oc": cmd_oc,
    "samplesize": cmd_samplesize,
    "simulate": cmd_simulate,
    "curves": cmd_curves,
    "coverage": cmd_coverage,
}


def run_command(args: argparse.Namespace, output: CLIOutput) -> int:
    """Run the appropriate command and map failures to exit codes"""
    handler = COMMANDS.get(args.command)
    if handler is None:
        output.print_error(f"Unknown command: {args.command}")
        return EXIT_USAGE

    try:
        return handler(args, output)
    except RsesError as e:
        if args.debug:
            logger.exception("Command failed")
        output.print_error(str(e))
        return e.exit_code
    except OSError as e:
        if args.debug:
            logger.exception("I/O failure")
        output.print_error(str(e))
        return EXIT_IO


def _add_scenario_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("config", help="Scenario file (JSON)")
    parser.add_argument("--scenario", metavar="NAME", help="Only the scenario with this name")
    parser.add_argument(
        "-o",
        "--output",
        metavar="PATH",
        help="Write the CSV table to PATH (default: 'output' of the scenario file)",
    )


def _add_local_levels(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--local-levels",
        nargs=3,
        type=probability,
        metavar=("A_P", "A_THETA1", "A_THETA0"),
        help="Per-hypothesis levels; their complements must multiply to 1 - alpha",
    )


def create_parser() -> argparse.ArgumentParser:
    """Create command-line argument parser with subcommands"""
    parser = argparse.ArgumentParser(
        prog="rsestrial",
        description="RsesTrial - analysis and planning of two-group trials with "
        "responder-stratified exponential survival",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  rsestrial fit trial.csv
  rsestrial test trial.csv --method exact --alpha 0.05
  rsestrial oc configs/type1_error.json --test exact
  rsestrial samplesize configs/sample_size.json --method exact
  rsestrial --threads 4 simulate configs/logrank_comparison.json --runs 10000
  rsestrial curves configs/crossing_curves.json --points 101
  rsestrial coverage --n-grid 10 50 100 --p-grid 0.05 0.25 0.5
        """,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    add_global_options(parser)

    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    fit_parser = subparsers.add_parser("fit", help="Estimate (p, theta1, theta0) per group")
    fit_parser.add_argument("input", help="CSV file with header group,response,time")
    fit_parser.add_argument(
        "--level", type=probability, default=0.95, help="Confidence level (default: %(default)s)"
    )

    test_parser = subparsers.add_parser("test", help="Test equality of the parameter triples")
    test_parser.add_argument("input", help="CSV file with header group,response,time")
    test_parser.add_argument(
        "--method", choices=["approx", "approximate", "exact"], default="exact"
    )
    test_parser.add_argument(
        "--alpha", type=probability, default=0.05, help="Global level (default: %(default)s)"
    )
    _add_local_levels(test_parser)

    oc_parser = subparsers.add_parser("oc", help="Exact rejection probabilities over sizes")
    _add_scenario_arguments(oc_parser)
    oc_parser.add_argument("--test", choices=["approx", "approximate", "exact"])
    oc_parser.add_argument(
        "--grid", nargs="+", type=positive_int, metavar="N", help="Control group sizes"
    )
    _add_local_levels(oc_parser)

    size_parser = subparsers.add_parser("samplesize", help="Sample size calculation")
    size_parser.add_argument("config", nargs="?", help="Scenario file (JSON)")
    size_parser.add_argument("--scenario", metavar="NAME", help="Only the scenario with this name")
    size_parser.add_argument("-o", "--output", metavar="PATH", help="Write the CSV table to PATH")
    size_parser.add_argument("--method", choices=["approx", "exact"], default="approx")
    size_parser.add_argument(
        "--reference-grid",
        action="store_true",
        help="Evaluate the 29-cell constellation grid instead of a scenario file",
    )
    size_parser.add_argument("--gamma", type=positive_float, default=0.142)
    size_parser.add_argument("--alpha", type=probability, default=0.05)
    size_parser.add_argument("--beta", type=probability, default=0.2)
    _add_local_levels(size_parser)

    sim_parser = subparsers.add_parser("simulate", help="Monte Carlo rejection rates")
    _add_scenario_arguments(sim_parser)
    sim_parser.add_argument(
        "--test", action="append", choices=[t.value for t in SimulatedTest], help="Repeatable"
    )
    sim_parser.add_argument("--n", nargs="+", type=positive_int, help="Control group sizes")
    sim_parser.add_argument("--runs", type=positive_int)
    sim_parser.add_argument("--seed", type=int)
    sim_parser.add_argument(
        "--emit-data", metavar="PATH", help="Also write the first simulated dataset as CSV"
    )
    _add_local_levels(sim_parser)

    curves_parser = subparsers.add_parser("curves", help="Survival curve grid and relation")
    _add_scenario_arguments(curves_parser)
    curves_parser.add_argument("--tmax", type=positive_float)
    curves_parser.add_argument("--points", type=positive_int, default=201)

    coverage_parser = subparsers.add_parser("coverage", help="Exact confidence interval coverage")
    coverage_parser.add_argument("--n-grid", nargs="+", type=positive_int, required=True)
    coverage_parser.add_argument("--p-grid", nargs="+", type=unit_interval, required=True)
    coverage_parser.add_argument("--level", type=probability, default=0.95)
    coverage_parser.add_argument(
        "-o", "--output", metavar="PATH", help="Write the CSV table to PATH"
    )

    return parser


def main(argv: list[str] | None = None) -> int:
    """Main CLI entry point"""
    parser = create_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return EXIT_OK

    config = create_config_from_args(args)
    apply_config(config)
    configure_logging(config, args)

    output = CLIOutput(json_output=config.output_format == "json", verbose=config.verbose_logging)
    logger.debug(f"Command: {args.command}, arguments: {vars(args)}")

    try:
        code = run_command(args, output)
    except KeyboardInterrupt:
        output.print_error("Operation cancelled")
        return 130
    except Exception as e:
        if args.debug:
            import traceback

            traceback.print_exc()
        output.print_error(str(e))
        return 1

    if code == EXIT_OK:
        input_echo = {k: v for k, v in vars(args).items() if k not in ("debug", "verbose")}
        provenance = {**output.provenance, "settings": app_config.to_dict()}
        output.print_json(args.command, input_echo, provenance)
    return code


if __name__ == "__main__":
    sys.exit(main())
