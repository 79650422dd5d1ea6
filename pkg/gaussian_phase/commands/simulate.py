import argparse
import json
import logging
from typing import Any, Dict

from gaussian_phase.commands.common import add_degrees_flag, angle, deliver, render_json
from gaussian_phase.config import settings
from gaussian_phase.exceptions import InvalidParameterError, ResultIOError, ToleranceError
from gaussian_phase.schemas import Estimator, ExperimentConfig, OutputFormat, Scheme
from gaussian_phase.services.montecarlo_harness import convergence_sweep, run_experiment
from gaussian_phase.services.result_writer import summary_path_for, write_summary

# Configure logging
logger = logging.getLogger(__name__)

# CLI flag -> ExperimentConfig field
CONFIG_FLAGS = {
    "r": "r",
    "theta_true": "theta_true",
    "copies": "total_copies",
    "split_exponent": "split_exponent",
    "trials": "trials",
    "seed": "seed",
    "dim": "truncation_dim",
    "out": "output_path",
    "format": "output_format",
    "estimator": "estimator",
    "lo_sign": "lo_sign",
}


def _add_experiment_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("scheme", choices=[scheme.value for scheme in Scheme],
                        help="Second-step measurement")
    parser.add_argument("--config", help="JSON file with ExperimentConfig fields; flags override it")
    parser.add_argument("--r", type=float, help="Signal squeezing")
    parser.add_argument("--theta-true", type=float, help="True phase")
    parser.add_argument("--split-exponent", type=float,
                        help=f"Rough step uses ceil(N**alpha) copies (default: {settings.SPLIT_EXPONENT:.4f})")
    parser.add_argument("--trials", type=int, help="Monte Carlo trials")
    parser.add_argument("--seed", type=int, help="Master seed (required, here or in --config)")
    parser.add_argument("--dim", type=int, help=f"Fock truncation D (default: {settings.TRUNCATION_DIM})")
    parser.add_argument("--estimator", choices=[e.value for e in Estimator],
                        help="POVM step-2 estimator (default: approximate)")
    parser.add_argument("--lo-sign", type=int, choices=[-1, 1],
                        help="Homodyne quadrature at theta0 - sign*Phi/2 (default: -1)")
    parser.add_argument("--workers", type=int, default=settings.WORKERS,
                        help=f"Worker threads; results do not depend on it (default: {settings.WORKERS})")
    add_degrees_flag(parser)


def register(subparsers) -> None:
    simulate = subparsers.add_parser("simulate", help="Monte Carlo run of a two-step estimation scheme")
    _add_experiment_flags(simulate)
    simulate.add_argument("--copies", type=int, help="Total copies N")
    simulate.add_argument("--out", help=f"Per-trial records file (default: {settings.OUTPUT_PATH})")
    simulate.add_argument("--format", choices=[fmt.value for fmt in OutputFormat],
                          help="Records format (default: csv)")
    simulate.set_defaults(handler=run_simulate)

    sweep = subparsers.add_parser("sweep", help="N*MSE*H over a list of total copy counts")
    _add_experiment_flags(sweep)
    sweep.add_argument("--copies-list", type=int, nargs="+", required=True,
                       help="Ascending total copy counts")
    sweep.add_argument("--out", dest="summary_out", help="Write the summary JSON here as well as to stdout")
    sweep.add_argument("--acceptance-band", type=float, nargs=2, metavar=("LOW", "HIGH"),
                       help="Fail (exit 2) unless the last N*MSE*H lies in [LOW, HIGH]")
    sweep.set_defaults(handler=run_sweep)


def _load_config_file(path: str) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            values = json.load(handle)
    except OSError as e:
        raise ResultIOError(f"Could not read config file {path}: {str(e)}")
    except json.JSONDecodeError as e:
        raise InvalidParameterError(f"Config file {path} is not valid JSON: {str(e)}")
    if not isinstance(values, dict):
        raise InvalidParameterError(f"Config file {path} must hold a JSON object")
    return values


def build_config(args: argparse.Namespace, **overrides) -> ExperimentConfig:
    """Config file values, then explicit flags, then command-specific overrides."""
    values = _load_config_file(args.config) if args.config else {}
    for flag, field in CONFIG_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            values[field] = value
    values["scheme"] = args.scheme
    values.update(overrides)

    if values.get("seed") is None:
        raise InvalidParameterError("A seed is required: pass --seed or set \"seed\" in --config")
    if args.degrees and args.theta_true is not None:
        values["theta_true"] = angle(args.theta_true, True)
    return ExperimentConfig(**values)


def run_simulate(args: argparse.Namespace) -> int:
    config = build_config(args)
    _, result = run_experiment(config, args.workers)
    row = result.rows[0]
    deliver(render_json({
        "normalized_mse": row.normalized_mse,
        "mse": row.mse,
        "mse_standard_error": row.mse_standard_error,
        "records": config.output_path,
        "summary": summary_path_for(config.output_path),
    }))
    return 0


def run_sweep(args: argparse.Namespace) -> int:
    copies_list = args.copies_list
    config = build_config(args, total_copies=copies_list[0])
    result = convergence_sweep(config, copies_list, args.workers)
    summary = json.loads(result.json())
    if args.summary_out:
        write_summary(summary, args.summary_out)
    deliver(render_json(summary))

    if args.acceptance_band:
        low, high = args.acceptance_band
        final = result.rows[-1].normalized_mse
        if not low <= final <= high:
            raise ToleranceError(
                f"N*MSE*H = {final:.4f} at N={copies_list[-1]} lies outside [{low}, {high}]"
            )
        logger.info(f"N*MSE*H = {final:.4f} within [{low}, {high}]")
    return 0
