import argparse
import logging
import math
from typing import Dict, List

from gaussian_phase.commands.common import (
    add_degrees_flag, add_format_flag, angle, deliver, emit, render_csv
)
from gaussian_phase.config import settings
from gaussian_phase.exceptions import ToleranceError
from gaussian_phase.schemas import Generator, OutputFormat
from gaussian_phase.services import fock_oracle
from gaussian_phase.services.povm_estimator import number_spread

# Configure logging
logger = logging.getLogger(__name__)

CHECK_COLUMNS = ("check", "value", "expected", "error", "passed")


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "oracle-check",
        help="Cross-check the truncated Fock-space oracle against closed forms",
    )
    parser.add_argument("--r", type=float, required=True, help="Signal squeezing")
    parser.add_argument("--theta", type=float, default=0.0, help="Signal phase (default: 0)")
    parser.add_argument("--dim", type=int, default=settings.TRUNCATION_DIM,
                        help=f"Fock truncation D (default: {settings.TRUNCATION_DIM})")
    add_degrees_flag(parser)
    add_format_flag(parser)
    parser.set_defaults(handler=run)


def _check(name: str, value: float, expected: float, tolerance: float) -> Dict:
    value, expected = float(value), float(expected)
    error = abs(value - expected)
    return {
        "check": name,
        "value": value,
        "expected": expected,
        "error": error,
        "passed": error <= tolerance * (1.0 + abs(expected)),
    }


def oracle_checks(r: float, theta: float, dim: int) -> List[Dict]:
    tol = settings.ORACLE_TOL
    closed = fock_oracle.squeeze_vacuum(r, dim)
    numeric = fock_oracle.apply_generator_exponential(fock_oracle.vacuum(dim), Generator.squeeze(r))
    fidelity = abs(closed.overlap(numeric)) ** 2 / (closed.norm_squared * numeric.norm_squared)

    mean, variance = fock_oracle.number_operator_moments(closed)
    low, high = fock_oracle.sld_eigenvalues(r, theta, dim)
    slope_plus, slope_minus = fock_oracle.outcome_probability_slopes(r, theta, dim)
    spread = number_spread(r)
    information = math.cosh(4 * r) - 1.0

    return [
        _check("squeeze_fidelity", fidelity, 1.0, tol),
        _check("mean_photon_number", mean, math.sinh(r) ** 2, tol),
        _check("photon_number_variance", variance, 2.0 * (math.sinh(r) * math.cosh(r)) ** 2, tol),
        _check("sld_max_eigenvalue", high, 2.0 * spread, tol),
        _check("sld_min_eigenvalue", low, -2.0 * spread, tol),
        _check("p_plus_slope", slope_plus, spread, tol),
        _check("p_minus_slope", slope_minus, -spread, tol),
        _check("three_outcome_fisher", fock_oracle.three_outcome_fisher(r, theta, theta, dim), information, tol),
        _check("optimality_violation", fock_oracle.optimality_conditions_check(r, theta, dim), 0.0,
               settings.OPTIMALITY_TOL),
    ]


def run(args: argparse.Namespace) -> int:
    theta = angle(args.theta, args.degrees)
    checks = oracle_checks(args.r, theta, args.dim)
    failed = [check["check"] for check in checks if not check["passed"]]
    if args.format == OutputFormat.CSV.value:
        deliver(render_csv(CHECK_COLUMNS, [[check[key] for key in CHECK_COLUMNS] for check in checks]))
    else:
        emit({"r": args.r, "theta": theta, "dim": args.dim, "checks": checks}, args.format)
    if failed:
        raise ToleranceError(f"Oracle checks failed: {', '.join(failed)}")
    return 0
