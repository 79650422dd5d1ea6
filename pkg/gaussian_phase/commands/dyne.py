import argparse
import logging
import math

import numpy as np

from gaussian_phase.commands.common import add_format_flag, deliver, emit, render_csv, render_json
from gaussian_phase.config import settings
from gaussian_phase.exceptions import InvalidParameterError, ToleranceError
from gaussian_phase.schemas import DyneConfig, DyneRegime, GaussianPureState, OutputFormat
from gaussian_phase.services.dyne_measurement import (
    best_dyne_fisher, dyne_regime, fisher_closed, fisher_gamma_form, fisher_numeric,
    limiting_angle, threshold
)

# Configure logging
logger = logging.getLogger(__name__)

FISHER_MAP_HEADER = ("r", "r_prime", "phi", "F_closed", "F_gamma", "F_numeric", "qfi")
CEILING_SLACK = 1e-9


def register(subparsers) -> None:
    fisher_map = subparsers.add_parser(
        "fisher-map",
        help="Dyne Fisher information on an (r, r', phi) grid, in three equivalent forms",
    )
    fisher_map.add_argument("--r", type=float, nargs="+", required=True,
                            help="Signal squeezing values")
    fisher_map.add_argument("--rprime-range", type=float, nargs=2, default=[-4.0, 1.0],
                            metavar=("START", "STOP"), help="Ancilla squeezing range (default: -4 1)")
    fisher_map.add_argument("--rprime-steps", type=int, default=11,
                            help="Points in the ancilla range (default: 11)")
    fisher_map.add_argument("--phi-steps", type=int, default=19,
                            help="Points in phi over [0, pi] (default: 19)")
    fisher_map.add_argument("--out", help="Write the grid here instead of stdout")
    add_format_flag(fisher_map, default=OutputFormat.CSV)
    fisher_map.set_defaults(handler=run_fisher_map)

    thr = subparsers.add_parser("threshold", help="Ancilla squeezing threshold t_thr(s)")
    source = thr.add_mutually_exclusive_group(required=True)
    source.add_argument("--s", type=float, help="s = exp(-r)")
    source.add_argument("--r", type=float, help="Signal squeezing")
    add_format_flag(thr)
    thr.set_defaults(handler=run_threshold)

    optimum = subparsers.add_parser("optimal-angle", help="Best local-oscillator angle for a dyne measurement")
    optimum.add_argument("--r", type=float, required=True, help="Signal squeezing")
    optimum.add_argument("--rprime", type=float, required=True, help="Ancilla squeezing")
    add_format_flag(optimum)
    optimum.set_defaults(handler=run_optimal_angle)


def fisher_grid(r_values, r_prime_range, r_prime_steps: int, phi_steps: int):
    if r_prime_steps < 1 or phi_steps < 1:
        raise InvalidParameterError("Grid step counts must be at least 1")
    rows = []
    for r in r_values:
        ceiling = math.cosh(4 * r) - 1.0
        for r_prime in np.linspace(r_prime_range[0], r_prime_range[1], r_prime_steps):
            for phi in np.linspace(0.0, math.pi, phi_steps):
                r_prime, phi = float(r_prime), float(phi)
                numeric = fisher_numeric(
                    GaussianPureState(r=r, theta=0.0),
                    DyneConfig(r_prime=r_prime, theta_prime=0.5 * phi),
                )
                rows.append((
                    r, r_prime, phi,
                    fisher_closed(r, r_prime, phi),
                    fisher_gamma_form(r, r_prime, phi),
                    numeric,
                    ceiling,
                ))
    return rows


def grid_violations(rows) -> int:
    violations = 0
    for r, r_prime, phi, closed, gamma, numeric, ceiling in rows:
        scale = 1.0 + abs(closed)
        if abs(closed - gamma) > settings.FISHER_GAMMA_RTOL * scale:
            logger.warning(f"Gamma form disagrees at r={r}, r'={r_prime}, phi={phi}: {closed} vs {gamma}")
            violations += 1
        elif abs(closed - numeric) > settings.FISHER_NUMERIC_RTOL * scale:
            logger.warning(f"Numeric form disagrees at r={r}, r'={r_prime}, phi={phi}: {closed} vs {numeric}")
            violations += 1
        elif closed > ceiling + CEILING_SLACK * (1.0 + ceiling):
            logger.warning(f"Fisher information {closed} above the QFI {ceiling} at r={r}, r'={r_prime}, phi={phi}")
            violations += 1
    return violations


def run_fisher_map(args: argparse.Namespace) -> int:
    rows = fisher_grid(args.r, args.rprime_range, args.rprime_steps, args.phi_steps)
    if args.format == OutputFormat.CSV.value:
        text = render_csv(FISHER_MAP_HEADER, rows)
    else:
        text = render_json([dict(zip(FISHER_MAP_HEADER, row)) for row in rows])
    deliver(text, args.out)

    violations = grid_violations(rows)
    if violations:
        raise ToleranceError(f"{violations} of {len(rows)} grid points failed the Fisher cross-checks")
    logger.info(f"Fisher map: {len(rows)} points, all forms agree")
    return 0


def run_threshold(args: argparse.Namespace) -> int:
    s = args.s if args.s is not None else math.exp(-args.r)
    t_thr = threshold(s)
    emit({
        "s": s,
        "t_thr": t_thr,
        "r_prime_threshold": -math.log(t_thr),
        "limiting_angle": limiting_angle(s),
    }, args.format)
    return 0


def run_optimal_angle(args: argparse.Namespace) -> int:
    regime = dyne_regime(args.r, args.rprime)
    phi, fisher = best_dyne_fisher(args.r, args.rprime)
    if regime == DyneRegime.BELOW_THRESHOLD:
        logger.info("Below threshold: the optimum is the trivial angle")
    emit({
        "r": args.r,
        "r_prime": args.rprime,
        "regime": regime.value,
        "phi": phi,
        "lo_offset": 0.5 * phi,
        "fisher": fisher,
        "qfi": math.cosh(4 * args.r) - 1.0,
    }, args.format)
    return 0
