import argparse
import logging

from gaussian_phase.commands.common import add_format_flag, emit
from gaussian_phase.exceptions import InvalidParameterError
from gaussian_phase.schemas import GaussianPureState
from gaussian_phase.services.gaussian_core import (
    mean_photon_number, qfi, squeezing_for_photons
)

# Configure logging
logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        "qfi",
        help="Quantum Fisher information of a displaced squeezed state",
    )
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--r", type=float, help="Squeezing parameter")
    source.add_argument("--nbar", type=float, help="Photons put into squeezing")
    parser.add_argument("--alpha-displacement", type=float, default=0.0,
                        help="Real displacement amplitude (default: 0)")
    parser.add_argument("--copies", type=int, default=1,
                        help="Copies used for the Heisenberg bound (default: 1)")
    add_format_flag(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    r = args.r if args.r is not None else squeezing_for_photons(args.nbar)
    state = GaussianPureState(alpha=args.alpha_displacement, r=r)
    if args.copies < 1:
        raise InvalidParameterError(f"--copies must be at least 1, got {args.copies}")
    information = qfi(state)

    report = {
        "r": r,
        "alpha": state.alpha,
        "qfi": information,
        "mean_photon_number": mean_photon_number(state),
        "copies": args.copies,
        # null when the state carries no phase information
        "heisenberg_bound": 1.0 / (information * args.copies) if information > 0 else None,
    }
    logger.debug(f"QFI report: {report}")
    emit(report, args.format)
    return 0
