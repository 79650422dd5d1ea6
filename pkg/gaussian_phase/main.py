import argparse
import logging
import sys
from typing import List, Optional

from dotenv import load_dotenv
from pydantic import ValidationError

from gaussian_phase.commands import dyne, oracle, qfi, simulate
from gaussian_phase.config import settings
from gaussian_phase.exceptions import InvalidParameterError, PhaseEstimationError, ResultIOError

load_dotenv()

# Configure logging
logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


class CommandParser(argparse.ArgumentParser):
    """Usage errors become InvalidParameterError, i.e. exit code 1."""

    def error(self, message: str):
        raise InvalidParameterError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = CommandParser(
        prog="gaussian-phase",
        description=f"{settings.APP_NAME}: Fisher information, oracles and Monte Carlo estimation",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {settings.APP_VERSION}")
    parser.add_argument("--log-level", default=settings.LOG_LEVEL,
                        help=f"Logging level on stderr (default: {settings.LOG_LEVEL})")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=CommandParser)
    subparsers.required = True

    # Include commands
    qfi.register(subparsers)
    dyne.register(subparsers)
    oracle.register(subparsers)
    simulate.register(subparsers)
    return parser


def configure_logging(level: str) -> None:
    logging.basicConfig(level=level.upper(), format=LOG_FORMAT, stream=sys.stderr, force=True)


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        configure_logging(args.log_level)
        logger.debug(f"Running {args.command}")
        return args.handler(args)
    except PhaseEstimationError as e:
        logger.error(e.detail)
        return e.exit_code
    except ValidationError as e:
        logger.error(f"Invalid configuration: {str(e)}")
        return InvalidParameterError.exit_code
    except ValueError as e:
        logger.error(f"Invalid argument: {str(e)}")
        return InvalidParameterError.exit_code
    except OSError as e:
        logger.error(f"I/O error: {str(e)}")
        return ResultIOError.exit_code


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
