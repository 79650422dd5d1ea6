import argparse
import math
import sys
from typing import Any, Dict, Optional

from gaussian_phase.schemas import OutputFormat
from gaussian_phase.services.result_writer import render_csv, render_json, write_text


def add_format_flag(parser: argparse.ArgumentParser, default: OutputFormat = OutputFormat.JSON) -> None:
    parser.add_argument(
        "--format",
        choices=[fmt.value for fmt in OutputFormat],
        default=default.value,
        help=f"Output format (default: {default.value})",
    )


def add_degrees_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--degrees",
        action="store_true",
        help="Read angle flags in degrees instead of radians",
    )


def angle(value: Optional[float], degrees: bool) -> Optional[float]:
    if value is None:
        return None
    return math.radians(value) if degrees else value


def emit(payload: Dict[str, Any], fmt: str, out: Optional[str] = None) -> None:
    """A single report as one JSON document or a one-row CSV."""
    if fmt == OutputFormat.CSV.value:
        keys = sorted(payload)
        text = render_csv(keys, [[payload[key] for key in keys]])
    else:
        text = render_json(payload)
    deliver(text, out)


def deliver(text: str, out: Optional[str] = None) -> None:
    if out:
        write_text(out, text)
    else:
        sys.stdout.write(text)
