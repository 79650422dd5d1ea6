import csv
import io
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Sequence

from tenacity import retry, retry_if_exception_type, stop_after_attempt, wait_exponential

from gaussian_phase.exceptions import InvalidParameterError, ResultIOError
from gaussian_phase.schemas import CSV_COLUMNS, EstimationRecord, OutputFormat

# Configure logging
logger = logging.getLogger(__name__)

# Configuration
WRITE_ATTEMPTS = 3
SUMMARY_SUFFIX = ".summary.json"


def summary_path_for(records_path: str) -> str:
    """trials.csv -> trials.summary.json, next to the records file."""
    path = Path(records_path)
    return str(path.with_name(path.stem + SUMMARY_SUFFIX))


@retry(
    retry=retry_if_exception_type(OSError),
    stop=stop_after_attempt(WRITE_ATTEMPTS),
    wait=wait_exponential(multiplier=0.1, min=0.1, max=1),
    reraise=True,
)
def _write_text(path: str, text: str) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(text)


def write_text(path: str, text: str) -> str:
    try:
        _write_text(path, text)
        logger.info(f"Wrote {path}")
        return path
    except OSError as e:
        logger.error(f"Error writing {path}: {str(e)}")
        raise ResultIOError(f"Could not write {path}: {str(e)}")


def render_csv(header: Sequence[str], rows: List[Sequence[Any]]) -> str:
    """Floats as their shortest round-trip repr."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(value)) if isinstance(value, float) else value for value in row])
    return buffer.getvalue()


def render_json(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def render_records(records: List[EstimationRecord], fmt: OutputFormat) -> str:
    if fmt == OutputFormat.CSV:
        return render_csv(CSV_COLUMNS, [record.csv_values() for record in records])
    if fmt == OutputFormat.JSON:
        return render_json([record.dict() for record in records])
    raise InvalidParameterError(f"Unsupported output format: {fmt}")


def write_records(records: List[EstimationRecord], path: str,
                  fmt: OutputFormat = OutputFormat.CSV) -> str:
    """Per-trial records, in trial order."""
    return write_text(path, render_records(records, OutputFormat(fmt)))


def write_summary(summary: Dict[str, Any], path: str) -> str:
    return write_text(path, render_json(summary))
