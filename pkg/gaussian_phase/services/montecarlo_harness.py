import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from gaussian_phase.config import settings
from gaussian_phase.exceptions import InvalidParameterError, PhaseEstimationError, TruncationError
from gaussian_phase.schemas import (
    EstimationRecord, ExperimentConfig, GaussianPureState, Scheme, SweepResult, SweepRow
)
from gaussian_phase.services.gaussian_core import qfi
from gaussian_phase.services.homodyne_scheme import two_step_homodyne_experiment
from gaussian_phase.services.povm_estimator import two_step_povm_experiment
from gaussian_phase.services.result_writer import summary_path_for, write_records, write_summary

# Configure logging
logger = logging.getLogger(__name__)

TrialFunction = Callable[[ExperimentConfig, np.random.Generator, int], EstimationRecord]


def trial_rng(seed: int, trial_index: int) -> np.random.Generator:
    """Independent stream for trial k, derived from (seed, k) alone."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial_index,)))


def _config_echo(config: ExperimentConfig) -> Dict:
    return json.loads(config.json())


class TrialRunner:
    def __init__(self, max_workers: Optional[int] = None):
        self.max_workers = max_workers or settings.WORKERS
        self.schemes: Dict[Scheme, TrialFunction] = {
            Scheme.POVM: two_step_povm_experiment,
            Scheme.HOMODYNE: two_step_homodyne_experiment,
        }

    def run_trial(self, config: ExperimentConfig, trial_index: int) -> EstimationRecord:
        experiment = self.schemes[config.scheme]
        try:
            return experiment(config, trial_rng(config.seed, trial_index), trial_index)
        except TruncationError as e:
            logger.error(f"Trial {trial_index} failed: {e.detail}")
            raise

    def run_trials(self, config: ExperimentConfig,
                   workers: Optional[int] = None) -> List[EstimationRecord]:
        """Records in trial order; identical for any number of workers."""
        workers = max(1, workers or self.max_workers)
        logger.info(
            f"Running {config.trials} {config.scheme.value} trials "
            f"(r={config.r}, N={config.total_copies}, workers={workers})"
        )
        indices = range(config.trials)
        if workers == 1:
            return [self.run_trial(config, k) for k in indices]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(lambda k: self.run_trial(config, k), indices))

    def aggregate(self, records: Sequence[EstimationRecord], total_copies: int,
                  r: float) -> SweepRow:
        """Bias, variance and MSE of the wrapped errors; MSE = variance + bias^2."""
        if not records:
            raise InvalidParameterError("Cannot aggregate an empty set of records")
        ordered = sorted(records, key=lambda record: record.trial_index)
        errors = np.array([record.wrapped_error for record in ordered])
        squared = np.array([record.squared_error for record in ordered])
        trials = len(ordered)

        mse = float(squared.mean())
        standard_error = float(squared.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
        information = qfi(GaussianPureState(r=r))
        return SweepRow(
            total_copies=total_copies,
            trials=trials,
            mean_bias=float(errors.mean()),
            variance=float(errors.var()),
            mse=mse,
            mse_standard_error=standard_error,
            n_times_mse=total_copies * mse,
            heisenberg_reference=1.0 / information,
            normalized_mse=total_copies * mse * information,
            branch_flip_rate=sum(record.branch_flipped for record in ordered) / trials,
        )

    def convergence_sweep(self, base_config: ExperimentConfig, copies_list: Sequence[int],
                          workers: Optional[int] = None) -> SweepResult:
        if not copies_list:
            raise InvalidParameterError("Need at least one total copy count")
        if any(a >= b for a, b in zip(copies_list, copies_list[1:])):
            raise InvalidParameterError(f"Copy counts must be strictly ascending, got {list(copies_list)}")

        rows = []
        for total_copies in copies_list:
            config = ExperimentConfig(**{**base_config.dict(), "total_copies": total_copies})
            row = self.aggregate(self.run_trials(config, workers), total_copies, config.r)
            spread = row.mse_standard_error * total_copies / row.heisenberg_reference
            logger.info(f"N={total_copies}: N*MSE*H = {row.normalized_mse:.4f} +/- {spread:.4f}")
            rows.append(row)
        return SweepResult(scheme=base_config.scheme, rows=rows, config=_config_echo(base_config))

    def run_experiment(self, config: ExperimentConfig,
                       workers: Optional[int] = None) -> Tuple[List[EstimationRecord], SweepResult]:
        """Run, aggregate and persist records plus a summary next to them."""
        try:
            records = self.run_trials(config, workers)
            row = self.aggregate(records, config.total_copies, config.r)
            result = SweepResult(scheme=config.scheme, rows=[row], config=_config_echo(config))

            write_records(records, config.output_path, config.output_format)
            write_summary(json.loads(result.json()), summary_path_for(config.output_path))
            logger.info(f"Finished: N*MSE*H = {row.normalized_mse:.4f}")
            return records, result
        except PhaseEstimationError:
            raise
        except Exception as e:
            logger.error(f"Error running experiment: {str(e)}")
            raise


# Create a singleton instance
_runner = TrialRunner()

def run_trials(config: ExperimentConfig, workers: Optional[int] = None) -> List[EstimationRecord]:
    return _runner.run_trials(config, workers)

def aggregate(records: Sequence[EstimationRecord], total_copies: int, r: float) -> SweepRow:
    return _runner.aggregate(records, total_copies, r)

def convergence_sweep(base_config: ExperimentConfig, copies_list: Sequence[int],
                      workers: Optional[int] = None) -> SweepResult:
    return _runner.convergence_sweep(base_config, copies_list, workers)

def run_experiment(config: ExperimentConfig,
                   workers: Optional[int] = None) -> Tuple[List[EstimationRecord], SweepResult]:
    return _runner.run_experiment(config, workers)
