import logging
import math
from typing import Tuple

import numpy as np

from gaussian_phase.exceptions import InvalidParameterError, PhaseEstimationError
from gaussian_phase.schemas import (
    EstimationRecord, ExperimentConfig, GaussianPureState, HomodyneBatch
)
from gaussian_phase.services.dyne_measurement import clamped_arccos, limiting_angle
from gaussian_phase.services.gaussian_core import wrap_phase, wrapped_distance

# Configure logging
logger = logging.getLogger(__name__)


def _require_squeezed(s: float) -> None:
    if not 0.0 < s < 1.0:
        raise InvalidParameterError(
            f"Homodyne phase estimation needs a squeezed signal (0 < s < 1), got s={s}"
        )


def quadrature_variance(s: float, theta_prime: float, theta: float) -> float:
    """Variance of the quadrature at angle theta_prime for a squeezed vacuum at phase theta."""
    if s <= 0:
        raise InvalidParameterError(f"s must be positive, got {s}")
    s2, s4 = s * s, s ** 4
    return (1.0 + s4 + (1.0 - s4) * math.cos(2.0 * (theta_prime - theta))) / (4.0 * s2)


def _variance_derivative(s: float, theta_prime: float, theta: float) -> float:
    """d sigma^2 / d theta."""
    return (1.0 - s ** 4) * 2.0 * math.sin(2.0 * (theta_prime - theta)) / (4.0 * s * s)


def sample_homodyne(state: GaussianPureState, theta_prime: float, copies: int,
                    rng: np.random.Generator) -> HomodyneBatch:
    if not state.is_squeezed_vacuum:
        raise InvalidParameterError("Homodyne sampling supports squeezed vacuum signals only (alpha = 0)")
    if copies < 1:
        raise InvalidParameterError(f"Number of copies must be at least 1, got {copies}")
    sigma = math.sqrt(quadrature_variance(state.s, theta_prime, state.theta))
    return HomodyneBatch.from_outcomes(theta_prime, rng.normal(0.0, sigma, copies))


def homodyne_fisher(s: float, theta_prime: float, theta: float) -> float:
    """Fisher information of the zero-mean Gaussian outcome family."""
    _require_squeezed(s)
    variance = quadrature_variance(s, theta_prime, theta)
    return _variance_derivative(s, theta_prime, theta) ** 2 / (2.0 * variance ** 2)


def empirical_homodyne_fisher(batch: HomodyneBatch, s: float,
                              theta: float) -> Tuple[float, float]:
    """Score-variance Fisher estimate at the true phase, with its standard error."""
    variance = quadrature_variance(s, batch.quadrature_angle, theta)
    derivative = _variance_derivative(s, batch.quadrature_angle, theta)
    score = derivative * (batch.outcomes ** 2 - variance) / (2.0 * variance ** 2)
    squared = score ** 2
    return float(squared.mean()), float(squared.std(ddof=1) / math.sqrt(len(squared)))


def _clipped_cosine(batch: HomodyneBatch, s: float) -> float:
    s4 = s ** 4
    u = (4.0 * s * s * batch.mean_square - 1.0 - s4) / (1.0 - s4)
    if abs(u) > 1.0:
        logger.debug(f"Clipping homodyne statistic {u:.6f} into [-1, 1]")
    return min(1.0, max(-1.0, u))


def homodyne_branches(batch: HomodyneBatch, s: float) -> Tuple[float, float]:
    """The two MLE solutions theta' - arccos(u)/2 and theta' + arccos(u)/2."""
    if batch.copies == 0:
        raise InvalidParameterError("Cannot estimate from an empty homodyne batch")
    _require_squeezed(s)
    half_gap = 0.5 * math.acos(_clipped_cosine(batch, s))
    return batch.quadrature_angle - half_gap, batch.quadrature_angle + half_gap


def homodyne_mle(batch: HomodyneBatch, theta_guess: float, s: float) -> float:
    """Branch of the twice-degenerate MLE nearest (wrapped) to the rough guess."""
    minus_branch, plus_branch = homodyne_branches(batch, s)
    if wrapped_distance(minus_branch, theta_guess) <= wrapped_distance(plus_branch, theta_guess):
        return minus_branch
    return plus_branch


def wrong_branch_bias(s: float, theta_prime: float, theta: float) -> float:
    """Separation between the two likelihood maxima."""
    _require_squeezed(s)
    s4 = s ** 4
    argument = (4.0 * s * s * quadrature_variance(s, theta_prime, theta) - 1.0 - s4) / (1.0 - s4)
    return clamped_arccos(argument)


def rough_estimate(state: GaussianPureState, copies: int, rng: np.random.Generator) -> float:
    """Moment estimator from homodyne quadratures at 0 and pi/4.

    The copies are split in half, the odd one going to the first quadrature.
    Returns a phase in (-pi/2, pi/2].
    """
    if copies < 2:
        raise InvalidParameterError(f"Rough estimate needs at least 2 copies, got {copies}")
    s = state.s
    _require_squeezed(s)

    first = sample_homodyne(state, 0.0, copies - copies // 2, rng)
    second = sample_homodyne(state, 0.25 * math.pi, copies // 2, rng)
    cos_two_theta = _clipped_cosine(first, s)
    sin_two_theta = _clipped_cosine(second, s)
    return wrap_phase(0.5 * math.atan2(sin_two_theta, cos_two_theta))


def two_step_homodyne_experiment(config: ExperimentConfig, rng: np.random.Generator,
                                 trial_index: int = 0) -> EstimationRecord:
    """Rough estimate, homodyne at theta0 -/+ Phi(s)/2, then the branch nearest theta0."""
    try:
        state = config.signal_state()
        s = state.s
        theta_rough = rough_estimate(state, config.rough_copies, rng)

        theta_prime = theta_rough - config.lo_sign * 0.5 * limiting_angle(s)
        batch = sample_homodyne(state, theta_prime, config.informative_budget, rng)
        minus_branch, plus_branch = homodyne_branches(batch, s)
        theta_hat = homodyne_mle(batch, theta_rough, s)
        other = plus_branch if theta_hat == minus_branch else minus_branch

        error = wrap_phase(theta_hat - config.theta_true)
        flipped = wrapped_distance(other, config.theta_true) < abs(error)
        if flipped:
            logger.debug(f"Trial {trial_index}: selected branch is the far one")

        return EstimationRecord(
            trial_index=trial_index,
            theta_rough=theta_rough,
            theta_hat=theta_hat,
            wrapped_error=error,
            squared_error=error * error,
            statistic={
                "theta_prime": theta_prime,
                "sum_of_squares": batch.sum_of_squares,
                "copies": float(batch.copies),
            },
            branch_flipped=flipped,
        )
    except PhaseEstimationError:
        raise
    except Exception as e:
        logger.error(f"Error in homodyne trial {trial_index}: {str(e)}")
        raise
