import logging
import math
from typing import Tuple

import numpy as np
from scipy.optimize import brute, minimize_scalar
from scipy.stats import binom

from gaussian_phase.config import settings
from gaussian_phase.exceptions import (
    InvalidParameterError, NoInformativeOutcomesError, PhaseEstimationError
)
from gaussian_phase.schemas import (
    EstimationRecord, Estimator, ExperimentConfig, MleResult,
    OutcomeProbabilities, ThreeOutcomeCounts
)
from gaussian_phase.services.fock_oracle import (
    outcome_probability_table, three_outcome_probabilities
)
from gaussian_phase.services.gaussian_core import wrap_phase
from gaussian_phase.services.homodyne_scheme import rough_estimate

# Configure logging
logger = logging.getLogger(__name__)

LOG_FLOOR = 1e-300


def number_spread(r: float) -> float:
    """Photon-number standard deviation of the squeezed vacuum, sinh(2r)/sqrt(2)."""
    return math.sinh(2.0 * r) / math.sqrt(2.0)


def _require_positive_spread(delta_n: float) -> None:
    if delta_n <= 0:
        raise InvalidParameterError(f"Photon-number spread must be positive, got {delta_n}")


def sample_three_outcome(probs: OutcomeProbabilities, copies: int,
                         rng: np.random.Generator) -> ThreeOutcomeCounts:
    """Multinomial draw; any truncation deficit lands on the null outcome."""
    if copies < 0:
        raise InvalidParameterError(f"Number of copies must be non-negative, got {copies}")
    n_plus, n_minus, n_zero = rng.multinomial(copies, probs.as_array())
    return ThreeOutcomeCounts(n_plus=int(n_plus), n_minus=int(n_minus), n_zero=int(n_zero))


def approximate_mle(counts: ThreeOutcomeCounts, theta_guess: float, delta_n: float) -> float:
    _require_positive_spread(delta_n)
    n_informative = counts.n_informative
    if n_informative == 0:
        # Keep the preliminary estimate.
        return theta_guess
    return theta_guess + (counts.n_plus - counts.n_minus) / (2.0 * n_informative * delta_n)


def log_likelihood(counts: ThreeOutcomeCounts, theta, theta_guess: float,
                   r: float, dim: int) -> np.ndarray:
    """Multinomial log-likelihood (without the combinatorial constant) at each theta."""
    offsets = np.asarray(theta, dtype=float) - theta_guess
    table = outcome_probability_table(r, offsets, dim)
    weights = np.array([counts.n_plus, counts.n_minus, counts.n_zero], dtype=float)
    terms = np.where(weights > 0, weights * np.log(np.maximum(table, LOG_FLOOR)), 0.0)
    result = terms.sum(axis=1)
    return result if np.ndim(theta) else float(result[0])


def exact_mle(counts: ThreeOutcomeCounts, theta_guess: float, r: float,
              dim: int) -> MleResult:
    """Strict MLE: coarse grid over theta_guess +/- MLE_WINDOW, then bounded refinement."""
    if counts.n_informative == 0:
        logger.debug("Flat likelihood: no informative outcomes, keeping the preliminary estimate")
        return MleResult(
            theta_hat=theta_guess,
            log_likelihood=log_likelihood(counts, theta_guess, theta_guess, r, dim),
            degenerate=True,
        )

    def negative_log_likelihood(x) -> float:
        return -log_likelihood(counts, float(np.ravel(x)[0]), theta_guess, r, dim)

    window = settings.MLE_WINDOW
    lower, upper = theta_guess - window, theta_guess + window
    _, _, grid, values = brute(
        negative_log_likelihood,
        ranges=((lower, upper),),
        Ns=settings.MLE_GRID_POINTS,
        full_output=True,
        finish=None,
    )
    grid = np.ravel(grid)
    best = int(np.argmin(values))
    theta_hat = float(grid[best])

    if 0 < best < len(grid) - 1:
        refined = minimize_scalar(
            negative_log_likelihood,
            bounds=(float(grid[best - 1]), float(grid[best + 1])),
            method='bounded',
            options={'xatol': settings.MLE_XTOL},
        )
        if refined.fun <= values[best]:
            theta_hat = float(refined.x)
    else:
        logger.warning(f"Likelihood maximum at the edge of the search window around {theta_guess}")

    return MleResult(
        theta_hat=theta_hat,
        log_likelihood=log_likelihood(counts, theta_hat, theta_guess, r, dim),
        degenerate=False,
    )


def conditional_mse(n_informative: int, delta_n: float) -> float:
    """Leading-order MSE given n_informative informative outcomes."""
    _require_positive_spread(delta_n)
    if n_informative <= 0:
        raise NoInformativeOutcomesError(
            "No informative outcomes; the MSE equals the squared preliminary error"
        )
    return 1.0 / (4.0 * delta_n ** 2 * n_informative)


def conditional_expectation(n_informative: int, q: float, theta_guess: float,
                            delta_n: float) -> float:
    """Mean of the approximate MLE when a + outcome has probability q among informative ones."""
    _require_positive_spread(delta_n)
    if n_informative <= 0:
        return theta_guess
    return theta_guess + (2.0 * q - 1.0) / (2.0 * delta_n)


def averaged_inverse_ninf(copies: int, p_informative: float) -> Tuple[float, float]:
    """Binomial average of 1/N_inf over N_inf >= 1: exact sum and second-order expansion."""
    if copies < 1:
        raise InvalidParameterError(f"Number of copies must be at least 1, got {copies}")
    if not 0.0 < p_informative <= 1.0:
        raise InvalidParameterError(
            f"Informative probability must lie in (0, 1], got {p_informative}"
        )
    k = np.arange(1, copies + 1)
    exact = float(np.sum(binom.pmf(k, copies, p_informative) / k))

    mean = copies * p_informative
    miss = 1.0 - p_informative
    second_order = (1.0 + miss / mean - miss ** copies) / mean
    return exact, second_order


def averaged_mse(copies: int, p_informative: float, delta_n: float,
                 delta_theta: float) -> float:
    """Step-2 MSE averaged over N_inf, including the all-null branch."""
    _require_positive_spread(delta_n)
    exact, _ = averaged_inverse_ninf(copies, p_informative)
    return exact / (4.0 * delta_n ** 2) + delta_theta ** 2 * (1.0 - p_informative) ** copies


def two_step_povm_experiment(config: ExperimentConfig, rng: np.random.Generator,
                             trial_index: int = 0) -> EstimationRecord:
    """Rough homodyne estimate on ceil(N^alpha) copies, then the SLD POVM on the rest."""
    try:
        state = config.signal_state()
        theta_rough = rough_estimate(state, config.rough_copies, rng)

        probs = three_outcome_probabilities(
            config.r, config.theta_true, theta_rough, config.truncation_dim
        )
        counts = sample_three_outcome(probs, config.informative_budget, rng)

        if config.estimator == Estimator.EXACT:
            theta_hat = exact_mle(counts, theta_rough, config.r, config.truncation_dim).theta_hat
        else:
            theta_hat = approximate_mle(counts, theta_rough, number_spread(config.r))

        error = wrap_phase(theta_hat - config.theta_true)
        return EstimationRecord(
            trial_index=trial_index,
            theta_rough=theta_rough,
            theta_hat=theta_hat,
            wrapped_error=error,
            squared_error=error * error,
            statistic={
                "n_plus": float(counts.n_plus),
                "n_minus": float(counts.n_minus),
                "n_zero": float(counts.n_zero),
            },
            branch_flipped=False,
        )
    except PhaseEstimationError:
        raise
    except Exception as e:
        logger.error(f"Error in POVM trial {trial_index}: {str(e)}")
        raise
