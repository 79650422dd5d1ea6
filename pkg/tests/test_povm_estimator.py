import math

import numpy as np
import pytest
from scipy.stats import binom

from gaussian_phase.exceptions import InvalidParameterError, NoInformativeOutcomesError
from gaussian_phase.schemas import Estimator, ExperimentConfig, ThreeOutcomeCounts
from gaussian_phase.services import fock_oracle
from gaussian_phase.services.povm_estimator import (
    LOG_FLOOR, approximate_mle, averaged_inverse_ninf, averaged_mse, conditional_expectation,
    conditional_mse, exact_mle, log_likelihood, number_spread, sample_three_outcome,
    two_step_povm_experiment
)


def test_number_spread():
    assert number_spread(1.0) == pytest.approx(math.sinh(2.0) / math.sqrt(2.0))


def test_approximate_mle():
    counts = ThreeOutcomeCounts(n_plus=60, n_minus=40, n_zero=3)
    assert approximate_mle(counts, 0.1, 2.0) == pytest.approx(0.1 + 20 / (2 * 100 * 2.0))


def test_approximate_mle_without_informative_outcomes():
    counts = ThreeOutcomeCounts(n_plus=0, n_minus=0, n_zero=12)
    assert approximate_mle(counts, 0.25, 2.0) == 0.25


def test_non_positive_spread_rejected():
    counts = ThreeOutcomeCounts(n_plus=1, n_minus=1, n_zero=0)
    with pytest.raises(InvalidParameterError):
        approximate_mle(counts, 0.0, 0.0)


def test_sampling_is_reproducible():
    probs = fock_oracle.three_outcome_probabilities(1.0, 0.32, 0.3, 128)
    first = sample_three_outcome(probs, 5000, np.random.default_rng(3))
    second = sample_three_outcome(probs, 5000, np.random.default_rng(3))
    assert first == second
    assert first.copies == 5000


def test_conditional_mse():
    assert conditional_mse(100, 2.0) == pytest.approx(1.0 / 1600)
    with pytest.raises(NoInformativeOutcomesError):
        conditional_mse(0, 2.0)


def test_conditional_expectation():
    assert conditional_expectation(50, 0.5, 0.2, 3.0) == pytest.approx(0.2)
    assert conditional_expectation(50, 0.75, 0.2, 3.0) == pytest.approx(0.2 + 0.5 / 6.0)
    assert conditional_expectation(0, 0.75, 0.2, 3.0) == 0.2


@pytest.mark.parametrize("copies,p", [(100, 0.1), (1000, 0.1), (1000, 0.5), (200, 0.9)])
def test_averaged_inverse_exceeds_inverse_mean(copies, p):
    exact, second_order = averaged_inverse_ninf(copies, p)
    assert exact >= 1.0 / (copies * p)
    assert second_order >= 1.0 / (copies * p)


def test_averaged_inverse_second_order_accuracy():
    exact, second_order = averaged_inverse_ninf(1000, 0.1)
    assert second_order == pytest.approx(exact, rel=1e-3)


def test_averaged_inverse_with_certain_outcomes():
    exact, second_order = averaged_inverse_ninf(50, 1.0)
    assert exact == pytest.approx(1.0 / 50)
    assert second_order == pytest.approx(1.0 / 50)


def test_averaged_inverse_rejects_bad_probability():
    with pytest.raises(InvalidParameterError):
        averaged_inverse_ninf(10, 0.0)


def test_averaged_mse_with_certain_outcomes():
    assert averaged_mse(100, 1.0, 2.0, 0.3) == pytest.approx(1.0 / (4 * 4.0 * 100))


def test_log_likelihood_vectorized_matches_scalar():
    counts = ThreeOutcomeCounts(n_plus=520, n_minus=480, n_zero=1)
    grid = np.array([0.28, 0.3, 0.31])
    values = log_likelihood(counts, grid, 0.3, 1.0, 128)
    assert values.shape == (3,)
    for theta, value in zip(grid, values):
        assert log_likelihood(counts, float(theta), 0.3, 1.0, 128) == pytest.approx(value)
    # the null outcome is impossible at the guess itself
    assert values[1] == pytest.approx(1000 * math.log(0.5) + math.log(LOG_FLOOR), rel=1e-9)


def test_exact_mle_close_to_approximate():
    r, theta_guess, theta_true = 0.5, 0.0, 0.02
    probs = fock_oracle.three_outcome_probabilities(r, theta_true, theta_guess, 128)
    counts = sample_three_outcome(probs, 100_000, np.random.default_rng(11))

    result = exact_mle(counts, theta_guess, r, 128)
    approximate = approximate_mle(counts, theta_guess, number_spread(r))
    assert not result.degenerate
    assert result.theta_hat == pytest.approx(approximate, abs=2e-3)
    assert result.log_likelihood >= log_likelihood(counts, approximate, theta_guess, r, 128) - 1e-9


def test_exact_mle_degenerate_without_informative_outcomes():
    counts = ThreeOutcomeCounts(n_plus=0, n_minus=0, n_zero=5)
    result = exact_mle(counts, 0.4, 1.0, 128)
    assert result.degenerate
    assert result.theta_hat == 0.4


def test_povm_trial_record(povm_config, rng):
    record = two_step_povm_experiment(povm_config, rng, trial_index=4)
    assert record.trial_index == 4
    assert math.isfinite(record.theta_hat)
    assert abs(record.wrapped_error) < 0.1
    assert not record.branch_flipped
    statistic = record.statistic
    assert statistic["n_plus"] + statistic["n_minus"] + statistic["n_zero"] == povm_config.informative_budget


def test_povm_trial_with_exact_estimator(povm_config, rng):
    config = ExperimentConfig(**{**povm_config.dict(), "estimator": Estimator.EXACT})
    record = two_step_povm_experiment(config, rng)
    assert abs(record.wrapped_error) < 0.1


@pytest.mark.parametrize("n_informative", [1, 7, 20])
def test_conditional_expectation_by_enumeration(n_informative):
    q, guess, spread = 0.62, 0.1, 1.3
    expected = sum(
        binom.pmf(n_plus, n_informative, q)
        * approximate_mle(ThreeOutcomeCounts(n_plus=n_plus, n_minus=n_informative - n_plus, n_zero=2),
                          guess, spread)
        for n_plus in range(n_informative + 1)
    )
    assert conditional_expectation(n_informative, q, guess, spread) == pytest.approx(expected, rel=1e-12)
