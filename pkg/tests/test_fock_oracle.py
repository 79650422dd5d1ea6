import math

import numpy as np
import pytest

from gaussian_phase.exceptions import InvalidParameterError, TruncationError
from gaussian_phase.schemas import Generator, TruncatedState
from gaussian_phase.services import fock_oracle


def _spread(r):
    return math.sinh(2 * r) / math.sqrt(2.0)


def test_vacuum_and_fock_states(test_settings):
    dim = test_settings.TRUNCATION_DIM
    vacuum = fock_oracle.vacuum(dim)
    assert vacuum.dim == dim
    assert vacuum.amplitudes[0] == 1.0
    assert fock_oracle.fock_state(3, dim).amplitudes[3] == 1.0
    with pytest.raises(InvalidParameterError):
        fock_oracle.fock_state(dim, dim)


@pytest.mark.parametrize("dim", [15, 8, 1024])
def test_invalid_truncation_dimension(dim):
    with pytest.raises(InvalidParameterError):
        fock_oracle.validate_dim(dim)


def test_squeezed_vacuum_closed_form():
    r = 1.0
    state = fock_oracle.squeeze_vacuum(r, 128)
    assert state.norm_squared == pytest.approx(1.0, abs=1e-12)
    assert np.all(state.amplitudes[1::2] == 0)
    assert state.amplitudes[0].real == pytest.approx(1.0 / math.sqrt(math.cosh(r)))
    # <2|S|0> = -tanh(r) / sqrt(2 cosh r)
    assert state.amplitudes[2].real == pytest.approx(-math.tanh(r) / math.sqrt(2.0 * math.cosh(r)))


def test_squeeze_exponential_matches_closed_form():
    r = 1.0
    closed = fock_oracle.squeeze_vacuum(r, 128)
    numeric = fock_oracle.apply_generator_exponential(fock_oracle.vacuum(128), Generator.squeeze(r))
    assert np.allclose(numeric.amplitudes, closed.amplitudes, atol=1e-8)


def test_truncation_leakage_raises():
    with pytest.raises(TruncationError) as excinfo:
        fock_oracle.squeeze_vacuum(2.5, 32)
    assert excinfo.value.dim == 32
    assert "increase the truncation dimension" in excinfo.value.detail


def test_rotation_by_pi_leaves_squeezed_vacuum_invariant():
    state = fock_oracle.squeeze_vacuum(0.7, 64)
    rotated = fock_oracle.apply_generator_exponential(state, Generator.rotate(math.pi))
    assert np.allclose(rotated.amplitudes, state.amplitudes, atol=1e-12)


def test_displacement_gives_coherent_state_moments():
    coherent = fock_oracle.apply_generator_exponential(fock_oracle.vacuum(64), Generator.displace(1.0))
    mean, variance = fock_oracle.number_operator_moments(coherent)
    assert mean == pytest.approx(1.0, abs=1e-8)
    assert variance == pytest.approx(1.0, abs=1e-8)


def test_unnormalized_input_rejected():
    state = TruncatedState(amplitudes=np.full(16, 0.5), leakage=0.0)
    with pytest.raises(InvalidParameterError):
        fock_oracle.apply_generator_exponential(state, Generator.squeeze(0.1))


def test_number_moments_of_squeezed_vacuum():
    r = 1.0
    mean, variance = fock_oracle.number_operator_moments(fock_oracle.squeeze_vacuum(r, 128))
    assert mean == pytest.approx(math.sinh(r) ** 2, rel=1e-10)
    assert variance == pytest.approx(2.0 * (math.sinh(r) * math.cosh(r)) ** 2, rel=1e-10)


def test_psi_vector_is_orthogonal_with_number_variance():
    r, theta = 0.8, 0.4
    psi = fock_oracle.psi_vector(r, theta, 128)
    signal = fock_oracle.apply_generator_exponential(
        fock_oracle.squeeze_vacuum(r, 128), Generator.rotate(theta)
    )
    assert abs(np.vdot(signal.amplitudes, psi.amplitudes)) < 1e-12
    assert psi.norm_squared == pytest.approx(2.0 * (math.sinh(r) * math.cosh(r)) ** 2, rel=1e-10)


def test_sld_eigenvalues():
    r = 1.0
    low, high = fock_oracle.sld_eigenvalues(r, 0.3, 128)
    assert high == pytest.approx(2.0 * _spread(r), rel=1e-8)
    assert low == pytest.approx(-2.0 * _spread(r), rel=1e-8)


def test_sld_povm_is_orthonormal():
    e_plus, e_minus = fock_oracle.sld_povm(1.0, 0.2, 128)
    assert e_plus.norm_squared == pytest.approx(1.0, abs=1e-12)
    assert e_minus.norm_squared == pytest.approx(1.0, abs=1e-12)
    assert abs(e_plus.overlap(e_minus)) < 1e-12


def test_probabilities_at_the_guess():
    probs = fock_oracle.three_outcome_probabilities(1.0, 0.3, 0.3, 128)
    assert probs.p_plus == pytest.approx(0.5, abs=1e-12)
    assert probs.p_minus == pytest.approx(0.5, abs=1e-12)
    assert probs.p_zero == pytest.approx(0.0, abs=1e-12)


def test_null_outcome_vanishes_exactly_at_the_guess():
    table = fock_oracle.outcome_probability_table(1.0, np.array([-0.02, 0.0, 0.01]), 128)
    assert table[1, 2] == 0.0
    assert fock_oracle.three_outcome_probabilities(1.0, 0.0, 0.0, 128).p_zero == 0.0
    assert table[0, 2] > 0.0 and table[2, 2] > 0.0


@pytest.mark.parametrize("offset", [-0.4, -0.05, 0.01, 0.2, 0.7])
def test_probabilities_sum_to_one(offset):
    probs = fock_oracle.three_outcome_probabilities(1.0, 0.3 + offset, 0.3, 128)
    assert probs.total == pytest.approx(1.0, abs=1e-10)


def test_probabilities_mirror_symmetry():
    table = fock_oracle.outcome_probability_table(0.8, np.array([0.05, -0.05]), 128)
    assert table[0, 0] == pytest.approx(table[1, 1], abs=1e-12)
    assert table[0, 1] == pytest.approx(table[1, 0], abs=1e-12)
    assert table[0, 2] == pytest.approx(table[1, 2], abs=1e-12)


def test_probability_slopes_equal_number_spread():
    r = 1.0
    slope_plus, slope_minus = fock_oracle.outcome_probability_slopes(r, 0.3, 128)
    assert slope_plus == pytest.approx(_spread(r), rel=1e-6)
    assert slope_minus == pytest.approx(-_spread(r), rel=1e-6)


def test_null_outcome_is_quartic_in_offset():
    r, offset = 0.5, 1e-2
    p_zero = fock_oracle.three_outcome_probabilities(r, offset, 0.0, 128).p_zero
    expected = 6.0 * offset ** 4 * (math.sinh(r) * math.cosh(r)) ** 4
    assert p_zero == pytest.approx(expected, rel=1e-2)
    # bounded by C * offset^2 well inside the window
    assert p_zero <= offset ** 2


def test_three_outcome_fisher_saturates_qfi():
    r = 0.5
    fisher = fock_oracle.three_outcome_fisher(r, 0.1, 0.1, 128)
    assert fisher == pytest.approx(math.cosh(4 * r) - 1.0, rel=1e-6)


def test_optimality_conditions_hold():
    assert fock_oracle.optimality_conditions_check(1.0, 0.2, 128) < 1e-8
