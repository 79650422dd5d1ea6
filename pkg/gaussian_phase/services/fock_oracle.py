import logging
import math
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from scipy.linalg import expm
from scipy.special import gammaln

from gaussian_phase.config import settings
from gaussian_phase.exceptions import InvalidParameterError, TruncationError
from gaussian_phase.schemas import (
    Generator, GeneratorKind, OutcomeProbabilities, TruncatedState
)

# Configure logging
logger = logging.getLogger(__name__)

PROBABILITY_FLOOR = 1e-12
# p0 below this is the squared norm of rounding residue
RESIDUAL_FLOOR = 1e-20


def validate_dim(dim: int) -> int:
    if dim % 2 or not settings.MIN_TRUNCATION_DIM <= dim <= settings.MAX_TRUNCATION_DIM:
        raise InvalidParameterError(
            f"Truncation dimension must be even and within "
            f"[{settings.MIN_TRUNCATION_DIM}, {settings.MAX_TRUNCATION_DIM}], got {dim}"
        )
    return dim


def _check_leakage(leakage: float, tolerance: float, dim: int) -> None:
    if leakage > tolerance:
        logger.error(f"Leakage {leakage:.3e} above {tolerance:.1e} at D={dim}")
        raise TruncationError(leakage, tolerance, dim)


def _annihilation(dim: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), k=1)


def _rotation_phases(theta, dim: int) -> np.ndarray:
    """exp(-i n theta); a vector of angles gives one row per angle."""
    n = np.arange(dim)
    return np.exp(-1j * np.multiply.outer(theta, n))


@lru_cache(maxsize=32)
def _generator_unitary(kind: GeneratorKind, value: float, work_dim: int) -> np.ndarray:
    a = _annihilation(work_dim)
    if kind == GeneratorKind.SQUEEZE:
        generator = 0.5 * value * (a @ a - a.T @ a.T)
    elif kind == GeneratorKind.DISPLACE:
        generator = value * (a.T - a)
    else:
        raise InvalidParameterError(f"No dense exponential needed for {kind.value}")
    unitary = expm(generator)
    unitary.setflags(write=False)
    return unitary


@lru_cache(maxsize=32)
def _closed_form_squeezed(r: float, dim: int) -> Tuple[np.ndarray, float]:
    n = np.arange(dim // 2)
    log_magnitude = 0.5 * gammaln(2 * n + 1) - n * math.log(2.0) - gammaln(n + 1)
    amplitudes = np.zeros(dim, dtype=complex)
    amplitudes[0::2] = np.power(-math.tanh(r), n) * np.exp(log_magnitude) / math.sqrt(math.cosh(r))
    amplitudes.setflags(write=False)
    leakage = 1.0 - float(np.vdot(amplitudes, amplitudes).real)
    return amplitudes, leakage


class FockOracle:
    def __init__(self, padding: int = settings.EXPM_PADDING):
        """Dense truncated-Fock oracle; generators are exponentiated on D + padding levels."""
        self.padding = padding

    # Constructors

    def vacuum(self, dim: int) -> TruncatedState:
        return self.fock_state(0, dim)

    def fock_state(self, n: int, dim: int) -> TruncatedState:
        validate_dim(dim)
        if not 0 <= n < dim:
            raise InvalidParameterError(f"Fock level {n} outside truncation D={dim}")
        amplitudes = np.zeros(dim, dtype=complex)
        amplitudes[n] = 1.0
        return TruncatedState(amplitudes=amplitudes, leakage=0.0)

    def squeeze_vacuum(self, r: float, dim: int,
                       tolerance: Optional[float] = None) -> TruncatedState:
        """S(r)|0> from the even-photon expansion."""
        validate_dim(dim)
        tolerance = settings.LEAKAGE_TOLERANCE if tolerance is None else tolerance
        amplitudes, leakage = _closed_form_squeezed(float(r), dim)
        _check_leakage(leakage, tolerance, dim)
        return TruncatedState(amplitudes=amplitudes.copy(), leakage=leakage)

    def apply_generator_exponential(self, state: TruncatedState, generator: Generator,
                                    tolerance: Optional[float] = None) -> TruncatedState:
        tolerance = settings.LEAKAGE_TOLERANCE if tolerance is None else tolerance
        dim = state.dim
        if abs(state.norm_squared + state.leakage - 1.0) > 1e-8:
            raise InvalidParameterError(
                f"Input state is not normalized: norm^2={state.norm_squared:.12f}, "
                f"leakage={state.leakage:.3e}"
            )

        if generator.kind == GeneratorKind.ROTATE:
            amplitudes = state.amplitudes * _rotation_phases(generator.value, dim)
            return TruncatedState(amplitudes=amplitudes, leakage=state.leakage)

        work_dim = dim + self.padding
        unitary = _generator_unitary(generator.kind, float(generator.value), work_dim)
        padded = np.zeros(work_dim, dtype=complex)
        padded[:dim] = state.amplitudes
        amplitudes = (unitary @ padded)[:dim]
        leakage = 1.0 - float(np.vdot(amplitudes, amplitudes).real)
        _check_leakage(leakage, tolerance, dim)
        logger.debug(f"Applied {generator.kind.value}({generator.value}) at D={dim}, leakage={leakage:.3e}")
        return TruncatedState(amplitudes=amplitudes, leakage=leakage)

    def number_operator_moments(self, state: TruncatedState) -> Tuple[float, float]:
        """Mean and variance of a^dagger a."""
        _check_leakage(state.leakage, settings.MOMENT_LEAKAGE_TOLERANCE, state.dim)
        weights = np.abs(state.amplitudes) ** 2
        weights = weights / weights.sum()
        n = np.arange(state.dim)
        mean = float(weights @ n)
        variance = float(weights @ (n - mean) ** 2)
        return mean, variance

    # Signal state and SLD

    def _signal_vector(self, r: float, theta: float, dim: int) -> Tuple[np.ndarray, float]:
        """Normalized U(theta)S(r)|0> and its leakage."""
        squeezed = self.squeeze_vacuum(r, dim)
        vector = squeezed.amplitudes * _rotation_phases(theta, dim)
        return vector / math.sqrt(squeezed.norm_squared), squeezed.leakage

    def psi_vector(self, r: float, theta: float, dim: int) -> TruncatedState:
        """(1 - |phi0><phi0|) G |phi0>, left unnormalized."""
        phi0, leakage = self._signal_vector(r, theta, dim)
        generated = np.arange(dim) * phi0
        psi = generated - phi0 * np.vdot(phi0, generated)
        return TruncatedState(amplitudes=psi, leakage=leakage)

    def _sld_operator(self, r: float, theta: float, dim: int) -> Tuple[np.ndarray, np.ndarray]:
        phi0, _ = self._signal_vector(r, theta, dim)
        psi = self.psi_vector(r, theta, dim).amplitudes
        sld = 2j * (np.outer(phi0, psi.conj()) - np.outer(psi, phi0.conj()))
        return sld, phi0

    def sld_eigenvalues(self, r: float, theta: float, dim: int) -> Tuple[float, float]:
        """Smallest and largest eigenvalue of the SLD."""
        sld, _ = self._sld_operator(r, theta, dim)
        eigenvalues = np.linalg.eigvalsh(sld)
        return float(eigenvalues[0]), float(eigenvalues[-1])

    def _sld_frame(self, r: float, dim: int):
        """S(r)|0> (raw) and the normalized SLD eigenvectors before rotation."""
        validate_dim(dim)
        unitary = _generator_unitary(GeneratorKind.SQUEEZE, float(r), dim + self.padding)
        squeezed_0 = unitary[:dim, 0]
        squeezed_2 = unitary[:dim, 2]
        norm_0 = float(np.vdot(squeezed_0, squeezed_0).real)
        norm_2 = float(np.vdot(squeezed_2, squeezed_2).real)
        _check_leakage(max(1.0 - norm_0, 1.0 - norm_2), settings.LEAKAGE_TOLERANCE, dim)

        unit_0 = squeezed_0 / math.sqrt(norm_0)
        unit_2 = squeezed_2 / math.sqrt(norm_2)
        e_plus = (1j * unit_0 - unit_2) / math.sqrt(2.0)
        e_minus = (-1j * unit_0 - unit_2) / math.sqrt(2.0)
        return squeezed_0, e_plus, e_minus, 1.0 - norm_0

    def sld_povm(self, r: float, theta_guess: float,
                 dim: int) -> Tuple[TruncatedState, TruncatedState]:
        """Projector vectors of E+ and E-; E0 is the complement."""
        _, e_plus, e_minus, leakage = self._sld_frame(r, dim)
        phases = _rotation_phases(theta_guess, dim)
        return (
            TruncatedState(amplitudes=e_plus * phases, leakage=leakage),
            TruncatedState(amplitudes=e_minus * phases, leakage=leakage),
        )

    # Outcome statistics

    def outcome_probability_table(self, r: float, offsets: np.ndarray, dim: int) -> np.ndarray:
        """Rows of (p+, p-, p0) for each offset theta_true - theta_guess."""
        squeezed_0, e_plus, e_minus, _ = self._sld_frame(r, dim)
        states = _rotation_phases(np.atleast_1d(offsets), dim) * squeezed_0
        a_plus = states @ e_plus.conj()
        a_minus = states @ e_minus.conj()
        residual = states - np.outer(a_plus, e_plus) - np.outer(a_minus, e_minus)
        p_zero = np.sum(np.abs(residual) ** 2, axis=1)
        table = np.column_stack([
            np.abs(a_plus) ** 2,
            np.abs(a_minus) ** 2,
            np.where(p_zero < RESIDUAL_FLOOR, 0.0, p_zero),
        ])
        return np.clip(table, 0.0, 1.0)

    def three_outcome_probabilities(self, r: float, theta_true: float, theta_guess: float,
                                    dim: int) -> OutcomeProbabilities:
        p_plus, p_minus, p_zero = self.outcome_probability_table(r, theta_true - theta_guess, dim)[0]
        return OutcomeProbabilities(p_plus=p_plus, p_minus=p_minus, p_zero=p_zero)

    def outcome_probability_slopes(self, r: float, theta_guess: float, dim: int,
                                   step: Optional[float] = None) -> Tuple[float, float]:
        """Central-difference slopes of p+ and p- at theta_true = theta_guess."""
        step = settings.SLOPE_STEP if step is None else step
        table = self.outcome_probability_table(r, np.array([step, -step]), dim)
        slopes = (table[0] - table[1]) / (2.0 * step)
        return float(slopes[0]), float(slopes[1])

    def three_outcome_fisher(self, r: float, theta_true: float, theta_guess: float, dim: int,
                             step: Optional[float] = None) -> float:
        step = settings.SLOPE_STEP if step is None else step
        offset = theta_true - theta_guess
        table = self.outcome_probability_table(r, np.array([offset, offset + step, offset - step]), dim)
        probabilities = table[0]
        derivatives = (table[1] - table[2]) / (2.0 * step)
        informative = probabilities > PROBABILITY_FLOOR
        return float(np.sum(derivatives[informative] ** 2 / probabilities[informative]))

    def optimality_conditions_check(self, r: float, theta: float, dim: int) -> float:
        """Largest violation of Im tr[rho E lambda] = 0 and rho lambda E = k rho E."""
        sld, phi0 = self._sld_operator(r, theta, dim)
        rho = np.outer(phi0, phi0.conj())
        violations = []
        for element in self.sld_povm(r, theta, dim):
            projector = np.outer(element.amplitudes, element.amplitudes.conj())
            violations.append(abs(np.trace(rho @ projector @ sld).imag))

            rho_e = rho @ projector
            rho_sld_e = rho @ sld @ projector
            weight = np.trace(rho_e)
            k = np.trace(rho_sld_e) / weight if abs(weight) > PROBABILITY_FLOOR else 0.0
            violations.append(float(np.max(np.abs(rho_sld_e - k * rho_e))))

        worst = max(violations)
        logger.debug(f"Optimality check r={r}, theta={theta}, D={dim}: max violation {worst:.3e}")
        return worst


_oracle = FockOracle()

def vacuum(dim: int) -> TruncatedState:
    return _oracle.vacuum(dim)

def fock_state(n: int, dim: int) -> TruncatedState:
    return _oracle.fock_state(n, dim)

def squeeze_vacuum(r: float, dim: int, tolerance: Optional[float] = None) -> TruncatedState:
    return _oracle.squeeze_vacuum(r, dim, tolerance)

def apply_generator_exponential(state: TruncatedState, generator: Generator,
                                tolerance: Optional[float] = None) -> TruncatedState:
    return _oracle.apply_generator_exponential(state, generator, tolerance)

def number_operator_moments(state: TruncatedState) -> Tuple[float, float]:
    return _oracle.number_operator_moments(state)

def psi_vector(r: float, theta: float, dim: int) -> TruncatedState:
    return _oracle.psi_vector(r, theta, dim)

def sld_eigenvalues(r: float, theta: float, dim: int) -> Tuple[float, float]:
    return _oracle.sld_eigenvalues(r, theta, dim)

def sld_povm(r: float, theta_guess: float, dim: int) -> Tuple[TruncatedState, TruncatedState]:
    return _oracle.sld_povm(r, theta_guess, dim)

def outcome_probability_table(r: float, offsets: np.ndarray, dim: int) -> np.ndarray:
    return _oracle.outcome_probability_table(r, offsets, dim)

def three_outcome_probabilities(r: float, theta_true: float, theta_guess: float,
                                dim: int) -> OutcomeProbabilities:
    return _oracle.three_outcome_probabilities(r, theta_true, theta_guess, dim)

def outcome_probability_slopes(r: float, theta_guess: float, dim: int,
                               step: Optional[float] = None) -> Tuple[float, float]:
    return _oracle.outcome_probability_slopes(r, theta_guess, dim, step)

def three_outcome_fisher(r: float, theta_true: float, theta_guess: float, dim: int,
                         step: Optional[float] = None) -> float:
    return _oracle.three_outcome_fisher(r, theta_true, theta_guess, dim, step)

def optimality_conditions_check(r: float, theta: float, dim: int) -> float:
    return _oracle.optimality_conditions_check(r, theta, dim)
