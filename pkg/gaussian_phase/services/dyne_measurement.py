"""Covariant Gaussian (dyne) measurements of a squeezed vacuum.

The signal gamma_theta = R^t(theta) S R(theta) is mixed with an ancilla
gamma_0 = R^t(theta') T R(theta'), T = diag(t^2, 1/t^2), t = exp(-r').
Outcomes chi = (q, p) have density sqrt(det M)/pi * exp(-chi^t M chi) with
M = (gamma_0 + gamma_theta)^-1. Everything depends on the angles only
through phi = 2(theta' - theta).
"""
import logging
import math
from typing import Optional, Tuple

import numpy as np
from scipy import integrate

from gaussian_phase.config import settings
from gaussian_phase.exceptions import InvalidParameterError, RegimeError
from gaussian_phase.schemas import (
    CovarianceMatrix, DyneConfig, DyneRegime, GaussianPureState
)
from gaussian_phase.services.gaussian_core import rotated_covariance

# Configure logging
logger = logging.getLogger(__name__)

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]])
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]])


def clamped_arccos(x: float, tol: Optional[float] = None) -> float:
    """arccos with a rounding window around [-1, 1]; larger excursions raise."""
    tol = settings.ARCCOS_CLAMP_TOL if tol is None else tol
    if abs(x) > 1.0 + tol:
        raise InvalidParameterError(f"arccos argument {x!r} lies outside [-1, 1]")
    if abs(x) > 1.0:
        logger.debug(f"Clamping arccos argument {x!r}")
        x = math.copysign(1.0, x)
    return math.acos(x)


def _require_vacuum_signal(state: GaussianPureState) -> None:
    if not state.is_squeezed_vacuum:
        raise InvalidParameterError("Dyne outcome statistics are implemented for alpha = 0 only")


def _require_s(s: float) -> None:
    if not 0.0 < s <= 1.0:
        raise InvalidParameterError(f"s = exp(-r) must lie in (0, 1], got {s}")


def _summed_covariance(state: GaussianPureState, dyne: DyneConfig) -> np.ndarray:
    return rotated_covariance(dyne.r_prime, dyne.theta_prime) + rotated_covariance(state.r, state.theta)


def precision_matrix(state: GaussianPureState, dyne: DyneConfig) -> CovarianceMatrix:
    """M = (gamma_0 + gamma_theta)^-1."""
    return CovarianceMatrix.from_array(_summed_covariance(state, dyne)).inverse()


def outcome_density(chi: Tuple[float, float], state: GaussianPureState,
                    dyne: DyneConfig) -> float:
    _require_vacuum_signal(state)
    precision = precision_matrix(state, dyne)
    vector = np.asarray(chi, dtype=float)
    exponent = float(vector @ precision.as_array() @ vector)
    return math.sqrt(precision.determinant) / math.pi * math.exp(-exponent)


def sample_dyne(state: GaussianPureState, dyne: DyneConfig, rng: np.random.Generator,
                size: Optional[int] = None):
    """Draw (q, p) outcomes; with `size` an array of shape (size, 2)."""
    _require_vacuum_signal(state)
    covariance = 0.5 * _summed_covariance(state, dyne)
    draws = rng.multivariate_normal(np.zeros(2), covariance, size=size)
    if size is None:
        return float(draws[0]), float(draws[1])
    return draws


def _precision_and_derivative(state: GaussianPureState, dyne: DyneConfig,
                              step: float) -> Tuple[np.ndarray, np.ndarray]:
    ahead = precision_matrix(state.rotated(step), dyne).as_array()
    behind = precision_matrix(state.rotated(-step), dyne).as_array()
    return precision_matrix(state, dyne).as_array(), (ahead - behind) / (2.0 * step)


def fisher_numeric(state: GaussianPureState, dyne: DyneConfig,
                   step: Optional[float] = None) -> float:
    """F = tr[M' M^-1 M' M^-1] / 2 with M' from central differences in theta."""
    _require_vacuum_signal(state)
    step = settings.FISHER_STEP if step is None else step
    _, derivative = _precision_and_derivative(state, dyne, step)
    covariance = _summed_covariance(state, dyne)
    product = derivative @ covariance
    return 0.5 * float(np.trace(product @ product))


def fisher_gamma_form(r: float, r_prime: float, phi: float) -> float:
    """F = tr[Gamma^-1 Sigma Gamma^-1 Sigma] / 2 in the Pauli decomposition."""
    gamma = (
        (math.cosh(2 * r) + math.cosh(2 * r_prime)) * np.eye(2)
        - (math.sinh(2 * r) + math.sinh(2 * r_prime) * math.cos(phi)) * PAULI_Z
        + math.sinh(2 * r_prime) * math.sin(phi) * PAULI_X
    )
    sigma = 2.0 * math.sinh(2 * r) * PAULI_X
    product = np.linalg.solve(gamma, sigma)
    return 0.5 * float(np.trace(product @ product))


def fisher_closed(r: float, r_prime: float, phi: float) -> float:
    sh, ch = math.sinh(2 * r), math.cosh(2 * r)
    sh_p, ch_p = math.sinh(2 * r_prime), math.cosh(2 * r_prime)
    base = ch * ch_p - sh * sh_p * math.cos(phi) + 1.0
    return 2.0 * sh * sh * (base + (sh_p * math.sin(phi)) ** 2) / (base * base)


def threshold(s: float) -> float:
    """Ancilla squeezing t_thr(s) at which phi = 0 turns from maximum to minimum.

    Equals exp(-r*) with sinh(2r*) = sinh(2r)/2, so it never exceeds 1.
    """
    _require_s(s)
    s4 = s ** 4
    return math.sqrt(s4 - 1.0 + math.sqrt(s4 * s4 + 14.0 * s4 + 1.0)) / (2.0 * s)


def dyne_regime(r: float, r_prime: float) -> DyneRegime:
    """Below threshold the ancilla is too weakly squeezed for an interior optimum.

    F(r, -r', phi + pi) = F(r, r', phi), so only |r'| matters.
    """
    if math.exp(-abs(r_prime)) > threshold(math.exp(-r)):
        return DyneRegime.BELOW_THRESHOLD
    return DyneRegime.ABOVE_THRESHOLD


def fisher_curvature_at_zero(r: float, r_prime: float) -> float:
    """Analytic d^2 F / d phi^2 at phi = 0."""
    sh, sh_p = math.sinh(2 * r), math.sinh(2 * r_prime)
    base = math.cosh(2.0 * (r - r_prime)) + 1.0
    return 4.0 * sh * sh * sh_p * (sh_p - 0.5 * sh) / (base * base)


def optimal_angle(r: float, r_prime: float) -> float:
    """phi_0 >= 0 maximizing F above threshold; the maxima sit at +/- phi_0."""
    if r <= 0:
        raise InvalidParameterError(f"Optimal angle needs a squeezed signal, got r={r}")
    if dyne_regime(r, r_prime) == DyneRegime.BELOW_THRESHOLD:
        raise RegimeError(
            f"No interior optimum below threshold (r={r}, r'={r_prime}); use phi = 0 or pi"
        )
    numerator = 2.0 * math.cosh(4 * r_prime) * math.sinh(2 * r) + math.cosh(2 * r_prime) * math.sinh(4 * r)
    denominator = (
        (3.0 + math.cosh(4 * r)) * math.sinh(2 * r_prime)
        + 2.0 * math.cosh(2 * r) * math.sinh(4 * r_prime)
    )
    return clamped_arccos(numerator / denominator)


def fisher_below_threshold_max(r: float, r_prime: float) -> float:
    """sinh^2(2r) / cosh^2(r - r'), i.e. F at phi = 0."""
    if dyne_regime(r, r_prime) != DyneRegime.BELOW_THRESHOLD:
        logger.warning(f"r'={r_prime} is above threshold for r={r}; phi = 0 is not the maximum")
    elif r_prime < 0:
        logger.warning(f"r'={r_prime} < 0: the below-threshold maximum sits at phi = pi")
    return math.sinh(2 * r) ** 2 / math.cosh(r - r_prime) ** 2


def fisher_below_threshold_max_t_form(s: float, t: float) -> float:
    _require_s(s)
    if t <= 0:
        raise InvalidParameterError(f"t must be positive, got {t}")
    return t * t * (1.0 - s ** 4) ** 2 / (s * s * (s * s + t * t) ** 2)


def fisher_at_optimum(r: float, r_prime: float) -> float:
    if dyne_regime(r, r_prime) == DyneRegime.BELOW_THRESHOLD:
        raise RegimeError(f"r'={r_prime} is below threshold for r={r}; no interior optimum")
    ch, ch_p = math.cosh(2 * r), math.cosh(2 * r_prime)
    numerator = 3.0 + math.cosh(4 * r) + 8.0 * ch * ch_p + 4.0 * math.cosh(4 * r_prime)
    return math.sinh(2 * r) ** 2 * numerator / (4.0 * (ch + ch_p) ** 2)


def limiting_angle(s: float) -> float:
    """Phi(s) = arccos((s^4 - 1)/(s^4 + 1)), the optimal angle for an infinitely squeezed ancilla."""
    _require_s(s)
    s4 = s ** 4
    return clamped_arccos((s4 - 1.0) / (s4 + 1.0))


def limiting_fisher(s: float) -> float:
    """(1 - s^4)^2 / (2 s^4) = cosh(4r) - 1."""
    _require_s(s)
    return (1.0 - s ** 4) ** 2 / (2.0 * s ** 4)


def best_dyne_fisher(r: float, r_prime: float) -> Tuple[float, float]:
    """(phi, F) at the best local-oscillator angle for this ancilla."""
    if dyne_regime(r, r_prime) == DyneRegime.BELOW_THRESHOLD:
        phi = 0.0 if r_prime >= 0 else math.pi
        return phi, fisher_closed(r, r_prime, phi)
    return optimal_angle(r, r_prime), fisher_at_optimum(r, r_prime)


def marginal_integral_check(r_prime: float, dq: float) -> Tuple[float, float]:
    """Overlap integral of two displaced ancilla wave functions, numeric and closed form."""
    k = math.exp(2.0 * r_prime)
    norm = math.exp(0.5 * r_prime) / math.pi ** 0.25
    q_one, q_two = 0.5 * dq, -0.5 * dq

    def integrand(q: float) -> float:
        return norm * norm * math.exp(-0.5 * k * ((q_one - q) ** 2 + (q_two - q) ** 2))

    reach = abs(dq) + 12.0 / math.sqrt(k)
    numeric, _ = integrate.quad(integrand, -reach, reach, epsabs=1e-13, epsrel=1e-12, limit=200)
    closed = math.exp(-0.25 * k * dq * dq)
    if abs(numeric - closed) > 1e-8:
        logger.warning(f"Marginal integral mismatch at r'={r_prime}, dq={dq}: {numeric} vs {closed}")
    return numeric, closed


def integrate_density(state: GaussianPureState, dyne: DyneConfig) -> float:
    """2D quadrature of the outcome density over a +/-8 sigma box."""
    covariance = 0.5 * _summed_covariance(state, dyne)
    reach = 8.0 * math.sqrt(float(np.max(np.linalg.eigvalsh(covariance))))
    total, error = integrate.dblquad(
        lambda p, q: outcome_density((q, p), state, dyne),
        -reach, reach, -reach, reach,
        epsabs=1e-12, epsrel=1e-10,
    )
    logger.debug(f"Density integral {total} (quadrature error {error:.2e})")
    return total


def empirical_fisher(samples: np.ndarray, state: GaussianPureState, dyne: DyneConfig,
                     step: Optional[float] = None) -> Tuple[float, float]:
    """Mean squared score over the samples, with its standard error."""
    _require_vacuum_signal(state)
    samples = np.atleast_2d(np.asarray(samples, dtype=float))
    if samples.shape[0] < 2 or samples.shape[1] != 2:
        raise InvalidParameterError(f"Need at least two (q, p) samples, got shape {samples.shape}")
    step = settings.FISHER_STEP if step is None else step

    _, derivative = _precision_and_derivative(state, dyne, step)
    covariance = _summed_covariance(state, dyne)
    score = (
        0.5 * float(np.trace(covariance @ derivative))
        - np.einsum('ni,ij,nj->n', samples, derivative, samples)
    )
    squared = score ** 2
    return float(squared.mean()), float(squared.std(ddof=1) / math.sqrt(len(squared)))
