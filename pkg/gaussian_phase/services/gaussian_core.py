import logging
import math
from typing import List

import numpy as np

from gaussian_phase.exceptions import InvalidParameterError
from gaussian_phase.schemas import CovarianceMatrix, GaussianPureState, QfiScanPoint

# Configure logging
logger = logging.getLogger(__name__)

HALF_PI = 0.5 * math.pi


def rotation_matrix(theta: float) -> np.ndarray:
    """R(theta) = [[cos, -sin], [sin, cos]]."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def squeezing_matrix(r: float) -> np.ndarray:
    """diag(s^2, 1/s^2) with s = exp(-r)."""
    return np.diag([math.exp(-2.0 * r), math.exp(2.0 * r)])


def rotated_covariance(r: float, theta: float) -> np.ndarray:
    """R^t(theta) S R(theta) as a plain array."""
    rot = rotation_matrix(theta)
    return rot.T @ squeezing_matrix(r) @ rot


def covariance_of_state(state: GaussianPureState) -> CovarianceMatrix:
    """Covariance matrix of a pure Gaussian state; vacuum maps to the identity."""
    return CovarianceMatrix.from_array(rotated_covariance(state.r, state.theta))


def mean_photon_number(state: GaussianPureState) -> float:
    return state.alpha ** 2 + math.sinh(state.r) ** 2


def qfi(state: GaussianPureState) -> float:
    """Quantum Fisher information for phase shifts generated by a^dagger a.

    Independent of theta; for alpha = 0 it reduces to cosh(4r) - 1.
    """
    r = state.r
    return 4.0 * (
        state.alpha ** 2 * (math.cosh(r) - math.sinh(r)) ** 2
        + 2.0 * math.sinh(r) ** 2 * math.cosh(r) ** 2
    )


def squeezing_for_photons(nbar: float) -> float:
    """Squeezing that puts nbar photons into the vacuum."""
    if nbar < 0:
        raise InvalidParameterError(f"Mean photon number must be non-negative, got {nbar}")
    return math.asinh(math.sqrt(nbar))


def qfi_squeezed_vacuum_from_photons(nbar: float) -> float:
    if nbar < 0:
        raise InvalidParameterError(f"Mean photon number must be non-negative, got {nbar}")
    return 8.0 * (nbar ** 2 + nbar)


def heisenberg_bound(nbar: float, copies: int = 1) -> float:
    """Smallest attainable MSE with `copies` squeezed vacua of nbar photons each."""
    if nbar <= 0:
        raise InvalidParameterError(
            f"Heisenberg bound is undefined for nbar={nbar}; the state carries no phase information"
        )
    if copies < 1:
        raise InvalidParameterError(f"Number of copies must be at least 1, got {copies}")
    return 1.0 / (qfi_squeezed_vacuum_from_photons(nbar) * copies)


def fixed_energy_qfi_scan(nbar: float, grid_points: int = 101) -> List[QfiScanPoint]:
    """Split nbar between displacement (fraction f) and squeezing (1 - f)."""
    if nbar <= 0:
        raise InvalidParameterError(f"Energy budget must be positive, got {nbar}")
    if grid_points < 3:
        raise InvalidParameterError(f"Need at least 3 grid points, got {grid_points}")

    scan = []
    for fraction in np.linspace(0.0, 1.0, grid_points):
        alpha = math.sqrt(fraction * nbar)
        r = squeezing_for_photons((1.0 - fraction) * nbar)
        point = QfiScanPoint(
            displacement_fraction=float(fraction),
            qfi=qfi(GaussianPureState(alpha=alpha, r=r)),
        )
        scan.append(point)

    best = max(scan, key=lambda p: p.qfi)
    logger.debug(f"QFI scan at nbar={nbar}: maximum {best.qfi:.6g} at f={best.displacement_fraction}")
    return scan


def wrap_phase(x):
    """Map a phase difference into (-pi/2, pi/2]; the squeezed vacuum is pi-periodic."""
    wrapped = HALF_PI - np.mod(HALF_PI - np.asarray(x, dtype=float), math.pi)
    wrapped = np.where(wrapped <= -HALF_PI, wrapped + math.pi, wrapped)
    if np.ndim(wrapped) == 0:
        return float(wrapped)
    return wrapped


def wrapped_distance(a: float, b: float) -> float:
    return abs(wrap_phase(a - b))
