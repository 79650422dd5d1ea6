from pydantic import BaseModel, Extra, Field, validator, root_validator
from typing import Dict, List, Optional, Tuple, Any
from enum import Enum
import math
import numpy as np

from gaussian_phase.config import settings

class Scheme(str, Enum):
    POVM = "povm"
    HOMODYNE = "homodyne"

class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"

class Estimator(str, Enum):
    APPROXIMATE = "approximate"
    EXACT = "exact"

class GeneratorKind(str, Enum):
    SQUEEZE = "squeeze"
    DISPLACE = "displace"
    ROTATE = "rotate"

class DyneRegime(str, Enum):
    BELOW_THRESHOLD = "below_threshold"
    ABOVE_THRESHOLD = "above_threshold"


def _require_finite(v: float) -> float:
    if not math.isfinite(v):
        raise ValueError("value must be finite")
    return v


# Gaussian states and covariances

class GaussianPureState(BaseModel):
    """U(theta) D(alpha) S(r)|0>, squeezed along Q for r > 0."""
    alpha: float = Field(0.0, ge=0)
    r: float = 0.0
    theta: float = 0.0

    _finite = validator('alpha', 'r', 'theta', allow_reuse=True)(_require_finite)

    class Config:
        allow_mutation = False

    @property
    def s(self) -> float:
        return math.exp(-self.r)

    @property
    def is_squeezed_vacuum(self) -> bool:
        return self.alpha == 0.0

    def rotated(self, delta: float) -> "GaussianPureState":
        return self.copy(update={"theta": self.theta + delta})


class CovarianceMatrix(BaseModel):
    """Symmetric 2x2 matrix; only the upper triangle is stored."""
    m11: float
    m12: float
    m22: float

    class Config:
        allow_mutation = False

    @classmethod
    def from_array(cls, matrix: np.ndarray, tol: float = 1e-12) -> "CovarianceMatrix":
        matrix = np.asarray(matrix, dtype=float)
        if matrix.shape != (2, 2):
            raise ValueError(f"expected a 2x2 matrix, got shape {matrix.shape}")
        scale = max(1.0, float(np.max(np.abs(matrix))))
        if abs(matrix[0, 1] - matrix[1, 0]) > tol * scale:
            raise ValueError("matrix is not symmetric")
        return cls(
            m11=float(matrix[0, 0]),
            m12=float(0.5 * (matrix[0, 1] + matrix[1, 0])),
            m22=float(matrix[1, 1]),
        )

    @property
    def m21(self) -> float:
        return self.m12

    def as_array(self) -> np.ndarray:
        return np.array([[self.m11, self.m12], [self.m12, self.m22]])

    @property
    def determinant(self) -> float:
        return self.m11 * self.m22 - self.m12 * self.m12

    def inverse(self) -> "CovarianceMatrix":
        det = self.determinant
        if det == 0.0:
            raise ValueError("matrix is singular")
        return CovarianceMatrix(m11=self.m22 / det, m12=-self.m12 / det, m22=self.m11 / det)

    def quadrature_variances(self) -> Tuple[float, float]:
        """Variances of Q and P; the vacuum has 1/2 each."""
        return self.m11 / 2.0, self.m22 / 2.0

    def is_positive_definite(self) -> bool:
        return self.m11 > 0 and self.determinant > 0

    def is_pure(self, tol: float = 1e-12) -> bool:
        return self.is_positive_definite() and abs(self.determinant - 1.0) <= tol


class QfiScanPoint(BaseModel):
    displacement_fraction: float = Field(..., ge=0, le=1)
    qfi: float = Field(..., ge=0)


# Truncated Fock space

class TruncatedState(BaseModel):
    amplitudes: np.ndarray
    leakage: float = 0.0

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False

    @validator('amplitudes', pre=True)
    def as_complex_vector(cls, v):
        v = np.asarray(v, dtype=complex)
        if v.ndim != 1:
            raise ValueError("amplitudes must be a vector")
        return v

    @validator('leakage')
    def leakage_non_negative(cls, v):
        if v < -1e-12:
            raise ValueError(f"negative leakage {v}")
        return v

    @property
    def dim(self) -> int:
        return int(self.amplitudes.shape[0])

    @property
    def norm_squared(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def overlap(self, other: "TruncatedState") -> complex:
        """<self|other>"""
        return complex(np.vdot(self.amplitudes, other.amplitudes))


class Generator(BaseModel):
    kind: GeneratorKind
    value: float

    _finite = validator('value', allow_reuse=True)(_require_finite)

    @classmethod
    def squeeze(cls, r: float) -> "Generator":
        return cls(kind=GeneratorKind.SQUEEZE, value=r)

    @classmethod
    def displace(cls, alpha: float) -> "Generator":
        return cls(kind=GeneratorKind.DISPLACE, value=alpha)

    @classmethod
    def rotate(cls, theta: float) -> "Generator":
        return cls(kind=GeneratorKind.ROTATE, value=theta)


class OutcomeProbabilities(BaseModel):
    p_plus: float = Field(..., ge=0, le=1)
    p_minus: float = Field(..., ge=0, le=1)
    p_zero: float = Field(..., ge=0, le=1)

    @root_validator(skip_on_failure=True)
    def check_normalization(cls, values):
        total = values['p_plus'] + values['p_minus'] + values['p_zero']
        if not (1.0 - 1e-6 <= total <= 1.0 + 1e-12):
            raise ValueError(f"outcome probabilities sum to {total}")
        return values

    @property
    def total(self) -> float:
        return self.p_plus + self.p_minus + self.p_zero

    @property
    def p_informative(self) -> float:
        return self.p_plus + self.p_minus

    def as_array(self) -> np.ndarray:
        return np.array([self.p_plus, self.p_minus, self.p_zero])


class ThreeOutcomeCounts(BaseModel):
    n_plus: int = Field(..., ge=0)
    n_minus: int = Field(..., ge=0)
    n_zero: int = Field(..., ge=0)

    @property
    def copies(self) -> int:
        return self.n_plus + self.n_minus + self.n_zero

    @property
    def n_informative(self) -> int:
        return self.n_plus + self.n_minus


class MleResult(BaseModel):
    theta_hat: float
    log_likelihood: float
    degenerate: bool = False


# Dyne and homodyne measurements

class DyneConfig(BaseModel):
    """Ancilla entering the auxiliary port: squeezing r' and phase theta'."""
    r_prime: float = 0.0
    theta_prime: float = 0.0

    _finite = validator('r_prime', 'theta_prime', allow_reuse=True)(_require_finite)

    class Config:
        allow_mutation = False

    @property
    def t(self) -> float:
        return math.exp(-self.r_prime)


class HomodyneBatch(BaseModel):
    quadrature_angle: float
    outcomes: np.ndarray
    sum_of_squares: float

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False

    @validator('outcomes', pre=True)
    def as_real_vector(cls, v):
        v = np.asarray(v, dtype=float)
        if v.ndim != 1:
            raise ValueError("outcomes must be a vector")
        if not np.all(np.isfinite(v)):
            raise ValueError("outcomes must be finite")
        return v

    @root_validator(skip_on_failure=True)
    def check_sufficient_statistic(cls, values):
        recomputed = float(np.dot(values['outcomes'], values['outcomes']))
        if abs(recomputed - values['sum_of_squares']) > 1e-10 * max(1.0, recomputed):
            raise ValueError("sum_of_squares does not match the outcomes")
        return values

    @classmethod
    def from_outcomes(cls, quadrature_angle: float, outcomes: np.ndarray) -> "HomodyneBatch":
        outcomes = np.asarray(outcomes, dtype=float)
        return cls(
            quadrature_angle=quadrature_angle,
            outcomes=outcomes,
            sum_of_squares=float(np.dot(outcomes, outcomes)),
        )

    @property
    def copies(self) -> int:
        return int(self.outcomes.shape[0])

    @property
    def mean_square(self) -> float:
        return self.sum_of_squares / self.copies


# Experiments

def rough_copy_count(total_copies: int, split_exponent: float) -> int:
    """ceil(N**alpha), guarded against round-off on exact powers."""
    return int(math.ceil(total_copies ** split_exponent - 1e-9))


class ExperimentConfig(BaseModel):
    scheme: Scheme
    r: float = Field(..., gt=0)
    theta_true: float
    total_copies: int = Field(..., ge=4)
    split_exponent: float = Field(settings.SPLIT_EXPONENT, gt=0.5, lt=1.0)
    trials: int = Field(..., ge=1)
    seed: int = Field(..., ge=0, le=2**64 - 1)
    truncation_dim: int = settings.TRUNCATION_DIM
    output_path: str = settings.OUTPUT_PATH
    output_format: OutputFormat = OutputFormat.CSV
    estimator: Estimator = Estimator.APPROXIMATE
    lo_sign: int = -1

    _finite = validator('r', 'theta_true', allow_reuse=True)(_require_finite)

    class Config:
        extra = Extra.forbid

    @validator('truncation_dim')
    def validate_truncation_dim(cls, v):
        if v % 2:
            raise ValueError('truncation_dim must be even')
        if not settings.MIN_TRUNCATION_DIM <= v <= settings.MAX_TRUNCATION_DIM:
            raise ValueError(
                f'truncation_dim must lie in [{settings.MIN_TRUNCATION_DIM}, '
                f'{settings.MAX_TRUNCATION_DIM}]'
            )
        return v

    @validator('lo_sign')
    def validate_lo_sign(cls, v):
        if v not in (-1, 1):
            raise ValueError('lo_sign must be -1 or +1')
        return v

    @root_validator(skip_on_failure=True)
    def validate_copy_split(cls, values):
        rough = rough_copy_count(values['total_copies'], values['split_exponent'])
        if rough >= values['total_copies']:
            raise ValueError(
                f"rough step uses {rough} of {values['total_copies']} copies; "
                "nothing left for the second step"
            )
        return values

    @property
    def rough_copies(self) -> int:
        return rough_copy_count(self.total_copies, self.split_exponent)

    @property
    def informative_budget(self) -> int:
        """Copies left for the second step."""
        return self.total_copies - self.rough_copies

    def signal_state(self) -> GaussianPureState:
        return GaussianPureState(alpha=0.0, r=self.r, theta=self.theta_true)


CSV_COLUMNS = ("trial", "theta_rough", "theta_hat", "wrapped_error", "squared_error", "branch_flipped")
CSV_HEADER = ",".join(CSV_COLUMNS)

class EstimationRecord(BaseModel):
    trial_index: int = Field(..., ge=0)
    theta_rough: float
    theta_hat: float
    wrapped_error: float = Field(..., gt=-math.pi / 2, le=math.pi / 2)
    squared_error: float = Field(..., ge=0)
    statistic: Dict[str, float] = Field(default_factory=dict)
    branch_flipped: bool = False

    @root_validator(skip_on_failure=True)
    def check_squared_error(cls, values):
        if not math.isclose(values['squared_error'], values['wrapped_error'] ** 2,
                            rel_tol=1e-12, abs_tol=1e-300):
            raise ValueError("squared_error must equal wrapped_error**2")
        return values

    def csv_values(self) -> List[Any]:
        """One CSV row, in CSV_COLUMNS order."""
        return [
            self.trial_index,
            float(self.theta_rough),
            float(self.theta_hat),
            float(self.wrapped_error),
            float(self.squared_error),
            int(self.branch_flipped),
        ]


class SweepRow(BaseModel):
    total_copies: int
    trials: int
    mean_bias: float
    variance: float
    mse: float = Field(..., ge=0)
    mse_standard_error: float = Field(..., ge=0)
    n_times_mse: float
    heisenberg_reference: float
    normalized_mse: float
    branch_flip_rate: float = Field(0.0, ge=0, le=1)


class SweepResult(BaseModel):
    scheme: Scheme
    rows: List[SweepRow]
    config: Dict[str, Any]
    version: str = settings.APP_VERSION
