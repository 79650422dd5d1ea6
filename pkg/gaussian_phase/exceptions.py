"""
Error hierarchy shared by the services and the command line.

Every error carries a human-readable ``detail`` and the process ``exit_code``
the CLI reports for it.
"""


class PhaseEstimationError(Exception):
    exit_code: int = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class InvalidParameterError(PhaseEstimationError):
    """Input outside the domain of an operation."""
    exit_code = 1


class RegimeError(InvalidParameterError):
    """Closed form requested outside the squeezing regime where it holds."""


class TruncationError(InvalidParameterError):
    """Probability weight lost beyond the Fock cutoff exceeds tolerance."""

    def __init__(self, leakage: float, tolerance: float, dim: int):
        super().__init__(
            f"Truncation leakage {leakage:.3e} exceeds tolerance {tolerance:.1e} "
            f"at D={dim}; increase the truncation dimension"
        )
        self.leakage = leakage
        self.tolerance = tolerance
        self.dim = dim


class NoInformativeOutcomesError(InvalidParameterError):
    """No informative outcomes; the conditional MSE is the squared rough error."""


class ToleranceError(PhaseEstimationError):
    exit_code = 2


class ResultIOError(PhaseEstimationError):
    exit_code = 3
