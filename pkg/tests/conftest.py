import sys
from pathlib import Path

import numpy as np
import pytest

# Add the project root to the Python path
sys.path.append(str(Path(__file__).parent.parent))

from gaussian_phase.config import Settings
from gaussian_phase.schemas import ExperimentConfig, GaussianPureState, Scheme


@pytest.fixture(scope="function")
def test_settings():
    """Settings with a small truncation for fast oracle runs"""
    return Settings(TRUNCATION_DIM=64, WORKERS=2, LOG_LEVEL="DEBUG")


@pytest.fixture(scope="function")
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="function")
def squeezed_state():
    return GaussianPureState(alpha=0.0, r=1.0, theta=0.3)


@pytest.fixture(scope="function")
def povm_config(tmp_path):
    return ExperimentConfig(
        scheme=Scheme.POVM,
        r=1.0,
        theta_true=0.0,
        total_copies=100_000,
        trials=20,
        seed=12345,
        output_path=str(tmp_path / "povm.csv"),
    )


@pytest.fixture(scope="function")
def homodyne_config(tmp_path):
    return ExperimentConfig(
        scheme=Scheme.HOMODYNE,
        r=1.0,
        theta_true=0.0,
        total_copies=100_000,
        trials=20,
        seed=12345,
        output_path=str(tmp_path / "homodyne.csv"),
    )
