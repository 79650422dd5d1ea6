from pydantic import BaseSettings
from functools import lru_cache
import os

class Settings(BaseSettings):
    # Truncated Fock space
    TRUNCATION_DIM: int = int(os.getenv("TRUNCATION_DIM", "128"))
    MIN_TRUNCATION_DIM: int = 16
    MAX_TRUNCATION_DIM: int = 512
    EXPM_PADDING: int = 128  # extra levels while exponentiating generators
    LEAKAGE_TOLERANCE: float = 1e-6
    MOMENT_LEAKAGE_TOLERANCE: float = 1e-8

    # Numerical tolerances
    ARCCOS_CLAMP_TOL: float = 1e-12
    FISHER_STEP: float = 1e-5
    SLOPE_STEP: float = 1e-4
    FISHER_GAMMA_RTOL: float = 1e-9
    FISHER_NUMERIC_RTOL: float = 1e-6
    ORACLE_TOL: float = 1e-6
    OPTIMALITY_TOL: float = 1e-8

    # Exact likelihood maximization
    MLE_WINDOW: float = 0.5
    MLE_GRID_POINTS: int = 101
    MLE_XTOL: float = 1e-10

    # Experiment defaults
    SPLIT_EXPONENT: float = 2.0 / 3.0
    WORKERS: int = int(os.getenv("WORKERS", str(os.cpu_count() or 1)))
    OUTPUT_PATH: str = "results/trials.csv"

    # Application settings
    APP_NAME: str = "Gaussian Phase Estimation"
    APP_VERSION: str = "1.0.0"
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")

    class Config:
        env_file = ".env"
        case_sensitive = True

@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance."""
    return Settings()

settings = get_settings()
