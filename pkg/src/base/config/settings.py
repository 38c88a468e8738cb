import os

from src.base.utils.env_utils import env_float, env_int


class Settings:
    """Tool-wide defaults, overridable through HORMANDER_* environment variables"""

    def __init__(self):
        self.log_level = os.getenv("HORMANDER_LOG_LEVEL", "INFO").upper()
        self.max_dim = env_int("HORMANDER_MAX_DIM", 64)
        self.max_depth = env_int("HORMANDER_MAX_DEPTH", 12)
        self.type_r_samples = env_int("HORMANDER_TYPE_R_SAMPLES", 200)
        self.type_r_tol = env_float("HORMANDER_TYPE_R_TOL", 1e-9)
        self.eigen_size_limit = env_int("HORMANDER_EIGEN_SIZE_LIMIT", 4096)
        self.reliability_floor = env_float("HORMANDER_RELIABILITY_FLOOR", 1e-12)
        self.sample_limit = env_int("HORMANDER_SAMPLE_LIMIT", 1500)
        self.mc_block_size = env_int("HORMANDER_MC_BLOCK_SIZE", 65536)
        self.step_check_paths = env_int("HORMANDER_STEP_CHECK_PATHS", 100_000)
        self.workers = env_int("HORMANDER_WORKERS", 1)

    def as_dict(self) -> dict:
        """Snapshot of the effective defaults, embedded in reports."""
        return {
            "max_dim": self.max_dim,
            "max_depth": self.max_depth,
            "type_r_samples": self.type_r_samples,
            "type_r_tol": self.type_r_tol,
            "eigen_size_limit": self.eigen_size_limit,
            "reliability_floor": self.reliability_floor,
            "sample_limit": self.sample_limit,
            "mc_block_size": self.mc_block_size,
            "step_check_paths": self.step_check_paths,
            "workers": self.workers,
        }


def get_settings() -> Settings:
    """Build settings from the current environment."""
    return Settings()
