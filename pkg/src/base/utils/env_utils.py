"""
Environment utilities
"""

import os


def is_local_development() -> bool:
    """
    Check if the tool is running in a local development environment.

    Returns:
        bool: True if running in local development, False otherwise.
    """
    environment = os.getenv("ENVIRONMENT", "").lower()
    return environment == "development"


def env_int(name: str, default: int) -> int:
    """Read an integer environment variable, falling back to `default`."""
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    return int(raw)


def env_float(name: str, default: float) -> float:
    """Read a float environment variable, falling back to `default`."""
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    return float(raw)
