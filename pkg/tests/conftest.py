import pytest

from src.base.config.settings import Settings, get_settings
from src.base.core.lifespan import build_services
from src.domain.numerics.grid import GridSpec
from src.domain.symbolic.registry import builtin


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    """Tests see the built-in defaults, never a developer's HORMANDER_* or Splunk setup."""
    import os

    for name in list(os.environ):
        if name.startswith(("HORMANDER_", "SPLUNK_")):
            monkeypatch.delenv(name, raising=False)
    monkeypatch.setenv("ENVIRONMENT", "development")


@pytest.fixture
def settings() -> Settings:
    return get_settings()


@pytest.fixture
def services(settings):
    return build_services(settings)


@pytest.fixture
def euclid():
    return builtin("euclidean")


@pytest.fixture
def euclid_torus():
    return builtin("euclidean", periodic=True)


@pytest.fixture
def grushin():
    return builtin("grushin")


@pytest.fixture
def torus_grid(euclid_torus):
    return GridSpec.for_system(euclid_torus, 32)
