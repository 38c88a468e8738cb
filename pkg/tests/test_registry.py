import pytest

from src.base.core.exceptions import SystemDefinitionError, UnknownBuiltinError
from src.domain.symbolic.fields import VectorField
from src.domain.symbolic.parser import parse
from src.domain.symbolic.registry import available, builtin


@pytest.mark.parametrize("entry", available(), ids=lambda e: e.name)
def test_every_builtin_builds(entry):
    system = entry.factory()
    assert system.n_fields >= 1
    assert system.domain.dim == system.dim


def test_parameters_reach_the_factory():
    system = builtin("grushin", k=3)
    assert system.fields[1] == VectorField.shear(parse("x1^3", 2), 2)
    assert builtin("euclidean", k=3).dim == 3
    assert builtin("euclidean", periodic=True).domain.periodic == (True, True)


def test_unknown_builtin():
    with pytest.raises(UnknownBuiltinError):
        builtin("heisenberg7")


@pytest.mark.parametrize(
    "name, params",
    [
        ("grushin", {"k": 0}),
        ("grushin", {"order": 2}),
        ("poly_omega", {"omega": "x2"}),
        ("poly_omega", {"omega": "0"}),
        ("poly_omega", {"omega": "sin(x1)"}),
        ("product_omega", {"n": 2, "m": 2}),
    ],
)
def test_invalid_parameters(name, params):
    with pytest.raises(SystemDefinitionError):
        builtin(name, **params)
