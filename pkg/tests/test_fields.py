import math
from fractions import Fraction

import numpy as np
import pytest

from src.base.core.exceptions import DimensionMismatchError, SystemDefinitionError
from src.domain.symbolic.fields import (
    Box,
    FieldSystem,
    Torus,
    VectorField,
    bracket,
    divergence,
    flow,
    parse_field,
)
from src.domain.symbolic.parser import parse
from src.domain.symbolic.registry import builtin


def test_parse_field_matches_constructors():
    assert parse_field("x1 d2", 2) == VectorField.shear(parse("x1", 2), 2)
    assert parse_field("d1", 2) == VectorField.coordinate(2, 1)
    assert parse_field("-sin(x1) d2 + cos(x1) d3", 3).components[0].is_zero()


@pytest.mark.parametrize("text", ["x1 + x2", "x1 d3", "d1 x2"])
def test_parse_field_rejects_malformed(text):
    with pytest.raises(SystemDefinitionError):
        parse_field(text, 2)


def test_grushin_bracket():
    x1, x2 = builtin("grushin").fields
    assert bracket(x1, x2) == VectorField.coordinate(2, 2)
    assert bracket(x2, x1) == -VectorField.coordinate(2, 2)
    assert bracket(x1, x1).is_zero()


def test_motion_group_bracket():
    t, x = builtin("motion_group").fields
    assert bracket(t, x) == parse_field("-cos(x1) d2 - sin(x1) d3", 3)


def test_divergence():
    assert divergence(parse_field("x2 d1 - x1 d2", 2)).is_zero()
    assert divergence(parse_field("x1 d1", 2)) == parse("1", 2)


def test_system_rejects_non_skew_adjoint_field():
    with pytest.raises(SystemDefinitionError):
        FieldSystem(2, (parse_field("x1 d1", 2),), Box((-1.0, -1.0), (1.0, 1.0)))


def test_torus_requires_periodic_coefficients():
    torus = Torus((Fraction(2), Fraction(2)))
    FieldSystem(2, (VectorField.coordinate(2, 1), parse_field("sin(x1) d2", 2)), torus)
    with pytest.raises(SystemDefinitionError):
        FieldSystem(2, (parse_field("sin(1/2*x1) d2", 2),), torus)
    with pytest.raises(SystemDefinitionError):
        FieldSystem(2, (parse_field("x1 d2", 2),), torus)


def test_dimension_checks():
    with pytest.raises(DimensionMismatchError):
        bracket(VectorField.coordinate(2, 1), VectorField.coordinate(3, 1))
    with pytest.raises(SystemDefinitionError):
        FieldSystem(3, (VectorField.coordinate(2, 1),), Box((0.0, 0.0), (1.0, 1.0)))


def test_shear_flow_is_exact():
    x2 = builtin("grushin").fields[1]
    assert flow(x2, [2.0, 0.0], 3.0) == pytest.approx([2.0, 6.0], abs=0)


def test_runge_kutta_flow_and_invariants():
    a = builtin("affine_planted").fields[0]
    end = flow(a, [1.0, 1.0], 1.0)
    assert end == pytest.approx([math.exp(-0.5), math.exp(0.5)], rel=1e-8)
    # the flow of A preserves x1 * x2, hence the area of coordinate boxes
    assert end[0] * end[1] == pytest.approx(1.0, rel=1e-8)


def test_flow_group_law():
    a = builtin("affine_planted").fields[0]
    start = [0.3, -1.2]
    composed = flow(a, flow(a, start, 0.4), 0.7)
    assert composed == pytest.approx(flow(a, start, 1.1), rel=1e-8)


def test_field_matrix_columns_are_fields():
    system = builtin("grushin")
    matrix = system.field_matrix(np.array([2.0, 0.0]))
    assert matrix == pytest.approx(np.array([[1.0, 0.0], [0.0, 2.0]]))
    assert system.field_matrix(np.zeros((5, 4, 2))).shape == (5, 4, 2, 2)


def test_ito_drift():
    assert builtin("grushin").ito_drift().is_zero()
    assert builtin("motion_group").ito_drift().is_zero()
    drift = builtin("affine_planted").ito_drift()
    assert drift == parse_field("1/4*x1 d1 + 1/4*x2 d2", 2)


def test_describe():
    assert builtin("torus_sin").describe()["measure"] == "haar-product"
    info = builtin("grushin").describe()
    assert info["measure"] == "lebesgue"
    assert info["fields"] == ["d1", "x1 d2"]
