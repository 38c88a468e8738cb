import pytest

from src.base.core.exceptions import ExprParseError, InvalidInputError
from src.domain.symbolic.parser import parse


@pytest.mark.parametrize(
    "text, position",
    [
        ("x1 +", 4),
        ("1.5*x1", 0),
        ("x3", 0),
        ("x1 $ x2", 3),
    ],
)
def test_error_positions(text, position):
    with pytest.raises(ExprParseError) as info:
        parse(text, 2)
    assert info.value.position == position


@pytest.mark.parametrize(
    "text",
    [
        "sin(x1 + 1)",
        "sin(x1^2)",
        "cos(x1*x2)",
        "x1^-1",
        "x1^(1/2)",
        "1/0",
        "pi*x1",
        "sin(x1 + pi/3)",
        "(x1 + x2",
    ],
)
def test_rejected_inputs(text):
    with pytest.raises(ExprParseError):
        parse(text, 2)


def test_parse_errors_are_invalid_input():
    with pytest.raises(InvalidInputError) as info:
        parse("x1 +", 2)
    assert info.value.exit_code == 2


def test_affine_arguments():
    a = parse("sin(2*x1 - 1/2*x2 + pi)", 2)
    b = parse("-sin(2*x1 - 1/2*x2)", 2)
    assert a == b


def test_unary_minus_and_precedence():
    assert parse("-x1^2", 1) == parse("-(x1^2)", 1)
    assert parse("2*x1 + 3*x1", 1) == parse("5*x1", 1)
    assert parse("(x1 - 1)*(x1 + 1)", 1) == parse("x1^2 - 1", 1)


@pytest.mark.parametrize(
    "text, phase",
    [
        ("sin(x1 + 1)", "unsupported phase 1:"),
        ("cos(x2 - 1/3)", "unsupported phase -1/3:"),
        ("sin(x1 + pi/3)", "unsupported phase 1/3*pi"),
    ],
)
def test_rational_phases_are_rejected_as_unsupported(text, phase):
    with pytest.raises(ExprParseError) as info:
        parse(text, 2)
    message = str(info.value)
    assert phase in message
    assert "restricted to multiples of pi/2" in message
