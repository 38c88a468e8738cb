import math
from fractions import Fraction

import numpy as np
import pytest

from src.base.core.exceptions import DimensionMismatchError
from src.domain.symbolic.expr import ONE, Expr, GaussianRational, TermKey
from src.domain.symbolic.parser import parse


def x(i: int, n: int = 2) -> Expr:
    return Expr.variable(n, i)


def test_binomial_expansion_is_canonical():
    left = (x(1) + x(2)) ** 2
    assert left == parse("x1^2 + 2*x1*x2 + x2^2", 2)
    assert left.degree() == 2
    assert left.is_polynomial()


def test_pythagorean_identity_is_exact():
    s, c = parse("sin(x1)", 1), parse("cos(x1)", 1)
    total = s * s + c * c
    assert total.is_constant()
    assert total.constant_value() == 1


def test_derivatives():
    assert parse("x1^3", 1).partial(1) == parse("3*x1^2", 1)
    assert parse("sin(x1)", 1).partial(1) == parse("cos(x1)", 1)
    assert parse("cos(2*x1)", 1).partial(1) == parse("-2*sin(2*x1)", 1)
    assert parse("x1*sin(x2)", 2).partial(1) == parse("sin(x2)", 2)


def test_quarter_turn_phase():
    assert parse("sin(x1 + pi/2)", 1) == parse("cos(x1)", 1)
    assert parse("cos(x1 + pi)", 1) == -parse("cos(x1)", 1)


def test_zero_and_cancellation():
    e = parse("x1*x2 - x2*x1", 2)
    assert e.is_zero()
    assert e == Expr.zero(2)
    assert e.to_text() == "0"


@pytest.mark.parametrize(
    "text",
    ["x1^2 - 1", "sin(x1) + 3/2*x2*cos(x1 - x2)", "-x1*sin(2*x2)", "1/3"],
)
def test_text_form_parses_back(text):
    e = parse(text, 2)
    assert parse(e.to_text(), 2) == e


def test_float_evaluation():
    e = parse("x1^2*sin(x2) + cos(x1)", 2)
    assert e.evaluate([2.0, math.pi / 2]) == pytest.approx(4.0 + math.cos(2.0))
    pts = np.array([[0.0, 0.0], [1.0, 0.5]])
    values = e.evaluate(pts)
    assert values.shape == (2,)
    assert values[0] == pytest.approx(1.0)


def test_term_wise_sum_is_real():
    e = parse("x1*sin(x1 + x2) - 2*cos(3*x2) + x2^2*sin(x1)", 2)
    rng = np.random.default_rng(3)
    for point in rng.uniform(-3, 3, size=(20, 2)):
        assert abs(e.evaluate_imaginary(point)) < 1e-12


def test_exact_evaluation():
    assert parse("x1^2 - 1/3*x2", 2).evaluate_exact([Fraction(1, 2), 3]) == Fraction(-3, 4)
    assert parse("sin(x1)", 1).evaluate_exact([0]) == 0
    assert parse("cos(x1) + x1", 1).evaluate_exact([0]) == 1
    assert parse("sin(x1)", 1).evaluate_exact([1]) is None


def test_depends_on():
    e = parse("x1^2 + sin(x3)", 3)
    assert e.depends_on(1) and e.depends_on(3)
    assert not e.depends_on(2)


def test_mixed_variable_counts_are_rejected():
    with pytest.raises(DimensionMismatchError):
        Expr.variable(2, 1) + Expr.variable(3, 1)
    with pytest.raises(DimensionMismatchError):
        Expr.variable(2, 3)
    with pytest.raises(DimensionMismatchError):
        parse("x1", 2).evaluate([1.0, 2.0, 3.0])


def test_non_real_terms_are_refused():
    half_wave = TermKey((0, 0), (Fraction(1), Fraction(0)))
    with pytest.raises(ValueError, match="conjugate symmetry"):
        Expr(2, {half_wave: ONE})
    imaginary_constant = TermKey((0, 0), (Fraction(0), Fraction(0)))
    with pytest.raises(ValueError, match="conjugate symmetry"):
        Expr(2, {imaginary_constant: GaussianRational(Fraction(0), Fraction(1))})
    lopsided = {half_wave: ONE, half_wave.conjugate(): GaussianRational(Fraction(2))}
    with pytest.raises(ValueError, match="conjugate symmetry"):
        Expr(2, lopsided)
    paired = {half_wave: ONE, half_wave.conjugate(): ONE}
    assert Expr(2, paired) == parse("2*cos(x1)", 2)
