from fractions import Fraction

import pytest

from src.base.core.exceptions import SystemDefinitionError
from src.domain.symbolic.fields import Box, Torus
from src.domain.symbolic.system_file import load_system, parse_system

CIRCLE = """
# the circle system in three variables
name   = circle
dim    = 3
domain = box [-2..2; -2..2; -1..1]
fields = [ "d1", "d2", "(x1^2 + x2^2 - 1) d3" ]
points = [ "1, 0, 0", "0, 1/2, 0" ]
"""


def test_parse_box_system():
    system = parse_system(CIRCLE)
    assert system.name == "circle"
    assert system.dim == 3
    assert isinstance(system.domain, Box)
    assert system.domain.lo == (-2.0, -2.0, -1.0)
    assert system.n_fields == 3
    assert system.fields[2].components[2].degree() == 2
    assert system.certificate_points[1] == (Fraction(0), Fraction(1, 2), Fraction(0))


def test_parse_torus_system():
    system = parse_system('dim = 2\ndomain = torus [2pi, 2pi]\nfields = ["d1", "sin(x1) d2"]\n')
    assert isinstance(system.domain, Torus)
    assert system.domain.periods_over_pi == (Fraction(2), Fraction(2))
    assert system.name == "custom"


@pytest.mark.parametrize(
    "text",
    [
        'dim = 2\ndomain = box [-1..1; -1..1]\n',
        'dim = 2\ndim = 2\ndomain = box [-1..1; -1..1]\nfields = ["d1"]\n',
        'dim = 2\ndomain = ball [1]\nfields = ["d1"]\n',
        'dim = 3\ndomain = box [-1..1; -1..1]\nfields = ["d1"]\n',
        'dim = 2\ndomain = box [-1..1; -1..1]\nfields = ["x1 d1"]\n',
        'dim = 2\ndomain = box [-1..1; -1..1]\nfields = ["sin(x1 + 1) d2"]\n',
        'dim = 2\ndomain = box [-1..1; -1..1]\nfields = []\n',
        'dim = 2\ndomain = torus [2, 2]\nfields = ["d1"]\n',
        'dim = two\ndomain = box [-1..1; -1..1]\nfields = ["d1"]\n',
        'dim = 2\ndomain = box [-1..1; -1..1]\nfields = ["d1"]\npoints = [ "0, zero" ]\n',
    ],
)
def test_rejected_definitions(text):
    with pytest.raises(SystemDefinitionError):
        parse_system(text)


def test_load_system_names_after_file(tmp_path):
    path = tmp_path / "grushin2.sys"
    path.write_text('dim = 2\ndomain = box [-2..2; -2..2]\nfields = ["d1", "x1^2 d2"]\n')
    system = load_system(path)
    assert system.name == "grushin2"
    assert system.fields[1].components[1].degree() == 2


def test_missing_file(tmp_path):
    with pytest.raises(SystemDefinitionError):
        load_system(tmp_path / "absent.sys")
