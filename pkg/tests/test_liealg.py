from fractions import Fraction

import numpy as np
import pytest

from src.domain.symbolic.fields import Box, FieldSystem, parse_field
from src.domain.symbolic.liealg import (
    BUDGET_EXCEEDED,
    CHECKED_AT_POINTS,
    COUNTEREXAMPLE,
    NILPOTENT_HENCE,
    RANK_DROP_FOUND,
    SAMPLED_PASS,
    ClosureResult,
    close,
    hormander,
    nilpotency,
    squarefree_spectrum,
    type_r,
)
from src.domain.symbolic.registry import builtin


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_grushin_closure_and_step(k):
    c = close(builtin("grushin", k=k))
    assert c.status.closed
    assert c.dim == k + 2
    assert c.bracket_depth[-1] == k + 1
    nil = nilpotency(c)
    assert nil.nilpotent
    assert nil.step == k + 1
    assert nil.series_dims[-1] == 0


@pytest.mark.parametrize("name", ["motion_plane", "torus_sin"])
def test_motion_plane_structure(name):
    c = close(builtin(name))
    assert c.status.describe() == "Closed(3)"
    # b1 = d1, b2 = sin(x1) d2, b3 = [b1, b2] = cos(x1) d2
    assert c.constant(0, 1, 2) == 1
    assert c.constant(0, 2, 1) == -1
    assert c.constant(1, 2, 0) == 0
    assert not nilpotency(c).nilpotent
    ad = c.ad_matrices()[0]
    eigenvalues = np.linalg.eigvals(ad)
    assert np.max(np.abs(eigenvalues.real)) < 1e-12
    assert np.sort(eigenvalues.imag) == pytest.approx([-1.0, 0.0, 1.0], abs=1e-12)


@pytest.mark.parametrize("name, dim", [("circle3d", 6), ("motion_group", 3), ("trig3d", 5)])
def test_closures_are_lie_algebras(name, dim):
    c = close(builtin(name))
    assert c.dim == dim
    assert c.is_antisymmetric()
    assert c.jacobi_defect() == []


def test_generators_are_expressed_in_the_basis():
    system = builtin("multi_omega", omegas=("1", "x1", "2*x1"))
    c = close(system)
    assert c.dim == 3
    # the third generator 2*x1 d2 is twice the second
    assert c.generator_coordinates[3] == {2: Fraction(2)}
    assert c.express(parse_field("5*x1 d2", 2)) == {2: Fraction(5)}
    assert c.express(parse_field("x1^2 d2", 2)) is None


def test_budget_exceeded_is_reported():
    fields = (parse_field("x2^2 d1", 2), parse_field("x1^2 d2", 2))
    system = FieldSystem(2, fields, Box((-1.0, -1.0), (1.0, 1.0)), name="growing")
    c = close(system, max_dim=8, max_depth=6)
    assert c.status.kind == BUDGET_EXCEEDED
    assert "not finite-dimensional within budget" in c.status.describe()
    with pytest.raises(ValueError):
        nilpotency(c)


def test_type_r_verdicts():
    assert type_r(close(builtin("grushin"))).kind == NILPOTENT_HENCE
    verdict = type_r(close(builtin("motion_plane")))
    assert verdict.kind == SAMPLED_PASS
    assert verdict.describe() == "SampledPass(200, 1e-09)"


def test_planted_counterexample():
    verdict = type_r(close(builtin("affine_planted")))
    assert verdict.kind == COUNTEREXAMPLE
    assert not verdict.passed
    assert abs(verdict.eigenvalue.real) == pytest.approx(1.0)


def test_abstract_algebras():
    heisenberg = ClosureResult.from_structure_constants({(0, 1): {2: 1}}, 3)
    assert nilpotency(heisenberg).step == 2
    assert type_r(heisenberg).kind == NILPOTENT_HENCE
    affine = ClosureResult.from_structure_constants({(0, 1): {1: 1}}, 2)
    assert type_r(affine, seed=7).kind == COUNTEREXAMPLE


def test_squarefree_spectrum():
    rotation = [[Fraction(0), Fraction(-1)], [Fraction(1), Fraction(0)]]
    roots = squarefree_spectrum(rotation)
    assert np.sort(roots.imag) == pytest.approx([-1.0, 1.0])
    assert np.abs(roots.real).max() < 1e-12
    jordan = [[Fraction(2), Fraction(1)], [Fraction(0), Fraction(2)]]
    assert squarefree_spectrum(jordan).real == pytest.approx([2.0])


def test_squarefree_spectrum_drops_repeated_roots():
    f = Fraction
    repeated = [[f(1), f(0), f(0)], [f(0), f(1), f(0)], [f(0), f(0), f(-1, 2)]]
    roots = squarefree_spectrum(repeated)
    assert roots.size == 2
    assert np.sort(roots.real) == pytest.approx([-0.5, 1.0])
    assert squarefree_spectrum([[f(0), f(0)], [f(0), f(0)]]).real == pytest.approx([0.0])


def test_hormander_verdicts():
    grushin = builtin("grushin")
    verdict = hormander(close(grushin), grushin)
    assert verdict.kind == CHECKED_AT_POINTS
    assert verdict.min_rank == 2
    assert verdict.exact_points >= 2

    planted = builtin("affine_planted")
    dropped = hormander(close(planted), planted, points=[(Fraction(0), Fraction(0))])
    assert dropped.kind == RANK_DROP_FOUND
    assert dropped.min_rank == 0
    assert dropped.rank_drop_point == (0.0, 0.0)
