import numpy as np
import pytest

from src.domain.numerics.grid import GridSpec
from src.domain.numerics.operators import assemble, centered_difference, sublattice_smoother
from src.domain.symbolic.registry import builtin


@pytest.mark.parametrize("name, counts", [("grushin", 17), ("motion_plane", 17), ("torus_sin", 16)])
def test_fields_are_antisymmetric_and_generator_symmetric(name, counts):
    system = builtin(name)
    gen = assemble(system, GridSpec.for_system(system, counts))
    rng = np.random.default_rng(1)
    for d in gen.fields:
        assert d.antisymmetry_defect(rng) < 1e-12
    assert gen.symmetry_defect(rng) < 1e-12


def test_generator_annihilates_constants_on_the_torus(torus_grid, euclid_torus):
    gen = assemble(euclid_torus, torus_grid)
    assert np.abs(gen.apply(np.ones(gen.size))).max() < 1e-10

    torus_sin = builtin("torus_sin")
    gen = assemble(torus_sin, GridSpec.for_system(torus_sin, 16))
    assert np.abs(gen.apply(np.ones(gen.size))).max() < 1e-10


def test_flat_generator_matches_the_wide_laplacian(torus_grid, euclid_torus):
    gen = assemble(euclid_torus, torus_grid)
    h = torus_grid.spacing[0]
    f = np.sin(torus_grid.nodes()[:, 0])
    expected = f * (1 - np.cos(2 * h)) / (2 * h * h)
    assert gen.apply(f) == pytest.approx(expected, abs=1e-10)


def test_centered_difference_on_a_line(euclid):
    grid = GridSpec.for_system(euclid, 17)
    c = centered_difference(grid, 0)
    x = grid.nodes()[:, 0]
    interior = grid.interior_mask(grid.nearest((0.0, 0.0)))
    assert (c @ x)[interior] == pytest.approx(np.ones(interior.sum()))


def test_smoother_preserves_mass_on_the_torus(torus_grid):
    s = sublattice_smoother(torus_grid)
    f = np.random.default_rng(0).uniform(size=torus_grid.size)
    assert (s @ f).sum() == pytest.approx(f.sum())


def test_gradient_and_delta(grushin):
    grid = GridSpec.for_system(grushin, 17)
    gen = assemble(grushin, grid)
    assert gen.gradient(np.zeros(grid.size)).shape == (2, grid.size)
    node = grid.nearest((0.0, 0.0))
    assert gen.delta(node).sum() * grid.cell_measure == pytest.approx(1.0)
    assert gen.gershgorin_bound() > 0
