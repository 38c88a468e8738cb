import math

import numpy as np
import pytest

from src.base.core.exceptions import GridMismatchError, SystemDefinitionError
from src.domain.numerics.grid import EMBEDDED, PERIODIC, TRUNCATED, GridSpec


def test_truncated_box_grid(euclid):
    grid = GridSpec.for_system(euclid, 33)
    assert grid.mode == TRUNCATED
    assert grid.spacing == pytest.approx([0.25, 0.25])
    assert grid.size == 33 * 33
    node = grid.nearest((3.0, 4.0))
    assert grid.node(node) == pytest.approx([3.0, 4.0])
    assert grid.refine().counts == (65, 65)


def test_torus_grid(torus_grid):
    assert torus_grid.mode == PERIODIC
    assert torus_grid.periodic == (True, True)
    assert torus_grid.spacing == pytest.approx([2 * math.pi / 32] * 2)
    wrapped = torus_grid.wrap(np.array([[-0.1, 7.0]]))
    assert np.all((wrapped >= 0) & (wrapped < 2 * math.pi))
    assert torus_grid.refine().counts == (64, 64)


def test_grid_needs_enough_nodes(euclid):
    with pytest.raises(SystemDefinitionError):
        GridSpec.for_system(euclid, 4)
    with pytest.raises(GridMismatchError):
        GridSpec.for_system(euclid, [16, 16, 16])


def test_embedding_extends_the_box(euclid):
    grid = GridSpec.for_system(euclid, 32, EMBEDDED, padding=1.0)
    assert grid.periodic == (True, True)
    assert grid.lo == (-8.0, -8.0)
    assert grid.hi == (8.0, 8.0)
    assert grid.core_lo == (-4.0, -4.0)
    assert np.count_nonzero(grid.core_mask()) == 17 * 17


def test_cap_is_identity_on_the_core_and_periodic(euclid):
    cap = GridSpec.for_system(euclid, 32, EMBEDDED).cap
    core = np.random.default_rng(0).uniform(-4, 4, size=(50, 2))
    assert cap.apply(core) == pytest.approx(core)
    outside = np.array([[5.0, -7.5], [7.9, 6.0]])
    assert cap.apply(outside + 16.0) == pytest.approx(cap.apply(outside))


def test_cap_is_continuously_differentiable_at_the_core_edge(euclid):
    cap = GridSpec.for_system(euclid, 32, EMBEDDED).cap
    delta = 1e-6
    edge = np.array([[4.0 + delta, 0.0], [-4.0 - delta, 0.0]])
    assert cap.apply(edge) == pytest.approx(edge, abs=1e-9)


def test_interior_mask_excludes_closed_boundary(euclid):
    grid = GridSpec.for_system(euclid, 17)
    mask = grid.interior_mask(grid.nearest((0.0, 0.0))).reshape(grid.shape)
    assert not mask[0].any() and not mask[-1].any()
    assert not mask[:, 0].any() and not mask[:, -1].any()
    assert mask[1:-1, 1:-1].all()


def test_interior_mask_on_torus_stops_before_half_period(torus_grid):
    source = torus_grid.nearest((math.pi, math.pi))
    delta = torus_grid.displacement(source)
    mask = torus_grid.interior_mask(source)
    assert mask[source]
    assert not mask[np.argmax(np.abs(delta[:, 0]))]


def test_off_grid_points(euclid):
    grid = GridSpec.for_system(euclid, 17)
    assert (grid.multi_index(np.array([9.0, 0.0])) == [[-1, 8]]).all()
    with pytest.raises(GridMismatchError):
        grid.nearest((9.0, 0.0))


def test_csv_table(euclid):
    grid = GridSpec.for_system(euclid, 9)
    text = grid.to_csv(np.arange(grid.size))
    lines = text.splitlines()
    assert lines[0].startswith("# h1=1")
    assert lines[1] == "x1,x2,value"
    assert len(lines) == 2 + grid.size
    with pytest.raises(GridMismatchError):
        grid.to_csv(np.zeros(3))


def test_check_same(euclid, torus_grid):
    grid = GridSpec.for_system(euclid, 32)
    grid.check_same(GridSpec.for_system(euclid, 32))
    with pytest.raises(GridMismatchError):
        grid.check_same(grid.refine())


def test_sample_nodes_thin_the_core(euclid):
    grid = GridSpec.for_system(euclid, 32, EMBEDDED)
    assert grid.sample_nodes(1000).size == 17 * 17
    thinned = grid.sample_nodes(100)
    assert thinned.size == 9 * 9
    assert np.all(grid.core_mask()[thinned])


def test_locate_matches_nearest_on_a_finer_level(euclid):
    coarse = GridSpec.for_system(euclid, 33)
    fine = coarse.refine()
    points = coarse.nodes()[[0, 100, 1088]]
    located = fine.locate(points)
    assert fine.nodes()[located] == pytest.approx(points)
    assert located[1] == fine.nearest(points[1])
    with pytest.raises(GridMismatchError):
        coarse.locate(np.array([[9.0, 0.0]]))
