import math

import numpy as np
import pytest

from src.base.core.exceptions import EmptySampleError
from src.domain.models.reports import BoundReport
from src.domain.numerics.bounds import (
    function_family,
    gaussian_report,
    harnack_report,
    merge_levels,
    on_diagonal_report,
    poincare_masks,
    poincare_report,
    poisson_report,
    riesz_check,
    shared_masks,
)
from src.domain.numerics.grid import EMBEDDED, GridSpec
from src.domain.numerics.metric import MetricSolver, ball_volumes
from src.domain.numerics.operators import assemble
from src.domain.numerics.semigroups import heat_kernel, poisson_spectral


@pytest.fixture
def flat(euclid_torus, torus_grid):
    gen = assemble(euclid_torus, torus_grid)
    solver = MetricSolver(euclid_torus, torus_grid, 0.2 * torus_grid.spacing[0], 2)
    return gen, solver


def test_flat_gaussian_constants(flat):
    gen, solver = flat
    grid = solver.grid
    source = grid.nearest((math.pi, math.pi))
    dfs = {source: solver.distance_field(source)}
    times = (0.5, 1.0)
    radii = [math.sqrt(t) for t in times]
    snaps = [heat_kernel(gen, source, t, check_symmetry=False) for t in times]
    samples = np.arange(grid.size)
    volumes = dict(zip(times, ball_volumes(solver, samples, radii).T))
    report = gaussian_report(snaps, dfs, samples, volumes, c_low=3.8, c_up=4.2)
    assert 0.125 <= report.constants["upper"] <= 0.5
    assert 0.125 <= report.constants["lower"] <= 0.5
    assert report.passed
    assert report.extremizers["upper"].y == pytest.approx([math.pi, math.pi])

    at_source = ball_volumes(solver, [source], radii)[0]
    diagonal = on_diagonal_report(snaps, {(source, t): float(v) for t, v in zip(times, at_source)})
    assert 1.0 <= diagonal.constants["spread"] < 2.0


def test_gaussian_needs_distance_fields(flat):
    gen, solver = flat
    snap = heat_kernel(gen, 0, 0.5, check_symmetry=False)
    samples = np.arange(gen.size)
    with pytest.raises(EmptySampleError):
        gaussian_report([snap], {}, samples, {0.5: np.ones(gen.size)})


def test_gaussian_uses_the_ball_around_the_sample_point(grushin):
    grid = GridSpec.for_system(grushin, 64, EMBEDDED)
    gen = assemble(grushin, grid)
    solver = MetricSolver(grushin, grid, 0.2 * grid.spacing[0], 2)
    source = grid.nearest((1.0, 0.0))
    dfs = {source: solver.distance_field(source)}
    samples = grid.sample_nodes(400)
    t = 0.5
    snap = heat_kernel(gen, source, t, check_symmetry=False)
    volumes = {t: ball_volumes(solver, samples, [math.sqrt(t)])[:, 0]}
    report = gaussian_report([snap], dfs, samples, volumes)

    best = report.extremizers["upper"]
    assert best.y == pytest.approx([1.0, 0.0])
    i = int(np.flatnonzero(samples == grid.nearest(best.x))[0])
    d = dfs[source].flat[samples[i]]
    expected = snap.values[samples[i]] * volumes[t][i] * math.exp(d**2 / (5.0 * t))
    assert report.constants["upper"] == pytest.approx(expected)
    finite = volumes[t][np.isfinite(volumes[t])]
    assert finite.max() > 1.2 * finite.min()


def test_poisson_and_harnack_constants(flat):
    gen, solver = flat
    samples = np.arange(gen.size)
    source = solver.grid.nearest((math.pi, math.pi))
    p1, p2 = poisson_spectral(gen, source, 0.5), poisson_spectral(gen, source, 1.0)
    report = poisson_report(gen, [(p1, p2)], samples)
    assert report.constants["ratio_min"] <= report.constants["ratio_max"]
    assert math.isfinite(report.constants["gradient"])
    assert report.extremizers["gradient"].label in ("X1", "X2")

    anchors = {n: solver.distance_field(n) for n in (source, solver.grid.nearest((math.pi + 0.5, math.pi)))}
    harnack = harnack_report([p1, p2], anchors, samples)
    assert harnack.constants["C"] == 1.0
    assert math.isfinite(harnack.constants["c"])
    assert harnack.n_samples > 0


def test_shared_masks_keep_the_samples_of_the_last_two_levels():
    coarse = [np.array([True, True, False, True])]
    middle = [np.array([True, False, True, True])]
    fine = [np.array([True, True, True, False])]
    levels = shared_masks([coarse, middle, fine])
    assert levels[-1][0].tolist() == [True, False, True, False]
    assert levels[-2][0].tolist() == [True, False, True, False]
    assert levels[0][0].tolist() == [True, False, False, False]
    assert shared_masks([fine])[0][0] is fine[0]


def test_function_family_on_the_torus(torus_grid):
    family = function_family(torus_grid, n_random=3)
    labels = [label for label, _ in family]
    assert labels[:4] == ["sin(x1)", "cos(x1)", "sin(x2)", "cos(x2)"]
    assert len(family) == 4 + 6 + 3
    again = function_family(torus_grid, n_random=3)
    assert np.array_equal(family[-1][1], again[-1][1])


def test_function_family_has_no_seam_on_an_embedded_box(grushin):
    grid = GridSpec.for_system(grushin, 32, EMBEDDED)
    family = dict(function_family(grid, n_random=0))
    assert set(family) >= {"sin(x1)", "cos(x2)"}
    # zero angle sits at the core centre
    assert family["sin(x1)"][grid.nearest((0.0, 0.0))] == pytest.approx(0.0, abs=1e-12)
    values = family["sin(x1)"].reshape(grid.shape)
    assert np.max(np.abs(values[0] - values[-1])) < 4 * np.pi / grid.counts[0]


def test_poincare_ratio_of_a_linear_function(euclid):
    grid = GridSpec.for_system(euclid, 65)
    gen = assemble(euclid, grid)
    solver = MetricSolver(euclid, grid, 0.2 * grid.spacing[0], 3)
    df = solver.distance_field(grid.nearest((0.0, 0.0)))
    x1 = grid.nodes()[:, 0]
    report = poincare_report(gen, [df], [1.5], [("x1", x1)])
    assert report.constants["sup"] == pytest.approx(0.25, rel=0.05)
    assert report.extremizers["sup"].label == "x1"

    with pytest.raises(EmptySampleError):
        poincare_report(gen, [df], [1.5], [("one", np.ones(grid.size))])


def test_poincare_leaves_out_balls_past_the_boundary(euclid):
    grid = GridSpec.for_system(euclid, 33)
    solver = MetricSolver(euclid, grid, 0.2 * grid.spacing[0], 2)
    df = solver.distance_field(grid.nearest((3.0, 0.0)))
    assert [bool(m) for m in poincare_masks([df], [0.75, 2.0])] == [True, False]


def test_riesz_identity_at_p_two(euclid_torus):
    grid = GridSpec.for_system(euclid_torus, 16)
    gen = assemble(euclid_torus, grid)
    report = riesz_check(gen, function_family(grid, n_random=4), p_list=[1.5, 4.0])
    assert report.constants["identity_defect"] < 1e-10
    assert set(report.tracked) == {"ratio_p1.5", "ratio_p4"}
    assert all(report.constants[k] > 0 for k in report.tracked)


def _level(value: float) -> BoundReport:
    return BoundReport(
        claim="poincare",
        description="synthetic",
        constants={"sup": value},
        tracked=["sup"],
        within_ceilings=True,
        passed=True,
    )


def test_merge_levels_tracks_drift():
    stable = merge_levels([_level(1.0), _level(0.97)], drift_limit=0.10)
    assert stable.stable
    assert stable.passed
    assert stable.drift["sup"] == pytest.approx(0.03)
    assert stable.levels == [{"sup": 1.0}, {"sup": 0.97}]

    drifting = merge_levels([_level(1.0), _level(0.5)], drift_limit=0.10)
    assert drifting.stable is False
    assert not drifting.passed


def test_merge_single_level():
    merged = merge_levels([_level(2.0)])
    assert merged.stable is None
    assert merged.passed
    assert merged.notes
    with pytest.raises(EmptySampleError):
        merge_levels([])
