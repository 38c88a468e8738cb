import math

import numpy as np
import pytest

from src.base.core.exceptions import DimensionMismatchError, GridMismatchError, SystemDefinitionError
from src.domain.numerics.grid import GridSpec
from src.domain.numerics.metric import distance_field
from src.domain.numerics.operators import assemble
from src.domain.numerics.semigroups import heat_kernel
from src.domain.numerics.stochastic import (
    Word,
    compare_kernels,
    kernel_histogram,
    random_word,
    sample_paths,
    step_halving,
    support_check_qr,
    transference_check,
    word_action,
)


def test_flat_second_moment(euclid):
    batch = sample_paths(euclid, (0.0, 0.0), 0.5, 10, 20_000, seed=1)
    mean, second, stderr = batch.moments()
    assert np.all(np.abs(second - 1.0) < 5 * stderr)
    assert np.all(np.abs(mean) < 0.05)
    assert batch.escaped == 0
    assert batch.describe()["n_paths"] == 20_000


def test_grushin_vertical_spread(grushin):
    t, n_steps = 0.5, 50
    batch = sample_paths(grushin, (0.0, 0.0), t, n_steps, 20_000, seed=2)
    _, second, stderr = batch.moments()
    expected = 2 * t * t * (1 - 1 / n_steps)
    assert abs(second[1] - expected) < 5 * stderr[1]


def test_paths_do_not_depend_on_worker_count(grushin):
    one = sample_paths(grushin, (0.5, 0.0), 0.2, 20, 3000, seed=9, block_size=1000, workers=1)
    three = sample_paths(grushin, (0.5, 0.0), 0.2, 20, 3000, seed=9, block_size=1000, workers=3)
    assert np.array_equal(one.endpoints, three.endpoints)


def test_invalid_path_requests(grushin):
    with pytest.raises(DimensionMismatchError):
        sample_paths(grushin, (0.0, 0.0, 0.0), 0.5, 10, 10, seed=0)
    with pytest.raises(SystemDefinitionError):
        sample_paths(grushin, (0.0, 0.0), 0.0, 10, 10, seed=0)


def test_step_halving_is_small_for_flat_motion(euclid):
    assert step_halving(euclid, (0.0, 0.0), 0.5, 5, 5000, seed=4) < 1e-6


def test_step_halving_sees_the_grushin_step_bias(grushin):
    # E y^2 = 2 t^2 (1 - 1/n), so halving moves it by t^2 / n
    coarse = step_halving(grushin, (0.0, 0.0), 0.5, 20, 20_000, seed=6)
    fine = step_halving(grushin, (0.0, 0.0), 0.5, 80, 20_000, seed=6)
    assert coarse > 0.5
    assert fine < coarse / 2
    with pytest.raises(SystemDefinitionError):
        step_halving(grushin, (0.0, 0.0), 0.5, 20, 1, seed=6)


def test_histogram_against_the_heat_kernel(euclid_torus, torus_grid):
    source = torus_grid.nearest((math.pi, math.pi))
    x0 = torus_grid.node(source)
    batch = sample_paths(euclid_torus, x0, 0.5, 10, 200_000, seed=3, grid=torus_grid)
    hist = kernel_histogram(batch, torus_grid)
    assert hist.mass() == pytest.approx(1.0)
    assert hist.n_outside == 0

    snap = heat_kernel(assemble(euclid_torus, torus_grid), source, 0.5, check_symmetry=False)
    assert compare_kernels(hist, snap) <= 0.1

    later = heat_kernel(assemble(euclid_torus, torus_grid), source, 1.0, check_symmetry=False)
    with pytest.raises(GridMismatchError):
        compare_kernels(hist, later)


def test_commutator_word(grushin):
    t, s = 0.7, 0.4
    word = Word(((0, t), (1, s), (0, -t), (1, -s)))
    assert word.length == pytest.approx(2 * (t + s))
    assert word_action(grushin, word, (0.0, 0.0)) == pytest.approx([0.0, t * s])
    assert Word().to_text() == "e"
    with pytest.raises(SystemDefinitionError):
        word_action(grushin, Word(((5, 1.0),)), (0.0, 0.0))


def test_random_words_are_seeded():
    a = random_word(2, 1.0, np.random.default_rng(11))
    b = random_word(2, 1.0, np.random.default_rng(11))
    assert a == b
    assert a.length <= 1.0 + 1e-12


def test_flat_transference(euclid):
    grid = GridSpec.for_system(euclid, 33)
    df = distance_field(euclid, grid, grid.nearest((0.0, 0.0)), 0.2 * grid.spacing[0])
    check = transference_check(euclid, df, n_words=50, max_len=1.0, seed=0)
    assert check.passed
    assert check.describe()["pass_rate"] == 1.0
    assert check.to_csv().splitlines()[0] == "length,distance"


def test_support_of_the_empty_ball(grushin):
    grid = GridSpec.for_system(grushin, 33)
    df = distance_field(grushin, grid, grid.nearest((0.0, 0.0)), 0.2 * grid.spacing[0])
    check = support_check_qr(grushin, df, 0.0, n_words=5, seed=0)
    assert check.passed
    assert check.worst_ratio == 0.0
    with pytest.raises(SystemDefinitionError):
        support_check_qr(grushin, df, -1.0, n_words=5, seed=0)
