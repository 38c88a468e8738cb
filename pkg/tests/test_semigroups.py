import math

import numpy as np
import pytest

from src.base.core.exceptions import SizeLimitError, SystemDefinitionError
from src.domain.numerics.grid import EMBEDDED, GridSpec
from src.domain.numerics.operators import assemble
from src.domain.numerics.semigroups import (
    EIGEN,
    IMPLICIT_MIDPOINT,
    KRYLOV,
    QuadratureSpec,
    eigen_fits,
    heat_apply,
    heat_kernel,
    poisson_spectral,
    poisson_subordination,
    relative_difference,
    semigroup_defect,
    spectral_basis,
    spectral_shape,
    sqrt_apply,
    translation_axes,
)
from src.domain.symbolic.registry import builtin


@pytest.fixture
def flat_gen(euclid_torus, torus_grid):
    return assemble(euclid_torus, torus_grid)


@pytest.fixture
def small_gen(euclid_torus):
    return assemble(euclid_torus, GridSpec.for_system(euclid_torus, 16))


def test_flat_heat_kernel_on_the_diagonal(flat_gen):
    snap = heat_kernel(flat_gen, 0, 0.5)
    assert snap.at(0) == pytest.approx(1 / (4 * math.pi * 0.5), rel=0.03)
    assert snap.mass() == pytest.approx(1.0, abs=1e-10)
    assert snap.min() > -1e-12
    assert snap.symmetry_defect < 1e-8


def test_methods_agree(flat_gen):
    eigen = heat_kernel(flat_gen, 0, 0.3, method=EIGEN)
    krylov = heat_kernel(flat_gen, 0, 0.3, method=KRYLOV, check_symmetry=False)
    midpoint = heat_kernel(flat_gen, 0, 0.3, method=IMPLICIT_MIDPOINT, check_symmetry=False)
    assert relative_difference(krylov, eigen) < 1e-7
    assert relative_difference(midpoint, eigen) < 1e-3


def test_semigroup_property(flat_gen):
    f = np.random.default_rng(3).standard_normal(flat_gen.size)
    assert semigroup_defect(flat_gen, f, 0.4) < 1e-10


def test_time_zero_and_negative_time(small_gen):
    f = np.arange(small_gen.size, dtype=float)
    assert heat_apply(small_gen, f, 0.0) == pytest.approx(f)
    with pytest.raises(SystemDefinitionError):
        heat_apply(small_gen, f, -1.0)
    with pytest.raises(SystemDefinitionError):
        heat_apply(small_gen, f, 1.0, method="rk4")


def test_eigen_respects_the_size_limit(grushin):
    gen = assemble(grushin, GridSpec.for_system(grushin, 16, EMBEDDED))
    assert spectral_shape(gen) == (9, 16)
    with pytest.raises(SizeLimitError):
        heat_kernel(gen, 0, 0.1, method=EIGEN, size_limit=10)


def test_translation_axes(grushin, euclid, euclid_torus):
    assert translation_axes(assemble(grushin, GridSpec.for_system(grushin, 16, EMBEDDED))) == (1,)
    assert translation_axes(assemble(grushin, GridSpec.for_system(grushin, 17))) == ()
    assert translation_axes(assemble(euclid_torus, GridSpec.for_system(euclid_torus, 16))) == (0, 1)
    assert eigen_fits(assemble(euclid, GridSpec.for_system(euclid, 17)), 4096)


@pytest.mark.parametrize("name", ["grushin", "torus_sin"])
def test_blockwise_spectrum_matches_the_dense_one(name):
    system = builtin(name)
    grid = GridSpec.for_system(system, 16, EMBEDDED if name == "grushin" else None)
    gen = assemble(system, grid)
    basis = spectral_basis(gen)
    assert basis.axes == (1,)
    dense = np.linalg.eigvalsh(gen.matrix.toarray())
    assert basis.eigenvalues() == pytest.approx(np.clip(dense, 0.0, None), abs=1e-9)
    f = np.random.default_rng(7).standard_normal(gen.size)
    assert basis.apply(f, lambda lam: lam) == pytest.approx(gen.apply(f), abs=1e-9)


def test_blockwise_heat_matches_krylov_on_the_grushin_plane(grushin):
    gen = assemble(grushin, GridSpec.for_system(grushin, 32, EMBEDDED))
    y = gen.grid.nearest((0.5, 0.0))
    eigen = heat_kernel(gen, y, 0.5, method=EIGEN)
    krylov = heat_kernel(gen, y, 0.5, method=KRYLOV, check_symmetry=False)
    assert relative_difference(krylov, eigen) < 1e-7
    assert eigen.mass() == pytest.approx(1.0, abs=1e-10)


def test_square_root_squares_back(small_gen):
    f = np.random.default_rng(5).standard_normal(small_gen.size)
    root = sqrt_apply(small_gen, sqrt_apply(small_gen, f))
    assert root == pytest.approx(small_gen.apply(f), abs=1e-8)


def test_subordination_matches_the_spectral_poisson_kernel(small_gen):
    spectral = poisson_spectral(small_gen, 0, 0.5)
    subordinated = poisson_subordination(small_gen, 0, 0.5)
    assert relative_difference(subordinated, spectral) <= 1e-6
    assert subordinated.mass() == pytest.approx(1.0, abs=1e-6)
    assert subordinated.metadata["quadrature_nodes"] > 0
    assert subordinated.describe()["method"] == "subordination/eigen"


def test_subordination_rejects_implicit_midpoint(small_gen):
    with pytest.raises(SystemDefinitionError):
        poisson_subordination(small_gen, 0, 0.5, method=IMPLICIT_MIDPOINT)


def test_quadrature_weights_integrate_to_one():
    quad = QuadratureSpec()
    times, weights = quad.nodes(1.0)
    assert times.shape == weights.shape
    assert quad.residual(weights) < 1e-8


def test_snapshot_csv(small_gen):
    snap = heat_kernel(small_gen, 0, 0.2, check_symmetry=False)
    lines = snap.to_csv().splitlines()
    assert len(lines) == 2 + small_gen.size
    assert snap.describe()["kind"] == "heat"


def test_krylov_subordination_on_a_grid_past_the_iteration_cap(grushin):
    gen = assemble(grushin, GridSpec.for_system(grushin, 65, EMBEDDED))
    assert gen.size == 65 * 65
    y = gen.grid.nearest((0.0, 0.0))
    krylov = poisson_subordination(gen, y, 0.5, method=KRYLOV)
    eigen = poisson_subordination(gen, y, 0.5, method=EIGEN)
    assert relative_difference(krylov, eigen) <= 1e-6
    assert krylov.mass() == pytest.approx(1.0, abs=1e-6)
    assert krylov.describe()["method"] == "subordination/krylov"
