"""
Heat and Poisson semigroups of a DiscreteGenerator.

Time convention: e^{-tL} with L = sum_i D_i^T D_i (no factor 1/2). Three
ways to apply a spectral function f(L) to a vector:

    eigen               eigh of L block by block over the Fourier modes of its
                        translation axes, cached on the generator; block sizes up to a limit
    krylov              Lanczos with full reorthogonalisation, converged on successive iterates
    implicit-midpoint   Crank-Nicolson steps with a sparse LU factor (heat only)

Kernel snapshots are S f(L) S delta_y, S the sublattice smoother.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import sparse
from scipy.linalg import eigh, eigh_tridiagonal
from scipy.sparse.linalg import splu

from src.base.core.exceptions import (
    KrylovConvergenceError,
    QuadratureResidualError,
    SizeLimitError,
    SystemDefinitionError,
)
from src.domain.numerics.grid import GridSpec
from src.domain.numerics.operators import DiscreteGenerator

logger = logging.getLogger(__name__)

EIGEN = "eigen"
KRYLOV = "krylov"
IMPLICIT_MIDPOINT = "implicit-midpoint"
METHODS = (EIGEN, KRYLOV, IMPLICIT_MIDPOINT)

HEAT = "heat"
POISSON = "poisson"

SpectralFunction = Callable[[np.ndarray], np.ndarray]


# --- spectral machinery -------------------------------------------------


def translation_axes(gen: DiscreteGenerator) -> tuple[int, ...]:
    """Periodic axes along which no field coefficient varies; L commutes with shifts along them."""
    grid, fields = gen.grid, gen.system.fields
    return tuple(
        j
        for j in range(grid.dim)
        if grid.periodic[j] and not any(c.depends_on(j + 1) for x in fields for c in x.components)
    )


def spectral_shape(gen: DiscreteGenerator) -> tuple[int, int]:
    """(number of Fourier modes, block size) of the blockwise eigendecomposition."""
    counts = gen.grid.counts
    axes = translation_axes(gen)
    if not axes:
        return 1, gen.size
    block = math.prod(n for j, n in enumerate(counts) if j not in axes)
    free = [counts[j] for j in axes]
    return math.prod(free[:-1]) * (free[-1] // 2 + 1), block


def eigen_fits(gen: DiscreteGenerator, size_limit: int) -> bool:
    modes, block = spectral_shape(gen)
    return block <= size_limit and modes * block * block <= 2 * size_limit * size_limit


@dataclass
class SpectralBasis:
    """
    Eigenpairs of L, one Hermitian block per Fourier mode of the translation
    axes (half spectrum on the last of them). Without translation axes there
    is a single real block, the dense eigendecomposition.
    """

    grid: GridSpec
    axes: tuple[int, ...]
    lam: np.ndarray  # (modes, block)
    vecs: np.ndarray  # (modes, block, block), columns are eigenvectors

    @property
    def order(self) -> tuple[int, ...]:
        return tuple(j for j in range(self.grid.dim) if j not in self.axes) + self.axes

    def eigenvalues(self) -> np.ndarray:
        """All eigenvalues of L with multiplicity, ascending."""
        if not self.axes:
            return np.sort(self.lam.ravel())
        counts = [self.grid.counts[j] for j in self.axes]
        ranges = [np.arange(n) for n in counts[:-1]] + [np.arange(counts[-1] // 2 + 1)]
        last = np.meshgrid(*ranges, indexing="ij")[-1].ravel()
        n = counts[-1]
        # modes 1..ceil(n/2)-1 on the last axis stand for themselves and their mirror
        twice = (last > 0) & (2 * last != n)
        return np.sort(np.concatenate([self.lam.ravel(), self.lam[twice].ravel()]))

    def apply(self, f: np.ndarray, func: SpectralFunction) -> np.ndarray:
        counts = self.grid.counts
        order = self.order
        free = tuple(counts[j] for j in self.axes)
        block = self.lam.shape[1]
        values = np.asarray(func(self.lam.ravel())).reshape(self.lam.shape)
        arr = np.asarray(f, dtype=float).reshape(counts).transpose(order).reshape((block, *free))
        if not self.axes:
            vecs = self.vecs[0]
            out = vecs @ (values[0] * (vecs.T @ arr))
        else:
            spatial = tuple(range(1, 1 + len(free)))
            hat = np.fft.rfftn(arr, axes=spatial)
            half = hat.shape[1:]
            hat = hat.reshape(block, -1).T
            coeff = np.einsum("kab,ka->kb", self.vecs.conj(), hat) * values
            hat = np.einsum("kab,kb->ka", self.vecs, coeff)
            out = np.fft.irfftn(hat.T.reshape((block, *half)), s=free, axes=spatial)
        out = out.reshape(tuple(counts[j] for j in order)).transpose(np.argsort(order))
        return out.ravel()


def _mode_blocks(gen: DiscreteGenerator, axes: tuple[int, ...]) -> np.ndarray:
    """
    L restricted to Fourier mode kappa: sum over shifts s of
    L[(a, 0), (b, s)] exp(2 pi i <kappa, s / n>), read off the rows whose
    translation-axis indices are zero.
    """
    counts = gen.grid.counts
    rest = tuple(j for j in range(gen.grid.dim) if j not in axes)
    rest_counts = tuple(counts[j] for j in rest)
    free = np.array([counts[j] for j in axes])
    block = math.prod(rest_counts)

    index = np.zeros((gen.grid.dim, block), dtype=np.int64)
    if rest:
        index[list(rest)] = np.indices(rest_counts).reshape(len(rest), -1)
    rows = gen.matrix[np.ravel_multi_index(tuple(index), counts)].tocoo()
    cols = np.unravel_index(rows.col, counts)
    b = np.ravel_multi_index(tuple(cols[j] for j in rest), rest_counts) if rest else np.zeros_like(rows.col)
    shifts, group = np.unique(np.stack([cols[j] for j in axes], axis=1), axis=0, return_inverse=True)
    stencil = np.zeros((len(shifts), block, block))
    np.add.at(stencil, (group.reshape(-1), rows.row, b), rows.data)

    ranges = [np.arange(n) for n in free[:-1]] + [np.arange(free[-1] // 2 + 1)]
    kappa = np.stack([g.ravel() for g in np.meshgrid(*ranges, indexing="ij")], axis=1)
    phases = np.exp(2j * np.pi * (kappa / free) @ shifts.T)
    blocks = np.tensordot(phases, stencil, axes=(1, 0))
    return 0.5 * (blocks + np.conj(np.swapaxes(blocks, -1, -2)))


def spectral_basis(gen: DiscreteGenerator, size_limit: int = 4096) -> SpectralBasis:
    modes, block = spectral_shape(gen)
    if not eigen_fits(gen, size_limit):
        raise SizeLimitError(
            f"eigen method limited to blocks of {size_limit} nodes, this generator needs "
            f"{modes} block(s) of {block}; use krylov"
        )
    if "spectral" not in gen.cache:
        axes = translation_axes(gen)
        if axes:
            logger.info(f"Blockwise eigendecomposition: {modes} Fourier modes x {block}x{block} blocks")
            lam, vecs = np.linalg.eigh(_mode_blocks(gen, axes))
        else:
            logger.info(f"Dense eigendecomposition of a {gen.size}x{gen.size} generator")
            lam, vecs = eigh(gen.matrix.toarray())
            lam, vecs = lam[None, :], vecs[None, :, :]
        gen.cache["spectral"] = SpectralBasis(gen.grid, axes, np.clip(lam, 0.0, None), vecs)
    return gen.cache["spectral"]


def lanczos_apply(
    matrix: sparse.spmatrix,
    v: np.ndarray,
    func: SpectralFunction,
    tol: float = 1e-10,
    max_iter: int = 300,
    check_every: int = 5,
) -> tuple[np.ndarray, float]:
    """f(A) v for symmetric PSD A; returns (result, last successive-iterate change)."""
    beta0 = float(np.linalg.norm(v))
    n = v.size
    if beta0 == 0.0:
        return np.zeros_like(v), 0.0
    max_iter = min(max_iter, n)
    basis = np.zeros((max_iter + 1, n))
    basis[0] = v / beta0
    alpha: list[float] = []
    beta: list[float] = []
    previous: np.ndarray | None = None
    change = math.inf
    for m in range(1, max_iter + 1):
        w = matrix @ basis[m - 1]
        a = float(basis[m - 1] @ w)
        w = w - a * basis[m - 1]
        if m > 1:
            w = w - beta[-1] * basis[m - 2]
        w = w - basis[:m].T @ (basis[:m] @ w)
        b = float(np.linalg.norm(w))
        alpha.append(a)
        breakdown = b <= 1e-13 * max(abs(a), 1.0)
        if breakdown or m % check_every == 0 or m == max_iter:
            theta, s = eigh_tridiagonal(np.array(alpha), np.array(beta))
            coeff = s @ (func(np.clip(theta, 0.0, None)) * s[0])
            result = beta0 * (basis[:m].T @ coeff)
            if breakdown:
                return result, 0.0
            if previous is not None:
                change = float(np.linalg.norm(result - previous) / max(np.linalg.norm(result), 1e-300))
                if change < tol:
                    return result, change
            previous = result
        beta.append(b)
        basis[m] = w / b
    raise KrylovConvergenceError(
        f"Lanczos did not converge in {max_iter} iterations (change {change:.2e} > {tol:.1e})"
    )


def _crank_nicolson(matrix: sparse.spmatrix, f: np.ndarray, t: float, steps: int) -> np.ndarray:
    dt = t / steps
    eye = sparse.identity(matrix.shape[0], format="csc")
    lu = splu((eye + 0.5 * dt * matrix).tocsc())
    rhs_op = (eye - 0.5 * dt * matrix).tocsr()
    u = f.copy()
    for _ in range(steps):
        u = lu.solve(rhs_op @ u)
    return u


def crank_nicolson(
    gen: DiscreteGenerator, f: np.ndarray, t: float, tol: float = 1e-6, max_doublings: int = 6
) -> tuple[np.ndarray, float]:
    """Implicit-midpoint stepping; step count doubles until successive results agree to tol."""
    steps = max(16, math.ceil(4 * t))
    current = _crank_nicolson(gen.matrix, f, t, steps)
    change = math.inf
    for _ in range(max_doublings):
        steps *= 2
        refined = _crank_nicolson(gen.matrix, f, t, steps)
        change = float(np.linalg.norm(refined - current) / max(np.linalg.norm(refined), 1e-300))
        current = refined
        if change < tol:
            break
    else:
        logger.warning(f"Crank-Nicolson change {change:.2e} still above {tol:.1e} at {steps} steps")
    return current, change


def apply_function(
    gen: DiscreteGenerator,
    f: np.ndarray,
    func: SpectralFunction,
    method: str = EIGEN,
    tol: float = 1e-10,
    size_limit: int = 4096,
) -> tuple[np.ndarray, float]:
    f = np.asarray(f, dtype=float).ravel()
    if method == EIGEN:
        return spectral_basis(gen, size_limit).apply(f, func), 0.0
    if method == KRYLOV:
        return lanczos_apply(gen.matrix, f, func, tol=tol)
    raise SystemDefinitionError(f"method {method!r} cannot apply a general spectral function")


def _heat(gen: DiscreteGenerator, f: np.ndarray, t: float, method: str, tol: float, size_limit: int):
    if t < 0:
        raise SystemDefinitionError("time must be nonnegative")
    if method not in METHODS:
        raise SystemDefinitionError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    f = np.asarray(f, dtype=float).ravel()
    if t == 0:
        return f.copy(), 0.0
    if method == IMPLICIT_MIDPOINT:
        return crank_nicolson(gen, f, t, tol=max(tol, 1e-8))
    return apply_function(gen, f, lambda lam: np.exp(-t * lam), method, tol, size_limit)


def heat_apply(
    gen: DiscreteGenerator,
    f: np.ndarray,
    t: float,
    method: str = EIGEN,
    tol: float = 1e-10,
    size_limit: int = 4096,
) -> np.ndarray:
    """e^{-tL} f."""
    return _heat(gen, f, t, method, tol, size_limit)[0]


def sqrt_apply(
    gen: DiscreteGenerator, f: np.ndarray, method: str = EIGEN, tol: float = 1e-12, size_limit: int = 4096
) -> np.ndarray:
    """L^{1/2} f."""
    return apply_function(gen, f, np.sqrt, method, tol, size_limit)[0]


# --- snapshots ----------------------------------------------------------


@dataclass
class KernelSnapshot:
    kind: str
    t: float
    source: int
    values: np.ndarray  # flat, density w.r.t. the cell measure
    grid: GridSpec
    method: str
    residual: float = 0.0
    symmetry_defect: float | None = None
    metadata: dict = field(default_factory=dict)

    def mass(self) -> float:
        return float(self.values.sum() * self.grid.cell_measure)

    def at(self, node: int) -> float:
        return float(self.values[node])

    def min(self) -> float:
        return float(self.values.min())

    def describe(self) -> dict:
        out = {
            "kind": self.kind,
            "t": self.t,
            "source": self.grid.node(self.source).tolist(),
            "method": self.method,
            "residual": self.residual,
            "mass": self.mass(),
            "min": self.min(),
        }
        if self.symmetry_defect is not None:
            out["symmetry_defect"] = self.symmetry_defect
        out.update(self.metadata)
        return out

    def to_csv(self) -> str:
        return self.grid.to_csv(self.values)


def _partner_node(grid: GridSpec, node: int) -> int:
    """A second source a quarter of the first axis away, for symmetry checks."""
    idx = list(np.unravel_index(node, grid.counts))
    idx[0] = (idx[0] + max(1, grid.counts[0] // 4)) % grid.counts[0]
    return int(np.ravel_multi_index(tuple(idx), grid.counts))


def _snapshot(
    gen: DiscreteGenerator,
    y: int,
    apply: Callable[[np.ndarray], tuple[np.ndarray, float]],
    check_symmetry: bool,
) -> tuple[np.ndarray, float, float | None]:
    values, residual = apply(gen.smooth(gen.delta(y)))
    values = gen.smooth(values)
    defect = None
    if check_symmetry:
        partner = _partner_node(gen.grid, y)
        other, _ = apply(gen.smooth(gen.delta(partner)))
        other = gen.smooth(other)
        a, b = values[partner], other[y]
        defect = abs(a - b) / max(abs(a), abs(b), 1e-300)
    return values, residual, defect


def heat_kernel(
    gen: DiscreteGenerator,
    y: int,
    t: float,
    method: str = EIGEN,
    tol: float = 1e-10,
    size_limit: int = 4096,
    check_symmetry: bool = True,
) -> KernelSnapshot:
    """h_t(., y)."""
    values, residual, defect = _snapshot(
        gen, y, lambda f: _heat(gen, f, t, method, tol, size_limit), check_symmetry
    )
    return KernelSnapshot(HEAT, t, y, values, gen.grid, method, residual, defect)


def poisson_spectral(
    gen: DiscreteGenerator, y: int, t: float, size_limit: int = 4096, check_symmetry: bool = False
) -> KernelSnapshot:
    """p_t(., y) as e^{-t sqrt(L)} from the spectral basis."""
    if t < 0:
        raise SystemDefinitionError("time must be nonnegative")
    values, residual, defect = _snapshot(
        gen,
        y,
        lambda f: apply_function(gen, f, lambda lam: np.exp(-t * np.sqrt(lam)), EIGEN, 0.0, size_limit),
        check_symmetry,
    )
    return KernelSnapshot(POISSON, t, y, values, gen.grid, EIGEN, residual, defect)


@dataclass(frozen=True)
class QuadratureSpec:
    """Trapezoid rule in u for s = e^u on [u_min, u_max] with the given step."""

    u_min: float = -40.0
    u_max: float = 4.5
    step: float = 0.05

    def nodes(self, t: float, lam_bound: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
        """Heat times t^2 / (4 s) and weights e^{-s} s^{1/2} du / sqrt(pi)."""
        u_max = self.u_max
        if lam_bound > 0 and t > 0:
            u_max = max(u_max, math.log(t * math.sqrt(lam_bound) / 2) + 3.0)
        u = np.arange(self.u_min, u_max + 0.5 * self.step, self.step)
        s = np.exp(u)
        weights = self.step * np.exp(-s) * np.sqrt(s) / math.sqrt(math.pi)
        return t * t / (4 * s), weights

    def residual(self, weights: np.ndarray) -> float:
        """Mass defect plus the tail bound below u_min."""
        tail = 2 * math.exp(self.u_min / 2) / math.sqrt(math.pi)
        return abs(float(weights.sum()) - 1.0) + tail


def poisson_subordination(
    gen: DiscreteGenerator,
    y: int,
    t: float,
    quad: QuadratureSpec = QuadratureSpec(),
    method: str = EIGEN,
    tol: float = 1e-8,
    size_limit: int = 4096,
    krylov_tol: float = 1e-10,
) -> KernelSnapshot:
    """
    p_t = pi^{-1/2} int_0^inf e^{-s} s^{-1/2} h_{t^2/(4s)} ds, summed over the
    quadrature nodes as heat semigroup evaluations. `tol` bounds the
    quadrature residual, `krylov_tol` the Lanczos iterate change.
    """
    if t < 0:
        raise SystemDefinitionError("time must be nonnegative")
    if method == IMPLICIT_MIDPOINT:
        raise SystemDefinitionError("subordination needs the eigen or krylov method")
    if t == 0:
        values = gen.smooth(gen.smooth(gen.delta(y)))
        return KernelSnapshot(POISSON, 0.0, y, values, gen.grid, f"subordination/{method}")
    times, weights = quad.nodes(t, gen.gershgorin_bound())
    residual = quad.residual(weights)
    if residual > tol:
        raise QuadratureResidualError(f"quadrature residual {residual:.2e} exceeds {tol:.1e}")

    def subordinated(lam: np.ndarray) -> np.ndarray:
        total = np.zeros_like(lam, dtype=float)
        for s, w in zip(times, weights):
            total += w * np.exp(-s * lam)
        return total

    values, krylov_change, _ = _snapshot(
        gen, y, lambda f: apply_function(gen, f, subordinated, method, krylov_tol, size_limit), False
    )
    return KernelSnapshot(
        POISSON,
        t,
        y,
        values,
        gen.grid,
        f"subordination/{method}",
        residual + krylov_change,
        metadata={"quadrature_nodes": int(times.size)},
    )


def grad_poisson(gen: DiscreteGenerator, snapshot: KernelSnapshot, i: int) -> KernelSnapshot:
    """D_i p_t(., y)."""
    return KernelSnapshot(
        f"grad-poisson({i + 1})",
        snapshot.t,
        snapshot.source,
        gen.fields[i].apply(snapshot.values),
        snapshot.grid,
        snapshot.method,
        snapshot.residual,
    )


def relative_difference(a: KernelSnapshot, b: KernelSnapshot) -> float:
    a.grid.check_same(b.grid)
    return float(np.max(np.abs(a.values - b.values)) / max(np.max(np.abs(b.values)), 1e-300))


def semigroup_defect(gen: DiscreteGenerator, f: np.ndarray, t: float, method: str = EIGEN, **kw) -> float:
    """|e^{-tL}f - e^{-tL/2}e^{-tL/2}f| / |e^{-tL}f|."""
    once = heat_apply(gen, f, t, method, **kw)
    twice = heat_apply(gen, heat_apply(gen, f, t / 2, method, **kw), t / 2, method, **kw)
    return float(np.linalg.norm(once - twice) / max(np.linalg.norm(once), 1e-300))
