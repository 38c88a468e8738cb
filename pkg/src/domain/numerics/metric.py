"""
Carnot-Caratheodory distances by Riemannian relaxation on a lattice graph.

Each stencil edge costs sqrt(dx^T G_eps(mid)^{-1} dx) with
G_eps = A A^T + eps^2 I and A the field matrix at the edge midpoint. Graph
paths overestimate the relaxed distance, the eps term underestimates the CC
distance, and only ratios and exponents are read off downstream.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import dijkstra

from src.base.core.exceptions import BallBoundaryError, SystemDefinitionError, UnstableLadderError
from src.domain.numerics.grid import GridSpec
from src.domain.symbolic.fields import FieldSystem

logger = logging.getLogger(__name__)

STABLE_DRIFT = 0.05
MIN_VOLUME_NODES = 32
CHUNK_ENTRIES = 1 << 21


def relaxed_metric(system: FieldSystem, x: np.ndarray, epsilon: float) -> np.ndarray:
    """G_eps(x) = A(x) A(x)^T + eps^2 I; x of shape (..., k) gives (..., k, k)."""
    if epsilon <= 0:
        raise SystemDefinitionError("epsilon must be positive")
    a = system.field_matrix(np.asarray(x, dtype=float))
    return a @ np.swapaxes(a, -1, -2) + epsilon**2 * np.eye(system.dim)


def stencil_offsets(dim: int, radius: int) -> list[tuple[int, ...]]:
    """Primitive offsets in [-r, r]^k with first nonzero entry positive (one per undirected edge)."""
    if radius not in (1, 2, 3):
        raise SystemDefinitionError("stencil radius must be 1, 2 or 3")
    offsets = []
    for o in itertools.product(range(-radius, radius + 1), repeat=dim):
        if not any(o) or math.gcd(*(abs(v) for v in o)) != 1:
            continue
        first = next(v for v in o if v)
        if first > 0:
            offsets.append(o)
    return offsets


@dataclass
class DistanceField:
    grid: GridSpec
    source: int
    epsilon: float
    stencil_radius: int
    values: np.ndarray  # shape grid.shape, inf where unreached

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def at_node(self, flat: int) -> float:
        return float(self.flat[flat])

    def to_csv(self) -> str:
        return self.grid.to_csv(self.values)


def _edge_graph(system: FieldSystem, grid: GridSpec, epsilon: float, radius: int) -> sparse.csr_matrix:
    counts = np.asarray(grid.counts)
    h = grid.spacing
    idx = np.indices(grid.counts).reshape(grid.dim, -1).T
    nodes = np.asarray(grid.lo) + idx * h
    rows, cols, costs = [], [], []
    for offset in stencil_offsets(grid.dim, radius):
        o = np.asarray(offset)
        target = idx + o
        keep = np.ones(len(idx), dtype=bool)
        for j, periodic in enumerate(grid.periodic):
            if periodic:
                target[:, j] = np.mod(target[:, j], counts[j])
            else:
                keep &= (target[:, j] >= 0) & (target[:, j] < counts[j])
        src = np.flatnonzero(keep)
        dst = np.ravel_multi_index(tuple(target[keep].T), grid.counts)
        delta = o * h
        mid = grid.coefficient_points(nodes[keep] + delta / 2)
        g = relaxed_metric(system, mid, epsilon)
        solved = np.linalg.solve(g, np.broadcast_to(delta, (len(src), grid.dim))[..., None])[..., 0]
        rows.append(src)
        cols.append(dst)
        costs.append(np.sqrt(solved @ delta))
    n = grid.size
    return sparse.coo_matrix(
        (np.concatenate(costs), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    ).tocsr()


class MetricSolver:
    """Builds the edge graph once per (system, grid, eps, stencil) and answers many sources."""

    def __init__(self, system: FieldSystem, grid: GridSpec, epsilon: float, stencil_radius: int = 2):
        if grid.dim != system.dim:
            raise SystemDefinitionError("grid and system dimensions differ")
        self.system = system
        self.grid = grid
        self.epsilon = epsilon
        self.stencil_radius = stencil_radius
        self.graph = _edge_graph(system, grid, epsilon, stencil_radius)
        logger.debug(
            f"Edge graph for {system.name}: {grid.size} nodes, {self.graph.nnz} edges, eps={epsilon:g}"
        )

    def distance_field(self, source: int) -> DistanceField:
        values = dijkstra(self.graph, directed=False, indices=source)
        return DistanceField(
            self.grid, source, self.epsilon, self.stencil_radius, values.reshape(self.grid.shape)
        )


def distance_field(
    system: FieldSystem, grid: GridSpec, source: int, epsilon: float, stencil_radius: int = 2
) -> DistanceField:
    return MetricSolver(system, grid, epsilon, stencil_radius).distance_field(source)


def read_distance(df: DistanceField, point: Sequence[float]) -> float:
    """
    Distance at an off-grid point: the minimum over the corners of the
    containing cell, so within one edge cost of the lattice value.
    """
    grid = df.grid
    p = np.asarray(point, dtype=float)
    frac = (p - np.asarray(grid.lo)) / grid.spacing
    base = np.floor(frac).astype(np.int64)
    best = math.inf
    for corner in itertools.product((0, 1), repeat=grid.dim):
        idx = base + np.asarray(corner)
        for j, (n, periodic) in enumerate(zip(grid.counts, grid.periodic)):
            if periodic:
                idx[j] %= n
            elif not 0 <= idx[j] < n:
                break
        else:
            best = min(best, float(df.values[tuple(idx)]))
    return best


def rim_weights(grid: GridSpec, d: np.ndarray, r: float) -> np.ndarray:
    """
    Share of each node's cell inside {d < r}, reading d as linear across the
    cell: clip(1/2 + (r - d) / g, 0, 1), g the sum over axes of the mean
    finite one-sided change of d. Leading axes of `d` index separate fields.
    """
    values = np.asarray(d, dtype=float).reshape(-1, *grid.shape)
    g = np.zeros_like(values)
    with np.errstate(invalid="ignore", divide="ignore"):
        for j, periodic in enumerate(grid.periodic):
            axis = j + 1
            total = np.zeros_like(values)
            count = np.zeros(values.shape, dtype=np.int64)
            for shift in (1, -1):
                step = np.abs(np.roll(values, shift, axis=axis) - values)
                if not periodic:
                    edge = [slice(None)] * values.ndim
                    edge[axis] = 0 if shift == 1 else -1
                    step[tuple(edge)] = np.nan
                finite = np.isfinite(step)
                total += np.where(finite, step, 0.0)
                count += finite
            g += total / np.maximum(count, 1)
        w = np.clip(0.5 + (r - values) / g, 0.0, 1.0)
    w = np.where(g > 0, w, values < r)
    return w.reshape(np.shape(d))


def ball_volume(df: DistanceField, r: float, check_interior: bool = True) -> float:
    """Cell measure times the rim-weighted node count of {d < r}."""
    if r < 0:
        raise SystemDefinitionError("radius must be nonnegative")
    weights = rim_weights(df.grid, df.values, r)
    if check_interior and np.any((weights.ravel() > 0) & ~df.grid.interior_mask(df.source)):
        raise BallBoundaryError(f"ball of radius {r:g} around node {df.source} touches the grid boundary")
    return df.grid.cell_measure * float(np.sum(weights))


def ball_volumes(
    solver: MetricSolver,
    nodes: Sequence[int],
    radii: Sequence[float],
    min_nodes: int = MIN_VOLUME_NODES,
) -> np.ndarray:
    """
    Rim-weighted V(x, r) for every node x and radius r, shape (nodes, radii).
    NaN where the ball holds fewer than `min_nodes` nodes or leaves the
    interior of x. Searches stop at twice the largest radius.
    """
    grid = solver.grid
    nodes = np.asarray(nodes, dtype=np.int64)
    radii = np.asarray(radii, dtype=float)
    if np.any(radii <= 0):
        raise SystemDefinitionError("radii must be positive")
    out = np.full((len(nodes), len(radii)), np.nan)
    chunk = max(1, CHUNK_ENTRIES // grid.size)
    limit = 2 * float(radii.max())
    for start in range(0, len(nodes), chunk):
        block = nodes[start : start + chunk]
        d = np.atleast_2d(dijkstra(solver.graph, directed=False, indices=block, limit=limit))
        outside = np.stack([~grid.interior_mask(int(x)) for x in block])
        for j, r in enumerate(radii):
            weights = rim_weights(grid, d, r)
            enough = np.count_nonzero(d < r, axis=1) >= min_nodes
            inside = ~np.any((weights > 0) & outside, axis=1)
            volume = grid.cell_measure * weights.sum(axis=1)
            out[start : start + len(block), j] = np.where(enough & inside, volume, np.nan)
    logger.debug(f"Ball volumes at {len(nodes)} nodes, radii {radii.tolist()}")
    return out


@dataclass(frozen=True)
class VolumeRow:
    center: tuple[float, ...]
    r: float
    volume: float


@dataclass
class VolumeTable:
    rows: list[VolumeRow]
    epsilon: float
    grid: dict
    stencil_radius: int

    def for_center(self, center: tuple[float, ...]) -> list[VolumeRow]:
        return [row for row in self.rows if row.center == center]

    def to_csv(self) -> str:
        k = len(self.rows[0].center) if self.rows else 0
        header = ",".join([f"c{j + 1}" for j in range(k)] + ["r", "volume"])
        lines = [header]
        for row in self.rows:
            coords = ",".join(f"{c:.12g}" for c in row.center)
            lines.append(f"{coords},{row.r:.12g},{row.volume:.17g}")
        return "\n".join(lines) + "\n"


def volume_table(dfs: Sequence[DistanceField], radii: Sequence[float]) -> VolumeTable:
    """Volumes of interior balls; boundary-touching balls are left out, never clamped."""
    rows = []
    for df in dfs:
        center = tuple(float(c) for c in df.grid.node(df.source))
        for r in radii:
            try:
                rows.append(VolumeRow(center, float(r), ball_volume(df, r)))
            except BallBoundaryError:
                logger.debug(f"Skipping boundary ball r={r:g} at {center}")
    grid = dfs[0].grid.describe() if dfs else {}
    eps = dfs[0].epsilon if dfs else 0.0
    stencil = dfs[0].stencil_radius if dfs else 0
    return VolumeTable(rows, eps, grid, stencil)


def volume_slope(df: DistanceField, radii: Sequence[float]) -> float:
    """Least-squares slope of log V against log r."""
    r = np.asarray(radii, dtype=float)
    v = np.array([ball_volume(df, x) for x in r])
    slope, _ = np.polyfit(np.log(r), np.log(v), 1)
    return float(slope)


@dataclass
class DoublingCell:
    center: tuple[float, ...]
    r: float
    ratios: list[float | None]
    stable: bool = False
    drift: float | None = None


@dataclass
class DoublingReport:
    cells: list[DoublingCell]
    levels: list[dict]
    sup_stable_ratio: float
    nu: float
    n_stable: int
    extremizer: tuple[tuple[float, ...], float] | None = field(default=None)


def doubling_report(
    system: FieldSystem,
    centers: Sequence[Sequence[float]],
    radii: Sequence[float],
    grids: Sequence[GridSpec],
    epsilons: Sequence[float],
    stencil_radius: int = 2,
    drift_limit: float = STABLE_DRIFT,
) -> DoublingReport:
    """
    V(x, 2r) / V(x, r) per (center, r) at every ladder level (grid_i, eps_i),
    with eps given in units of the grid spacing. A cell is stable when its
    last two ladder values differ by less than `drift_limit`.
    """
    if len(epsilons) == 1:
        epsilons = list(epsilons) * len(grids)
    if len(grids) != len(epsilons) or len(grids) < 2:
        raise SystemDefinitionError("doubling needs a ladder of at least two (grid, eps) levels")

    cells = [DoublingCell(tuple(map(float, c)), float(r), []) for c in centers for r in radii]
    levels = []
    for grid, eps in zip(grids, epsilons):
        eps_phys = eps * float(np.min(grid.spacing))
        solver = MetricSolver(system, grid, eps_phys, stencil_radius)
        levels.append({"grid": grid.describe(), "epsilon": eps_phys})
        for center in centers:
            df = solver.distance_field(grid.nearest(center))
            for cell in cells:
                if cell.center != tuple(map(float, center)):
                    continue
                try:
                    ratio = ball_volume(df, 2 * cell.r) / ball_volume(df, cell.r)
                except BallBoundaryError:
                    ratio = None
                cell.ratios.append(ratio)
        logger.info(f"Doubling level {grid.counts} eps={eps_phys:.3g} done")

    best: tuple[tuple[float, ...], float] | None = None
    sup = 0.0
    for cell in cells:
        last, prev = cell.ratios[-1], cell.ratios[-2]
        if last is None or prev is None:
            continue
        cell.drift = abs(last - prev) / max(abs(last), abs(prev))
        cell.stable = cell.drift < drift_limit
        if cell.stable and last > sup:
            sup, best = last, (cell.center, cell.r)
    n_stable = sum(cell.stable for cell in cells)
    if n_stable == 0:
        raise UnstableLadderError("no doubling cell is stable across the last two ladder levels")
    return DoublingReport(cells, levels, sup, math.log2(sup), n_stable, best)
