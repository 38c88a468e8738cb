"""
Lattice grids shared by the metric, heat and stochastic layers.

Periodic axes hold n nodes on [lo, hi) with spacing (hi - lo) / n; closed
axes hold n nodes on [lo, hi] with spacing (hi - lo) / (n - 1). Box systems
can be embedded in a larger periodic box: field coefficients are then read
through a coordinate cap that is the identity on the core box and returns
smoothly (C^1) across the padding, so coefficients become periodic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from src.base.core.exceptions import GridMismatchError, SystemDefinitionError
from src.domain.symbolic.fields import Box, FieldSystem, Torus

MIN_COUNT = 8

PERIODIC = "periodic"
TRUNCATED = "truncated"
EMBEDDED = "embedded"


@dataclass(frozen=True)
class CoordinateCap:
    """Per-axis cap around `center` with core half-width `core` and box half-width `half`."""

    center: tuple[float, ...]
    core: tuple[float, ...]
    half: tuple[float, ...]

    def apply(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        out = np.empty_like(pts)
        for j, (m, r, big) in enumerate(zip(self.center, self.core, self.half)):
            u = np.mod(pts[..., j] - m + big, 2 * big) - big
            width = 2 * big - 2 * r
            s = np.mod(u - r, 2 * big) / width
            capped = r * np.cos(np.pi * s) + width / (2 * np.pi) * np.sin(2 * np.pi * s)
            out[..., j] = m + np.where(np.abs(u) <= r, u, capped)
        return out


@dataclass(frozen=True)
class GridSpec:
    counts: tuple[int, ...]
    lo: tuple[float, ...]
    hi: tuple[float, ...]
    periodic: tuple[bool, ...]
    mode: str = PERIODIC
    cap: CoordinateCap | None = field(default=None, compare=False)
    core_lo: tuple[float, ...] | None = None
    core_hi: tuple[float, ...] | None = None

    def __post_init__(self):
        k = len(self.counts)
        if not (len(self.lo) == len(self.hi) == len(self.periodic) == k):
            raise GridMismatchError("grid axes have inconsistent lengths")
        if any(n < MIN_COUNT for n in self.counts):
            raise SystemDefinitionError(f"grids need at least {MIN_COUNT} nodes per axis, got {self.counts}")
        if any(h <= l for l, h in zip(self.lo, self.hi)):
            raise SystemDefinitionError("grid extents must be positive")

    # --- construction ---------------------------------------------------

    @classmethod
    def for_system(
        cls, system: FieldSystem, counts: Sequence[int] | int, mode: str | None = None, padding: float = 1.0
    ) -> GridSpec:
        """
        Tori get a periodic grid. Boxes get a closed grid (`truncated`, the
        default for distances) or a periodic embedding (`embedded`) whose box
        is the core widened by `padding` core half-widths on each side.
        """
        k = system.dim
        counts = (counts,) * k if isinstance(counts, int) else tuple(counts)
        if len(counts) != k:
            raise GridMismatchError(f"{len(counts)} grid counts for a {k}-dimensional system")
        domain = system.domain
        if isinstance(domain, Torus):
            lo, hi = domain.bounds()
            return cls(counts, tuple(lo), tuple(hi), (True,) * k, PERIODIC)
        assert isinstance(domain, Box)
        mode = mode or TRUNCATED
        if mode == TRUNCATED:
            return cls(counts, domain.lo, domain.hi, (False,) * k, TRUNCATED)
        if mode == PERIODIC:
            return cls(counts, domain.lo, domain.hi, (True,) * k, PERIODIC)
        if mode != EMBEDDED:
            raise SystemDefinitionError(f"unknown boundary mode {mode!r}")
        if padding <= 0:
            raise SystemDefinitionError("embedding padding must be positive")
        center = tuple((l + h) / 2 for l, h in zip(domain.lo, domain.hi))
        core = tuple((h - l) / 2 for l, h in zip(domain.lo, domain.hi))
        half = tuple(r * (1 + padding) for r in core)
        return cls(
            counts,
            tuple(m - b for m, b in zip(center, half)),
            tuple(m + b for m, b in zip(center, half)),
            (True,) * k,
            EMBEDDED,
            CoordinateCap(center, core, half),
            domain.lo,
            domain.hi,
        )

    # --- geometry ---------------------------------------------------------

    @property
    def dim(self) -> int:
        return len(self.counts)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.counts

    @property
    def size(self) -> int:
        return math.prod(self.counts)

    @property
    def spacing(self) -> np.ndarray:
        return np.array(
            [
                (h - l) / (n if p else n - 1)
                for n, l, h, p in zip(self.counts, self.lo, self.hi, self.periodic)
            ]
        )

    @property
    def cell_measure(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def extent(self) -> np.ndarray:
        return np.asarray(self.hi) - np.asarray(self.lo)

    def axes(self) -> list[np.ndarray]:
        h = self.spacing
        return [self.lo[j] + h[j] * np.arange(n) for j, n in enumerate(self.counts)]

    def nodes(self) -> np.ndarray:
        """All node coordinates in row-major order, shape (size, k)."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def coefficient_points(self, points: np.ndarray | None = None) -> np.ndarray:
        """Where field coefficients are read: the cap image of the points (nodes by default)."""
        pts = self.nodes() if points is None else np.asarray(points, dtype=float)
        return self.cap.apply(pts) if self.cap is not None else pts

    def node(self, flat: int) -> np.ndarray:
        idx = np.unravel_index(flat, self.counts)
        return np.asarray(self.lo) + self.spacing * np.asarray(idx)

    def multi_index(self, points: np.ndarray) -> np.ndarray:
        """Nearest-node integer indices, wrapped on periodic axes; -1 where off-grid."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        raw = np.rint((pts - np.asarray(self.lo)) / self.spacing).astype(np.int64)
        out = raw.copy()
        for j, (n, p) in enumerate(zip(self.counts, self.periodic)):
            if p:
                out[:, j] = np.mod(raw[:, j], n)
            else:
                out[~((raw[:, j] >= 0) & (raw[:, j] < n)), j] = -1
        return out

    def nearest(self, point: Sequence[float]) -> int:
        idx = self.multi_index(np.asarray(point, dtype=float))[0]
        if np.any(idx < 0):
            raise GridMismatchError(f"point {tuple(point)} lies outside the grid")
        return int(np.ravel_multi_index(tuple(idx), self.counts))

    def locate(self, points: np.ndarray) -> np.ndarray:
        """Flat nearest-node indices of many points; every point must lie on the grid."""
        idx = self.multi_index(points)
        outside = np.any(idx < 0, axis=1)
        if np.any(outside):
            raise GridMismatchError(f"{int(np.count_nonzero(outside))} points lie outside the grid")
        return np.ravel_multi_index(tuple(idx.T), self.counts)

    def sample_nodes(self, limit: int) -> np.ndarray:
        """
        Core nodes (every node without an embedding) on the finest sublattice
        holding at most `limit` of them, as flat row-major indices.
        """
        core = self.core_mask().reshape(self.counts)
        stride = 1
        while True:
            sub = np.zeros(self.counts, dtype=bool)
            sub[(slice(None, None, stride),) * self.dim] = True
            keep = core & sub
            if np.count_nonzero(keep) <= limit or stride >= max(self.counts):
                return np.flatnonzero(keep)
            stride += 1

    def displacement(self, source: int) -> np.ndarray:
        """Node offsets from a source node (minimal image on periodic axes), shape (size, k)."""
        delta = self.nodes() - self.node(source)
        ext = self.extent
        for j, p in enumerate(self.periodic):
            if p:
                delta[:, j] = np.mod(delta[:, j] + ext[j] / 2, ext[j]) - ext[j] / 2
        return delta

    def interior_mask(self, source: int) -> np.ndarray:
        """
        Nodes a ball around `source` may cover and still count as interior:
        not on a closed boundary, inside the core of an embedding, and not
        reaching halfway around a periodic axis.
        """
        mask = np.ones(self.counts, dtype=bool)
        for j, (n, p) in enumerate(zip(self.counts, self.periodic)):
            if not p:
                sl = [slice(None)] * self.dim
                sl[j] = 0
                mask[tuple(sl)] = False
                sl[j] = n - 1
                mask[tuple(sl)] = False
        mask = mask.ravel()
        if self.core_lo is not None:
            nodes = self.nodes()
            h = self.spacing
            inside = np.all(
                (nodes >= np.asarray(self.core_lo) - 1e-9 * h)
                & (nodes <= np.asarray(self.core_hi) + 1e-9 * h),
                axis=1,
            )
            mask &= inside
        elif any(self.periodic):
            delta = self.displacement(source)
            limit = self.extent / 2 - self.spacing
            for j, p in enumerate(self.periodic):
                if p:
                    mask &= np.abs(delta[:, j]) < limit[j]
        return mask

    def core_mask(self) -> np.ndarray:
        """Nodes whose coefficients are uncapped (everything outside an embedding)."""
        if self.core_lo is None:
            return np.ones(self.size, dtype=bool)
        nodes = self.nodes()
        return np.all(
            (nodes >= np.asarray(self.core_lo)) & (nodes <= np.asarray(self.core_hi)), axis=1
        )

    def wrap(self, points: np.ndarray) -> np.ndarray:
        pts = np.array(points, dtype=float)
        lo, ext = np.asarray(self.lo), self.extent
        for j, p in enumerate(self.periodic):
            if p:
                pts[..., j] = lo[j] + np.mod(pts[..., j] - lo[j], ext[j])
        return pts

    def check_same(self, other: GridSpec) -> None:
        if (
            self.counts != other.counts
            or self.periodic != other.periodic
            or not np.allclose(self.lo, other.lo)
            or not np.allclose(self.hi, other.hi)
        ):
            raise GridMismatchError(f"grids differ: {self.describe()} vs {other.describe()}")

    def refine(self) -> GridSpec:
        """The next ladder level: periodic axes double, closed axes go n -> 2n - 1."""
        counts = tuple(2 * n if p else 2 * n - 1 for n, p in zip(self.counts, self.periodic))
        return GridSpec(
            counts, self.lo, self.hi, self.periodic, self.mode, self.cap, self.core_lo, self.core_hi
        )

    def describe(self) -> dict:
        out = {
            "counts": list(self.counts),
            "lo": list(self.lo),
            "hi": list(self.hi),
            "periodic": list(self.periodic),
            "spacing": self.spacing.tolist(),
            "mode": self.mode,
        }
        if self.core_lo is not None:
            out["core"] = {"lo": list(self.core_lo), "hi": list(self.core_hi)}
        return out

    def csv_header(self) -> str:
        axes = ",".join(f"x{j + 1}" for j in range(self.dim))
        spacings = ";".join(f"h{j + 1}={h:.12g}" for j, h in enumerate(self.spacing))
        return f"# {spacings}\n{axes},value"

    def to_csv(self, values: np.ndarray) -> str:
        """Row-major flat table of node coordinates and values."""
        flat = np.asarray(values, dtype=float).ravel()
        if flat.size != self.size:
            raise GridMismatchError(f"{flat.size} values for a grid of {self.size} nodes")
        lines = [self.csv_header()]
        for point, value in zip(self.nodes(), flat):
            coords = ",".join(f"{c:.12g}" for c in point)
            lines.append(f"{coords},{value:.17g}")
        return "\n".join(lines) + "\n"
