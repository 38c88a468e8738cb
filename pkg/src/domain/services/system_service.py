import logging

import numpy as np

from src.base.core.exceptions import DimensionMismatchError
from src.domain.models.config import RunConfig
from src.domain.numerics.grid import EMBEDDED, PERIODIC, TRUNCATED, GridSpec
from src.domain.symbolic.fields import Box, FieldSystem, Torus
from src.domain.symbolic.registry import builtin
from src.domain.symbolic.system_file import load_system

logger = logging.getLogger(__name__)

DEFAULT_GRID_2D = (65, 129, 257)
DEFAULT_GRID_3D = (33, 65)
DEFAULT_EPS = 0.2


class SystemService:
    """Turns a RunConfig into a field system, grid ladders and sample points."""

    def resolve(self, config: RunConfig) -> FieldSystem:
        if config.system is not None:
            system = load_system(config.system)
        else:
            system = builtin(config.builtin, **config.params)
        logger.info(f"Resolved system {system.name} (dim {system.dim}, {system.n_fields} fields)")
        return system

    def grid_counts(self, system: FieldSystem, config: RunConfig) -> list[int]:
        """--grid, or nodes per axis 65, 129, 257 up to two dimensions and 33, 65 above."""
        if config.grid:
            return list(config.grid)
        return list(DEFAULT_GRID_2D if system.dim <= 2 else DEFAULT_GRID_3D)

    def grid_ladder(self, system: FieldSystem, config: RunConfig, default_mode: str) -> list[GridSpec]:
        """
        One grid per ladder entry; boxes use --boundary or the caller's default
        mode. Periodic grids hold n - 1 distinct nodes for an odd count n, so
        closed and periodic ladders nest the same way.
        """
        mode = config.boundary or (default_mode if isinstance(system.domain, Box) else None)
        periodic = mode in (EMBEDDED, PERIODIC) or isinstance(system.domain, Torus)
        counts = [n - 1 if periodic and n % 2 else n for n in self.grid_counts(system, config)]
        return [GridSpec.for_system(system, n, mode, config.padding) for n in counts]

    def metric_ladder(self, system: FieldSystem, config: RunConfig) -> list[GridSpec]:
        return self.grid_ladder(system, config, TRUNCATED)

    def heat_ladder(self, system: FieldSystem, config: RunConfig) -> list[GridSpec]:
        return self.grid_ladder(system, config, EMBEDDED)

    def epsilons(self, system: FieldSystem, config: RunConfig) -> list[float]:
        """
        The eps ladder in grid-spacing units, broadcast to the grid ladder;
        by default 0.2 halved at every level.
        """
        n = len(self.grid_counts(system, config))
        if config.eps_ladder is None:
            return [DEFAULT_EPS / 2**i for i in range(n)]
        eps = list(config.eps_ladder)
        if len(eps) == 1:
            eps = eps * n
        if len(eps) != n:
            raise DimensionMismatchError(f"{len(eps)} eps values for a ladder of {n} grids")
        return eps

    def sources(self, system: FieldSystem, config: RunConfig) -> list[np.ndarray]:
        """
        --sources when given; otherwise the domain centre and the points a
        quarter of the half-width away from it along each axis.
        """
        if config.sources:
            points = [np.asarray(p, dtype=float) for p in config.sources]
            for p in points:
                if p.shape != (system.dim,):
                    raise DimensionMismatchError(f"source {p.tolist()} needs {system.dim} coordinates")
            return points
        lo, hi = system.domain.bounds()
        lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
        center = (lo + hi) / 2
        quarter = (hi - lo) / 8
        points = [center]
        for j in range(system.dim):
            for sign in (1.0, -1.0):
                p = center.copy()
                p[j] += sign * quarter[j]
                points.append(p)
        return points
