import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from src.base.config.settings import Settings
from src.domain.models.config import RunConfig
from src.domain.numerics.grid import GridSpec
from src.domain.numerics.metric import DistanceField, MetricSolver, ball_volumes
from src.domain.numerics.operators import DiscreteGenerator, assemble
from src.domain.numerics.semigroups import EIGEN, KRYLOV, eigen_fits, spectral_shape
from src.domain.services.system_service import SystemService
from src.domain.symbolic.fields import FieldSystem

logger = logging.getLogger(__name__)


@dataclass
class Level:
    """
    One rung of a refinement ladder: generator, metric, source distance
    fields, and the sample nodes shared by every rung of the same ladder.
    """

    grid: GridSpec
    generator: DiscreteGenerator
    solver: MetricSolver
    method: str
    sources: list[int]
    distances: dict[int, DistanceField] = field(default_factory=dict)
    samples: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    _volumes: dict[tuple, np.ndarray] = field(default_factory=dict, repr=False)

    def distance(self, node: int) -> DistanceField:
        if node not in self.distances:
            self.distances[node] = self.solver.distance_field(node)
        return self.distances[node]

    def source_fields(self) -> dict[int, DistanceField]:
        return {y: self.distance(y) for y in self.sources}

    def volumes(self, nodes: Sequence[int], radii: Sequence[float]) -> np.ndarray:
        """Cached ball_volumes of this level's metric, shape (nodes, radii)."""
        nodes = np.asarray(nodes, dtype=np.int64)
        key = (nodes.tobytes(), tuple(float(r) for r in radii))
        if key not in self._volumes:
            self._volumes[key] = ball_volumes(self.solver, nodes, radii)
        return self._volumes[key]


class LevelService:
    """Builds ladder levels once per (system, grid, eps, stencil) and reuses them across commands."""

    def __init__(self, settings: Settings, systems: SystemService):
        self.settings = settings
        self.systems = systems
        self._cache: dict[tuple, Level] = {}

    def method_for(self, generator: DiscreteGenerator, requested: str) -> str:
        if requested == EIGEN and not eigen_fits(generator, self.settings.eigen_size_limit):
            modes, block = spectral_shape(generator)
            logger.warning(
                f"{modes} eigen block(s) of {block} nodes exceed the limit {self.settings.eigen_size_limit}; "
                "using krylov"
            )
            return KRYLOV
        return requested

    def level(
        self, system: FieldSystem, grid: GridSpec, epsilon: float, config: RunConfig, sources: list[np.ndarray]
    ) -> Level:
        eps_phys = epsilon * float(np.min(grid.spacing))
        key = (id(system), grid, eps_phys, config.stencil)
        level = self._cache.get(key)
        if level is None:
            generator = assemble(system, grid)
            solver = MetricSolver(system, grid, eps_phys, config.stencil)
            level = Level(grid, generator, solver, EIGEN, [])
            self._cache[key] = level
        level.method = self.method_for(level.generator, config.method)
        level.sources = [grid.nearest(p) for p in sources]
        for node in level.sources:
            level.distance(node)
        return level

    def heat_levels(self, system: FieldSystem, config: RunConfig) -> list[Level]:
        """
        The heat ladder. Samples are the coarsest level's core nodes (thinned
        to the configured sample limit), located on every level.
        """
        grids = self.systems.heat_ladder(system, config)
        eps = self.systems.epsilons(system, config)
        sources = self.systems.sources(system, config)
        levels = [self.level(system, g, e, config, sources) for g, e in zip(grids, eps)]
        coarse = grids[0]
        points = coarse.nodes()[coarse.sample_nodes(self.settings.sample_limit)]
        for level in levels:
            level.samples = level.grid.locate(points)
        logger.info(f"Heat ladder {[g.counts for g in grids]} with {len(points)} shared samples")
        return levels
