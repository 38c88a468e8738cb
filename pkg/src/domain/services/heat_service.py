import logging
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Sequence

from src.base.config.settings import Settings
from src.base.core.exceptions import EmptySampleError
from src.domain.models.config import RunConfig
from src.domain.models.reports import BoundReport, CommandResult
from src.domain.numerics.bounds import (
    function_family,
    gaussian_masks,
    gaussian_report,
    harnack_masks,
    harnack_report,
    merge_levels,
    on_diagonal_masks,
    on_diagonal_report,
    poincare_masks,
    poincare_report,
    poisson_masks,
    poisson_report,
    riesz_check,
    shared_masks,
)
from src.domain.numerics.grid import TRUNCATED
from src.domain.numerics.semigroups import (
    EIGEN,
    IMPLICIT_MIDPOINT,
    KRYLOV,
    KernelSnapshot,
    heat_kernel,
    poisson_spectral,
    poisson_subordination,
    relative_difference,
    semigroup_defect,
)
from src.domain.services.level_service import Level, LevelService
from src.domain.symbolic.fields import FieldSystem

logger = logging.getLogger(__name__)

KRYLOV_IDENTITY = 1e-6


@dataclass
class Verification:
    """Merged claim reports of one command plus per-level diagnostics and CSV tables."""

    reports: list[BoundReport]
    diagnostics: list[dict] = field(default_factory=list)
    tables: dict[str, str] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)

    def to_result(self, system: FieldSystem) -> CommandResult:
        result = {
            "system": system.describe(),
            "reports": [r.model_dump(mode="json") for r in self.reports],
            "diagnostics": self.diagnostics,
        }
        return CommandResult(result=result, tables=self.tables, passed=self.passed)


def ladder_reports(builders: Sequence[Callable[[], BoundReport]]) -> list[BoundReport]:
    """Reports per level, coarse to fine; levels below the last two may come up empty and are skipped."""
    reports = []
    for i, build in enumerate(builders):
        try:
            reports.append(build())
        except EmptySampleError as e:
            if i >= len(builders) - 2:
                raise
            logger.info(f"Ladder level {i} left out: {e}")
    return reports


class HeatService:
    def __init__(self, settings: Settings, levels: LevelService):
        self.settings = settings
        self.levels = levels

    # --- heat kernel ------------------------------------------------------

    def _heat_snapshots(self, level: Level, config: RunConfig) -> list[KernelSnapshot]:
        return [
            heat_kernel(level.generator, y, t, level.method, size_limit=self.settings.eigen_size_limit)
            for y in level.sources
            for t in config.times
        ]

    def heat_verify(self, system: FieldSystem, config: RunConfig) -> Verification:
        ceilings = config.ceilings
        floor = self.settings.reliability_floor
        radii = [math.sqrt(t) for t in config.times]
        runs, gaussian_sets, diagonal_sets, diagnostics = [], [], [], []
        tables: dict[str, str] = {}
        for level in self.levels.heat_levels(system, config):
            snaps = self._heat_snapshots(level, config)
            dfs = level.source_fields()
            volumes = dict(zip(config.times, level.volumes(level.samples, radii).T))
            at_sources = level.volumes(level.sources, radii)
            diagonal_volumes = {
                (y, t): float(at_sources[i, j])
                for i, y in enumerate(level.sources)
                for j, t in enumerate(config.times)
            }
            runs.append((level, snaps, dfs, volumes, diagonal_volumes))
            gaussian_sets.append(gaussian_masks(snaps, dfs, level.samples, volumes, floor))
            diagonal_sets.append(on_diagonal_masks(snaps, diagonal_volumes))
            entry = {
                "grid": level.grid.describe(),
                "method": level.method,
                "samples": int(level.samples.size),
                "min_value": min(s.min() for s in snaps),
                "symmetry_defect": max(s.symmetry_defect or 0.0 for s in snaps),
            }
            if level.grid.mode != TRUNCATED:
                entry["mass_defect"] = max(abs(s.mass() - 1.0) for s in snaps)
            if level.method != IMPLICIT_MIDPOINT:
                delta = level.generator.smooth(level.generator.delta(level.sources[0]))
                entry["semigroup_defect"] = semigroup_defect(
                    level.generator,
                    delta,
                    config.times[0],
                    level.method,
                    size_limit=self.settings.eigen_size_limit,
                )
            diagnostics.append(entry)
            tables = {f"heat_t{s.t:g}": s.to_csv() for s in snaps if s.source == level.sources[0]}
        gaussian_sets, diagonal_sets = shared_masks(gaussian_sets), shared_masks(diagonal_sets)
        gaussian = ladder_reports(
            [
                partial(
                    gaussian_report,
                    snaps,
                    dfs,
                    level.samples,
                    volumes,
                    config.c_low,
                    config.c_up,
                    ceilings.gaussian_upper,
                    ceilings.gaussian_lower,
                    floor=floor,
                    masks=masks,
                )
                for (level, snaps, dfs, volumes, _), masks in zip(runs, gaussian_sets)
            ]
        )
        diagonal = ladder_reports(
            [
                partial(on_diagonal_report, snaps, volumes, ceilings.on_diagonal_spread, masks=masks)
                for (_, snaps, _, _, volumes), masks in zip(runs, diagonal_sets)
            ]
        )
        reports = [merge_levels(gaussian, ceilings.drift), merge_levels(diagonal, ceilings.drift)]
        return Verification(reports, diagnostics, tables)

    # --- Poisson kernel ---------------------------------------------------

    def poisson_verify(self, system: FieldSystem, config: RunConfig) -> Verification:
        ceilings = config.ceilings
        floor = self.settings.reliability_floor
        limit = self.settings.eigen_size_limit
        runs, poisson_sets, harnack_sets, diagnostics = [], [], [], []
        tables: dict[str, str] = {}
        for level in self.levels.heat_levels(system, config):
            gen = level.generator
            method = KRYLOV if level.method == IMPLICIT_MIDPOINT else level.method
            pairs, agreement = [], 0.0
            for y in level.sources:
                for t in config.times:
                    p1 = poisson_subordination(gen, y, t, method=method, size_limit=limit)
                    p2 = poisson_subordination(gen, y, 2 * t, method=method, size_limit=limit)
                    pairs.append((p1, p2))
                    if method == EIGEN:
                        spectral = poisson_spectral(gen, y, t, size_limit=limit)
                        agreement = max(agreement, relative_difference(p1, spectral))
            snaps = [p1 for p1, _ in pairs]
            anchors = level.source_fields()
            runs.append((level, pairs, snaps, anchors))
            poisson_sets.append(poisson_masks(pairs, level.samples, floor))
            harnack_sets.append(harnack_masks(snaps, anchors, level.samples, floor))
            entry = {
                "grid": level.grid.describe(),
                "method": f"subordination/{method}",
                "samples": int(level.samples.size),
                "residual": max(p.residual for p in snaps),
                "min_value": min(p.min() for p in snaps),
            }
            if method == EIGEN:
                entry["spectral_agreement"] = agreement
            if level.grid.mode != TRUNCATED:
                entry["mass_defect"] = max(abs(p.mass() - 1.0) for p in snaps)
            diagnostics.append(entry)
            tables = {f"poisson_t{p.t:g}": p.to_csv() for p in snaps if p.source == level.sources[0]}
        poisson_sets, harnack_sets = shared_masks(poisson_sets), shared_masks(harnack_sets)
        poisson = ladder_reports(
            [
                partial(
                    poisson_report,
                    level.generator,
                    pairs,
                    level.samples,
                    ceilings.poisson_ratio,
                    ceilings.poisson_gradient,
                    floor=floor,
                    masks=masks,
                )
                for (level, pairs, _, _), masks in zip(runs, poisson_sets)
            ]
        )
        harnack = ladder_reports(
            [
                partial(harnack_report, snaps, anchors, level.samples, ceilings.harnack, floor=floor, masks=masks)
                for (level, _, snaps, anchors), masks in zip(runs, harnack_sets)
            ]
        )
        reports = [merge_levels(poisson, ceilings.drift), merge_levels(harnack, ceilings.drift)]
        return Verification(reports, diagnostics, tables)

    # --- functional inequalities -----------------------------------------

    def poincare(self, system: FieldSystem, config: RunConfig) -> Verification:
        runs, ball_sets = [], []
        for level in self.levels.heat_levels(system, config):
            functions = function_family(level.grid, config.n_functions, config.seed)
            dfs = [level.distance(y) for y in level.sources]
            runs.append((level, dfs, functions))
            ball_sets.append(poincare_masks(dfs, config.radii))
        reports = ladder_reports(
            [
                partial(
                    poincare_report,
                    level.generator,
                    dfs,
                    config.radii,
                    functions,
                    config.ceilings.poincare,
                    masks=masks,
                )
                for (level, dfs, functions), masks in zip(runs, shared_masks(ball_sets))
            ]
        )
        return Verification([merge_levels(reports, config.ceilings.drift)])

    def riesz(self, system: FieldSystem, config: RunConfig) -> Verification:
        reports = []
        for level in self.levels.heat_levels(system, config):
            functions = function_family(level.grid, config.n_functions, config.seed)
            method = KRYLOV if level.method == IMPLICIT_MIDPOINT else level.method
            identity = config.ceilings.riesz_identity
            if method == KRYLOV:
                # Lanczos square roots converge to 1e-10, not to round-off
                identity = max(identity, KRYLOV_IDENTITY)
            reports.append(
                riesz_check(
                    level.generator,
                    functions,
                    config.p_list,
                    method,
                    self.settings.eigen_size_limit,
                    identity,
                    config.ceilings.riesz,
                )
            )
        merged = merge_levels(reports, config.ceilings.drift)
        defects = [r.constants["identity_defect"] for r in reports]
        merged.notes.append(f"identity defect at p = 2 per level: {defects}")
        return Verification([merged])

    def kernel(self, level: Level, y: int, t: float) -> KernelSnapshot:
        return heat_kernel(
            level.generator, y, t, level.method, size_limit=self.settings.eigen_size_limit, check_symmetry=False
        )
