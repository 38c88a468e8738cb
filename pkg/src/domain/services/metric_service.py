import logging

import numpy as np

from src.base.core.exceptions import BallBoundaryError, UnstableLadderError
from src.domain.models.config import RunConfig
from src.domain.models.reports import BoundReport, CommandResult, Extremizer
from src.domain.numerics.metric import (
    DoublingReport,
    MetricSolver,
    doubling_report,
    read_distance,
    volume_slope,
    volume_table,
)
from src.domain.services.system_service import SystemService
from src.domain.symbolic.fields import FieldSystem

logger = logging.getLogger(__name__)


def _doubling_csv(report: DoublingReport) -> str:
    k = len(report.cells[0].center) if report.cells else 0
    n = len(report.levels)
    header = [f"c{j + 1}" for j in range(k)] + ["r"] + [f"ratio_{i}" for i in range(n)] + ["drift", "stable"]
    lines = [",".join(header)]
    for cell in report.cells:
        ratios = ["" if v is None else f"{v:.12g}" for v in cell.ratios]
        drift = "" if cell.drift is None else f"{cell.drift:.6g}"
        coords = [f"{c:.12g}" for c in cell.center]
        lines.append(",".join(coords + [f"{cell.r:.12g}"] + ratios + [drift, str(cell.stable).lower()]))
    return "\n".join(lines) + "\n"


class MetricService:
    def __init__(self, systems: SystemService):
        self.systems = systems

    def distance(self, system: FieldSystem, config: RunConfig) -> CommandResult:
        """Distance field from the first source on every ladder level, read at --target when given."""
        grids = self.systems.metric_ladder(system, config)
        eps = self.systems.epsilons(system, config)
        source = self.systems.sources(system, config)[0]
        levels, tables = [], {}
        for grid, e in zip(grids, eps):
            eps_phys = e * float(np.min(grid.spacing))
            df = MetricSolver(system, grid, eps_phys, config.stencil).distance_field(grid.nearest(source))
            finite = df.flat[np.isfinite(df.flat)]
            entry = {"grid": grid.describe(), "epsilon": eps_phys, "max_finite": float(finite.max())}
            if config.target is not None:
                entry["target_distance"] = read_distance(df, config.target)
            levels.append(entry)
            tables["distance"] = df.to_csv()
        result = {
            "system": system.describe(),
            "source": source.tolist(),
            "target": config.target,
            "stencil": config.stencil,
            "levels": levels,
        }
        return CommandResult(result=result, tables=tables)

    def doubling(self, system: FieldSystem, config: RunConfig) -> DoublingReport:
        return doubling_report(
            system,
            self.systems.sources(system, config),
            config.radii,
            self.systems.metric_ladder(system, config),
            self.systems.epsilons(system, config),
            config.stencil,
            drift_limit=config.ceilings.doubling_drift,
        )

    def doubling_claim(self, system: FieldSystem, config: RunConfig) -> tuple[BoundReport, DoublingReport | None]:
        try:
            report = self.doubling(system, config)
        except UnstableLadderError as e:
            failed = BoundReport(
                claim="doubling",
                description="sup of stable V(x, 2r) / V(x, r)",
                constants={},
                stable=False,
                within_ceilings=False,
                passed=False,
                notes=[str(e)],
            )
            return failed, None
        center, r = report.extremizer
        within = report.sup_stable_ratio <= config.ceilings.doubling
        claim = BoundReport(
            claim="doubling",
            description="sup of stable V(x, 2r) / V(x, r)",
            constants={"sup_ratio": report.sup_stable_ratio, "nu": report.nu},
            extremizers={"sup_ratio": Extremizer(x=list(center), r=r, value=report.sup_stable_ratio)},
            n_samples=report.n_stable,
            n_excluded=len(report.cells) - report.n_stable,
            ceilings={"sup_ratio": config.ceilings.doubling},
            tracked=["sup_ratio"],
            stable=True,
            within_ceilings=within,
            passed=within,
        )
        return claim, report

    def volumes(self, system: FieldSystem, config: RunConfig) -> CommandResult:
        """Finest-level volume table, log-log slope at the first source, and the doubling ladder."""
        grids = self.systems.metric_ladder(system, config)
        eps = self.systems.epsilons(system, config)
        sources = self.systems.sources(system, config)
        grid, e = grids[-1], eps[-1]
        solver = MetricSolver(system, grid, e * float(np.min(grid.spacing)), config.stencil)
        dfs = [solver.distance_field(grid.nearest(p)) for p in sources]
        table = volume_table(dfs, config.radii)
        try:
            slope = volume_slope(dfs[0], config.radii)
        except BallBoundaryError as err:
            logger.warning(f"No volume slope at {sources[0].tolist()}: {err}")
            slope = None
        result = {
            "system": system.describe(),
            "grid": grid.describe(),
            "epsilon": solver.epsilon,
            "slope": slope,
            "rows": len(table.rows),
        }
        tables = {"volumes": table.to_csv()}
        if len(grids) >= 2:
            claim, report = self.doubling_claim(system, config)
            result["doubling"] = claim.model_dump(mode="json")
            if report is not None:
                tables["doubling"] = _doubling_csv(report)
            return CommandResult(result=result, tables=tables, passed=claim.passed)
        return CommandResult(result=result, tables=tables)
