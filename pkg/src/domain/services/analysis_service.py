import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from src.base.config.settings import Settings
from src.domain.models.reports import ClaimRecord, ClosureReport
from src.domain.symbolic.fields import FieldSystem
from src.domain.symbolic.liealg import (
    ClosureResult,
    HormanderVerdict,
    Nilpotency,
    TypeRVerdict,
    close,
    hormander,
    nilpotency,
    type_r,
)
from src.domain.symbolic.linear import SparseRow

logger = logging.getLogger(__name__)


def _decimal_points(points: Sequence[Sequence[float]] | None) -> list[tuple[Fraction, ...]]:
    return [tuple(Fraction(str(v)) for v in p) for p in points or ()]


def _row_text(row: SparseRow) -> dict[str, str]:
    return {f"b{m + 1}": str(c) for m, c in sorted(row.items())}


@dataclass
class Analysis:
    closure: ClosureResult
    nilpotency: Nilpotency | None = None
    type_r: TypeRVerdict | None = None
    hormander: HormanderVerdict | None = None

    def claims(self) -> list[ClaimRecord]:
        records = [
            ClaimRecord(
                claim="closure",
                passed=self.closure.status.closed,
                constants={"dim": float(self.closure.dim)},
                detail=self.closure.status.describe(),
            )
        ]
        if self.hormander is not None:
            records.append(
                ClaimRecord(
                    claim="hormander",
                    passed=self.hormander.passed,
                    constants={"min_rank": float(self.hormander.min_rank)},
                    detail=self.hormander.describe(),
                )
            )
        if self.type_r is not None:
            records.append(
                ClaimRecord(claim="type-r", passed=self.type_r.passed, detail=self.type_r.describe())
            )
        return records

    def report(self, system: FieldSystem) -> ClosureReport:
        c = self.closure
        constants = {
            f"[b{i + 1},b{j + 1}]": _row_text(row) for (i, j), row in sorted(c.structure.items()) if i < j
        }
        return ClosureReport(
            system=system.describe(),
            status=c.status.describe(),
            dim=c.dim,
            basis=[x.to_text() for x in c.basis],
            depths=list(c.bracket_depth),
            structure_constants=constants,
            generator_coordinates=[_row_text(row) for row in c.generator_coordinates],
            lower_central_series=list(self.nilpotency.series_dims) if self.nilpotency else [],
            nilpotency=self.nilpotency.describe() if self.nilpotency else None,
            type_r=self.type_r.describe() if self.type_r else None,
            type_r_passed=self.type_r.passed if self.type_r else None,
            hormander=self.hormander.describe() if self.hormander else None,
            hormander_passed=self.hormander.passed if self.hormander else None,
            min_rank=self.hormander.min_rank if self.hormander else None,
        )


class AnalysisService:
    def __init__(self, settings: Settings):
        self.settings = settings

    def analyze(
        self, system: FieldSystem, seed: int = 0, points: Sequence[Sequence[float]] | None = None
    ) -> Analysis:
        """
        Closure first; the verdicts need a closed algebra and are skipped
        otherwise. `points` (the --sources) join the Hormander rank check as
        exact decimals.
        """
        closure = close(system, self.settings.max_dim, self.settings.max_depth)
        analysis = Analysis(closure)
        if not closure.status.closed:
            logger.warning(f"{system.name}: {closure.status.describe()}; verdicts skipped")
            return analysis
        analysis.nilpotency = nilpotency(closure)
        analysis.hormander = hormander(closure, system, points=_decimal_points(points), seed=seed)
        analysis.type_r = type_r(
            closure, self.settings.type_r_samples, self.settings.type_r_tol, seed=seed
        )
        logger.info(
            f"{system.name}: {analysis.nilpotency.describe()}, {analysis.type_r.describe()}, "
            f"{analysis.hormander.describe()}"
        )
        return analysis
