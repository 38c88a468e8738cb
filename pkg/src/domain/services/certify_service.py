import logging
from typing import Callable

from src.base.core.exceptions import ComputationError
from src.domain.models.config import RunConfig
from src.domain.models.reports import BoundReport, ClaimRecord, CommandResult, VerificationSummary
from src.domain.services.analysis_service import AnalysisService
from src.domain.services.heat_service import HeatService, Verification
from src.domain.services.metric_service import MetricService
from src.domain.services.oracle_service import OracleService
from src.domain.symbolic.fields import FieldSystem

logger = logging.getLogger(__name__)

Stage = Callable[[FieldSystem, RunConfig], Verification]


def _record(report: BoundReport) -> ClaimRecord:
    return ClaimRecord(
        claim=report.claim,
        passed=report.passed,
        stable=report.stable,
        constants=report.constants,
        detail="; ".join(report.notes),
    )


class CertifyService:
    """Hypotheses gate the conclusions: closure, Hormander rank and type (R) must pass first."""

    def __init__(self, analysis: AnalysisService, metric: MetricService, heat: HeatService, oracle: OracleService):
        self.analysis = analysis
        self.metric = metric
        self.heat = heat
        self.oracle = oracle

    def _doubling(self, system: FieldSystem, config: RunConfig) -> Verification:
        claim, _ = self.metric.doubling_claim(system, config)
        return Verification([claim])

    def stages(self) -> list[tuple[tuple[str, ...], Stage]]:
        return [
            (("doubling",), self._doubling),
            (("gaussian", "on-diagonal"), self.heat.heat_verify),
            (("poisson", "harnack"), self.heat.poisson_verify),
            (("poincare",), self.heat.poincare),
            (("riesz",), self.heat.riesz),
            (("mc-oracle",), self.oracle.mc_compare),
            (("transference", "support-qr"), self.oracle.transference),
        ]

    def certify(self, system: FieldSystem, config: RunConfig) -> CommandResult:
        analysis = self.analysis.analyze(system, config.seed, config.sources)
        records = analysis.claims()
        gate = next((r.claim for r in records if not r.passed), None)

        reports: dict[str, dict] = {}
        for claims, stage in self.stages():
            enabled = [c for c in claims if config.enabled(c)]
            if not enabled:
                continue
            if gate is not None:
                records += [
                    ClaimRecord(claim=c, passed=False, skipped=True, detail=f"not run: {gate} failed")
                    for c in enabled
                ]
                continue
            logger.info(f"Certify stage {'/'.join(enabled)}")
            try:
                verification = stage(system, config)
            except ComputationError as e:
                logger.warning(f"Stage {'/'.join(enabled)} could not be computed: {e}")
                records += [ClaimRecord(claim=c, passed=False, detail=f"{type(e).__name__}: {e}") for c in enabled]
                continue
            for report in verification.reports:
                if report.claim in enabled:
                    records.append(_record(report))
                    reports[report.claim] = report.model_dump(mode="json")

        summary = VerificationSummary.from_claims(system.describe(), records, gate)
        verdict = "PASS" if summary.passed else f"FAIL{f' at {gate}' if gate else ''}"
        logger.info(f"Certification of {system.name}: {verdict}")
        result = {
            "summary": summary.model_dump(mode="json"),
            "analysis": analysis.report(system).model_dump(mode="json"),
            "reports": reports,
        }
        return CommandResult(result=result, passed=summary.passed)
