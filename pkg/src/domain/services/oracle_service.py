import logging

import numpy as np

from src.base.config.settings import Settings
from src.domain.models.config import RunConfig
from src.domain.models.reports import BoundReport, Extremizer
from src.domain.numerics.metric import MetricSolver
from src.domain.numerics.stochastic import (
    WordCheck,
    compare_kernels,
    kernel_histogram,
    sample_paths,
    step_halving,
    support_check_qr,
    transference_check,
)
from src.domain.services.heat_service import HeatService, Verification
from src.domain.services.level_service import LevelService
from src.domain.services.system_service import SystemService
from src.domain.symbolic.fields import FieldSystem

logger = logging.getLogger(__name__)


def _word_report(check: WordCheck, description: str) -> BoundReport:
    return BoundReport(
        claim=check.kind,
        description=description,
        constants={"pass_rate": check.pass_rate, "worst_ratio": check.worst_ratio},
        extremizers={
            "worst_ratio": Extremizer(
                x=check.worst.get("start", []), value=check.worst_ratio, label=check.worst.get("word")
            )
        },
        n_samples=check.n_words,
        ceilings={"allowance": check.allowance},
        within_ceilings=check.passed,
        passed=check.passed,
    )


class OracleService:
    def __init__(self, settings: Settings, systems: SystemService, levels: LevelService, heat: HeatService):
        self.settings = settings
        self.systems = systems
        self.levels = levels
        self.heat = heat

    def mc_compare(self, system: FieldSystem, config: RunConfig) -> Verification:
        """
        Histogram of simulated endpoints against the PDE kernel on the finest
        heat level, with the step-halving shift of the endpoint moments
        reported next to the TV.
        """
        level = self.levels.heat_levels(system, config)[-1]
        y = level.sources[0]
        x0 = level.grid.node(y)
        t = config.times[-1]
        snapshot = self.heat.kernel(level, y, t)
        batch = sample_paths(
            system,
            x0,
            t,
            config.n_steps,
            config.n_paths,
            config.seed,
            grid=level.grid,
            block_size=self.settings.mc_block_size,
            workers=config.workers,
        )
        halving = step_halving(
            system,
            x0,
            t,
            config.n_steps,
            min(config.n_paths, self.settings.step_check_paths),
            config.seed + 1,
            grid=level.grid,
            block_size=self.settings.mc_block_size,
            workers=config.workers,
        )
        hist = kernel_histogram(batch, level.grid)
        tv = compare_kernels(hist, snapshot)
        passed = tv <= config.ceilings.mc_tv and batch.escaped == 0
        logger.info(
            f"Monte-Carlo oracle: TV={tv:.4f} over {batch.n_paths} paths, {batch.escaped} escaped, "
            f"step halving {halving:.2f} standard errors"
        )
        notes = []
        if halving >= 1.0:
            notes.append(
                f"halving the step moves endpoint second moments by {halving:.2f} standard errors; "
                "raise --n-steps"
            )
        report = BoundReport(
            claim="mc-oracle",
            description="total variation between simulated endpoints and the PDE heat kernel",
            constants={
                "tv": tv,
                "step_halving": halving,
                "escaped": float(batch.escaped),
                "outside": float(hist.n_outside),
            },
            extremizers={"tv": Extremizer(x=x0.tolist(), t=t, value=tv)},
            n_samples=batch.n_paths,
            ceilings={"tv": config.ceilings.mc_tv},
            within_ceilings=passed,
            passed=passed,
            notes=notes,
        )
        diagnostics = [
            {
                "grid": level.grid.describe(),
                "batch": batch.describe(),
                "kernel": snapshot.describe(),
                "step_halving": halving,
            }
        ]
        tables = {"mc_histogram": hist.to_csv(), "mc_kernel": snapshot.to_csv()}
        return Verification([report], diagnostics, tables)

    def transference(self, system: FieldSystem, config: RunConfig) -> Verification:
        """Random horizontal words from the first source, plus the support check at r = max_len / 2."""
        grid = self.systems.metric_ladder(system, config)[-1]
        eps = self.systems.epsilons(system, config)[-1] * float(np.min(grid.spacing))
        source = grid.nearest(self.systems.sources(system, config)[0])
        df = MetricSolver(system, grid, eps, config.stencil).distance_field(source)
        allowance = config.ceilings.transference
        words = transference_check(system, df, config.n_words, config.max_len, config.seed, allowance)
        support = support_check_qr(system, df, config.max_len / 2, config.n_words, config.seed + 1, allowance)
        reports = []
        if config.enabled("transference"):
            reports.append(_word_report(words, "d(x, word(x)) against the word length"))
        if config.enabled("support-qr"):
            reports.append(_word_report(support, "endpoints of words of length at most r stay in B(x, r)"))
        diagnostics = [
            {
                "grid": grid.describe(),
                "epsilon": eps,
                "transference": words.describe(),
                "support": support.describe(),
            }
        ]
        return Verification(reports, diagnostics, {"transference": words.to_csv()})
