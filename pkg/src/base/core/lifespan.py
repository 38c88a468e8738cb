import logging
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Iterator

from src.base.config.logging_config import LoggingConfig
from src.base.config.settings import Settings
from src.domain.services.analysis_service import AnalysisService
from src.domain.services.certify_service import CertifyService
from src.domain.services.heat_service import HeatService
from src.domain.services.level_service import LevelService
from src.domain.services.metric_service import MetricService
from src.domain.services.oracle_service import OracleService
from src.domain.services.report_writer import ReportWriter
from src.domain.services.system_service import SystemService

logger = logging.getLogger(__name__)


@dataclass
class Services:
    settings: Settings
    systems: SystemService
    analysis: AnalysisService
    metric: MetricService
    heat: HeatService
    oracle: OracleService
    certify: CertifyService
    writer: ReportWriter


def build_services(settings: Settings) -> Services:
    systems = SystemService()
    levels = LevelService(settings, systems)
    analysis = AnalysisService(settings)
    metric = MetricService(systems)
    heat = HeatService(settings, levels)
    oracle = OracleService(settings, systems, levels, heat)
    return Services(
        settings=settings,
        systems=systems,
        analysis=analysis,
        metric=metric,
        heat=heat,
        oracle=oracle,
        certify=CertifyService(analysis, metric, heat, oracle),
        writer=ReportWriter(settings),
    )


@contextmanager
def lifespan(settings: Settings) -> Iterator[Services]:
    """Centralized initialization and teardown for one CLI run."""
    logger.debug("Starting run lifespan...")

    # Start Splunk handler worker (if configured)
    if LoggingConfig.splunk_handler:
        LoggingConfig.splunk_handler.start()
        logger.info("Splunk HEC handler started.")

    services = build_services(settings)
    logger.debug("Services initialized.")
    try:
        yield services  # --- the command runs here ---
    finally:
        # Stop Splunk handler (flush remaining logs)
        if LoggingConfig.splunk_handler:
            logger.info("Stopping Splunk HEC handler...")
            LoggingConfig.splunk_handler.stop()
