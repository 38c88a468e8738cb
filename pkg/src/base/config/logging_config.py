import logging
import os
import sys

from src.base.utils.env_utils import is_local_development
from src.base.core.run_context import RunContextFilter
from src.base.config.splunk_handler import SplunkHECHandler

CONSOLE_FORMAT = "%(asctime)s | %(colored_levelname)s | %(filename_only)s | run=%(run_id)s | %(message)s"
FILE_FORMAT = "%(asctime)s | %(levelname)s | %(name)s | run=%(run_id)s | %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"

# chatty libraries kept at WARNING whatever the run level
QUIET_LOGGERS = ("urllib3", "requests")


class ColoredFormatter(logging.Formatter):
    """Level colours for terminals, plain level names for pipes and files."""

    COLORS = {
        "DEBUG": "\033[36m",
        "INFO": "\033[32m",
        "WARNING": "\033[33m",
        "ERROR": "\033[31m",
        "CRITICAL": "\033[35m",
    }
    RESET = "\033[0m"

    def __init__(self, fmt: str | None = None, datefmt: str | None = None, use_color: bool = True):
        super().__init__(fmt, datefmt)
        self.use_color = use_color

    def format(self, record):
        levelname = record.levelname
        color = self.COLORS.get(levelname) if self.use_color else None
        record.colored_levelname = f"{color}{levelname}{self.RESET}" if color else levelname

        # src.domain.numerics.metric -> metric
        name = getattr(record, "name", "") or "unknown"
        short = name.rsplit(".", 1)[-1]
        record.filename_only = "hormander" if short in ("__main__", "app") else short

        if not hasattr(record, "run_id"):
            record.run_id = "-"

        return super().format(record)


class LoggingConfig:
    """Root logger setup for one CLI process: console, optional file, optional Splunk."""

    splunk_handler: SplunkHECHandler | None = None

    @staticmethod
    def setup_logging(log_level: int | str = logging.INFO, log_file: str | None = None) -> None:
        """
        Configure the root logger. Handlers are only attached once per
        process; later calls just move the level.

        Args:
            log_level: level name or number for the root logger
            log_file: extra plain-text log file (defaults to HORMANDER_LOG_FILE)
        """
        logger = logging.getLogger()
        logger.setLevel(log_level)
        for name in QUIET_LOGGERS:
            logging.getLogger(name).setLevel(logging.WARNING)

        if logger.hasHandlers():
            return

        filters = [RunContextFilter()]
        LoggingConfig.add_console_logging(logger, filters)

        log_file = log_file or os.getenv("HORMANDER_LOG_FILE", "")
        if log_file:
            LoggingConfig.add_file_logging(logger, filters, log_file)

        if not is_local_development():
            LoggingConfig.add_splunk_logging(logger, filters)

    @staticmethod
    def add_console_logging(logger: logging.Logger, filters: list[logging.Filter]) -> None:
        # stdout stays free for anything a command prints
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(
            ColoredFormatter(CONSOLE_FORMAT, datefmt=DATE_FORMAT, use_color=sys.stderr.isatty())
        )
        for f in filters:
            handler.addFilter(f)
        logger.addHandler(handler)

    @staticmethod
    def add_file_logging(logger: logging.Logger, filters: list[logging.Filter], path: str) -> None:
        handler = logging.FileHandler(path, encoding="utf-8")
        handler.setFormatter(logging.Formatter(FILE_FORMAT, datefmt=DATE_FORMAT))
        for f in filters:
            handler.addFilter(f)
        logger.addHandler(handler)

    @staticmethod
    def add_splunk_logging(logger: logging.Logger, filters: list[logging.Filter]) -> None:
        splunk_token = os.getenv("SPLUNK_TOKEN", "")
        host = os.getenv("SPLUNK_HOST", "")
        url = os.getenv("SPLUNK_URL", "")
        application_name = os.getenv("SPLUNK_APPLICATION_NAME", "hormander-certify")

        if not (splunk_token and host and url):
            logger.debug("SPLUNK_TOKEN, SPLUNK_HOST or SPLUNK_URL is not set; Splunk logging is off")
            return

        LoggingConfig.splunk_handler = SplunkHECHandler(
            host=host,
            token=splunk_token,
            url=url,
            application_name=application_name,
        )
        for f in filters:
            LoggingConfig.splunk_handler.addFilter(f)
        logger.addHandler(LoggingConfig.splunk_handler)
