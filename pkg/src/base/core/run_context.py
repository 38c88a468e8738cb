import logging
from contextlib import contextmanager
from contextvars import ContextVar
from typing import Iterator

# Context variable to store the active run id (prefix of the config hash)
run_id: ContextVar[str] = ContextVar("run_id", default="")


@contextmanager
def run_scope(config_hash: str) -> Iterator[str]:
    """Bind a run id to every log record emitted inside the block."""
    run_id_value = config_hash[:12]
    token = run_id.set(run_id_value)

    logger = logging.getLogger(__name__)
    logger.info("Assigned run id to invocation")

    try:
        yield run_id_value
    finally:
        run_id.reset(token)


class RunContextFilter(logging.Filter):
    """Logging filter to add the run id to log records."""

    def filter(self, record):
        record.run_id = run_id.get("") or "-"
        return True
