import json
import logging
from pathlib import Path

from src.base.config.settings import Settings
from src.domain.models.config import RunConfig
from src.domain.models.reports import CommandResult, ReportEnvelope

logger = logging.getLogger(__name__)


class ReportWriter:
    """
    Writes `<command>.json` and one `<name>.csv` per table under --out.
    JSON keys are sorted and carry no timestamps, so identical configs give
    byte-identical files; non-finite floats are written as null.
    """

    def __init__(self, settings: Settings):
        self.settings = settings

    def envelope(self, config: RunConfig, result: CommandResult) -> ReportEnvelope:
        return ReportEnvelope(
            command=config.command,
            config_hash=config.config_hash(),
            settings=self.settings.as_dict(),
            config=config.canonical(),
            result=result.result,
            passed=result.passed,
        )

    def render(self, envelope: ReportEnvelope) -> str:
        data = json.loads(envelope.model_dump_json())
        return json.dumps(data, sort_keys=True, indent=2) + "\n"

    def write(self, config: RunConfig, result: CommandResult) -> Path:
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
        path = out / f"{config.command}.json"
        path.write_text(self.render(self.envelope(config, result)))
        for name, table in sorted(result.tables.items()):
            (out / f"{name}.csv").write_text(table)
        logger.info(f"Wrote {path} and {len(result.tables)} tables")
        return path
