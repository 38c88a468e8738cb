import logging
import sys

from dotenv import load_dotenv

from src.base.config.logging_config import LoggingConfig
from src.base.config.settings import get_settings
from src.base.core.lifespan import lifespan
from src.domain.routes.commands import router

logger = logging.getLogger(__name__)


def main(argv: list[str] | None = None) -> int:
    # Load environment variables
    load_dotenv()
    settings = get_settings()

    args = router.parse(argv)

    # --- Logging configuration ---
    LoggingConfig.setup_logging(args.log_level.upper() if args.log_level else settings.log_level)
    logger.info(f"Starting hormander {args.command}")

    with lifespan(settings) as services:
        return router.dispatch(args, services)


if __name__ == "__main__":
    sys.exit(main())
