import functools
import logging
from typing import Any, Callable

from pydantic import ValidationError

from src.base.core.exceptions import HormanderError
from src.base.core.run_context import run_scope

logger = logging.getLogger()

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_INVALID = 2


def command_endpoint(config_factory: Callable[[Any, Any], Any]):
    """
    Decorator for CLI commands.
    Builds the run config, binds the run id, writes the report and maps
    errors to exit codes: 0 pass, 1 failed verification, 2 invalid input or
    a computation that could not be carried out.
    """

    def decorator(func):
        @functools.wraps(func)
        def wrapper(args, services) -> int:
            try:
                config = config_factory(args, services.settings)
            except ValidationError as e:
                logger.error("Invalid configuration for %s: %s", args.command, e)
                return EXIT_INVALID
            except HormanderError as e:
                logger.error("Invalid input for %s: %s", args.command, e)
                return e.exit_code

            with run_scope(config.config_hash()):
                try:
                    result = func(config, services)
                    services.writer.write(config, result)
                except HormanderError as e:
                    logger.error("%s failed: %s", args.command, e)
                    return e.exit_code
                except Exception as e:
                    logger.error("%s failed: %s", args.command, str(e), exc_info=True)
                    return EXIT_INVALID

                if result.passed is False:
                    logger.warning("%s: verification failed", args.command)
                    return EXIT_FAILED
                return EXIT_OK

        return wrapper

    return decorator
