import argparse
import logging
from dataclasses import dataclass, field
from typing import Any, Callable

logger = logging.getLogger(__name__)

Handler = Callable[[argparse.Namespace, Any], int]


@dataclass
class _Command:
    name: str
    help: str
    handler: Handler
    arguments: list[tuple[tuple[str, ...], dict]] = field(default_factory=list)


class CommandRouter:
    """
    Decorator-registered subcommands on top of argparse. Arguments declared
    with `argument` are shared by every subcommand; `command(..., arguments=)`
    adds per-command ones.
    """

    def __init__(self, prog: str, description: str = ""):
        self.prog = prog
        self.description = description
        self._shared: list[tuple[tuple[str, ...], dict]] = []
        self._commands: dict[str, _Command] = {}

    def argument(self, *flags: str, **kwargs) -> None:
        self._shared.append((flags, kwargs))

    def command(self, name: str, help: str = "", arguments: list[tuple[tuple[str, ...], dict]] | None = None):
        def decorator(func: Handler) -> Handler:
            if name in self._commands:
                raise ValueError(f"command {name!r} registered twice")
            self._commands[name] = _Command(name, help, func, arguments or [])
            return func

        return decorator

    @property
    def commands(self) -> list[str]:
        return list(self._commands)

    def build_parser(self) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(prog=self.prog, description=self.description)
        subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
        for cmd in self._commands.values():
            sub = subparsers.add_parser(cmd.name, help=cmd.help, description=cmd.help)
            for flags, kwargs in self._shared + cmd.arguments:
                sub.add_argument(*flags, **kwargs)
        return parser

    def parse(self, argv: list[str] | None = None) -> argparse.Namespace:
        return self.build_parser().parse_args(argv)

    def dispatch(self, args: argparse.Namespace, services: Any) -> int:
        cmd = self._commands[args.command]
        logger.debug(f"Dispatching {cmd.name}")
        return cmd.handler(args, services)
