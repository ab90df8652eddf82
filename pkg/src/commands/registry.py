"""
Command routing

Command groups declare their subcommands on a CommandRouter; the CommandApp
includes every router and turns the registered handlers into argparse
subcommands. Each dispatch writes a RunManifest next to the command's outputs.

A handler takes (args, app) and returns a CommandResult.
"""

import os
import sys
import json
import time
import logging
import argparse
from collections import OrderedDict
from contextlib import contextmanager
from typing import Callable, Dict, Iterator, List, NamedTuple, Optional, Sequence, Tuple

from utils.config import DISPLAY_TIMEZONE
from utils.timezone_utils import format_datetime_for_display, utc_now
from .manifest import CommandResult, RunManifest, write_manifest

logger = logging.getLogger(__name__)


class Arg(NamedTuple):
    flags: Tuple[str, ...]
    options: Dict


def arg(*flags: str, **options) -> Arg:
    """Deferred add_argument call."""
    return Arg(flags, options)


class Command(NamedTuple):
    name: str
    help: str
    handler: Callable[..., CommandResult]
    arguments: List[Arg]


class CommandRouter:
    def __init__(self, tags: Optional[List[str]] = None):
        self.tags = tags or []
        self.commands: List[Command] = []

    def command(self, name: str, help: str, arguments: Sequence[Arg] = ()):
        def decorator(handler):
            self.commands.append(Command(name, help, handler, list(arguments)))
            return handler
        return decorator


class _Parser(argparse.ArgumentParser):
    """Raises instead of exiting so usage errors go through the JSON error path."""

    def error(self, message):
        raise ValueError(message)


@contextmanager
def working_directory(path: str) -> Iterator[None]:
    previous = os.getcwd()
    os.chdir(path)
    try:
        yield
    finally:
        os.chdir(previous)


class CommandApp:
    def __init__(self, prog: str = "etcn", description: str = ""):
        self.prog = prog
        self.description = description
        self._commands: "OrderedDict[str, Command]" = OrderedDict()

    def include_router(self, router: CommandRouter) -> None:
        for command in router.commands:
            if command.name in self._commands:
                raise ValueError(f"Command {command.name!r} registered twice")
            self._commands[command.name] = command

    @property
    def command_names(self) -> List[str]:
        return list(self._commands)

    def build_parser(self) -> argparse.ArgumentParser:
        parser = _Parser(prog=self.prog, description=self.description)
        sub = parser.add_subparsers(dest="command", metavar="COMMAND")
        sub.required = True
        for command in self._commands.values():
            p = sub.add_parser(command.name, help=command.help, description=command.help)
            for a in command.arguments:
                p.add_argument(*a.flags, **a.options)
        return parser

    def dispatch(self, argv: Sequence[str]) -> Tuple[CommandResult, RunManifest]:
        """Parses argv, runs the handler and writes its manifest."""
        argv = list(argv)
        args = self.build_parser().parse_args(argv)
        command = self._commands[args.command]

        started = utc_now()
        t0 = time.perf_counter()
        logger.info(f"[CLI] Running command={command.name} argv={argv}")
        result = command.handler(args, self)

        manifest = RunManifest(
            command=command.name,
            argv=argv,
            cwd=os.getcwd(),
            out_dir=str(result.out_dir.resolve()),
            config=result.config,
            seed=result.seed,
            inputs=result.inputs,
            outputs=result.outputs,
            summary=result.summary,
            started_at_utc=started.isoformat(),
            started_at_display=format_datetime_for_display(started, DISPLAY_TIMEZONE),
            display_timezone=DISPLAY_TIMEZONE,
            duration_seconds=time.perf_counter() - t0,
        )
        write_manifest(manifest)
        return result, manifest

    def run(self, argv: Optional[Sequence[str]] = None) -> int:
        """Exit code 0 when every output was written, 1 with a JSON error line on stderr otherwise."""
        argv = sys.argv[1:] if argv is None else argv
        try:
            _, manifest = self.dispatch(argv)
        except Exception as e:
            logger.error(f"[CLI] Command failed: {type(e).__name__}: {e}")
            print(json.dumps({"status": "error", "type": type(e).__name__, "message": str(e)}), file=sys.stderr)
            return 1
        print(json.dumps({"status": "ok", "command": manifest.command, "out_dir": manifest.out_dir}))
        return 0
