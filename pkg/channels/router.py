"""
Command Router

Bridges the command line to the subcommands. Responsible for:
1. Parsing global flags and the subcommand
2. Loading the RunConfig and applying flag overrides
3. Logging the resolved config and its hash
4. Running the command
5. Turning failures into exit codes with a one-line diagnostic

FLOW:
=====
argv -> parser -> RunConfig (+ overrides) -> CommandContext -> command.run -> exit code

EXIT CODES:
===========
    0  success
    1  unexpected failure
    2  invalid config or arguments
    3  data errors (unreadable, missing or inconsistent files)
    4  numeric failure (non-finite loss, degenerate statistics)
"""
import argparse
import logging
import sys
from typing import Dict, List, Optional, Sequence, TextIO

from common.errors import (
    ArgumentError,
    ConfigError,
    DataError,
    ExperimentAbortedError,
    NumericError,
)
from common.logging import configure_logging
from config.run_config import apply_overrides, load_run_config, log_resolved
from config.settings import get_settings
from .base import BaseCommand, CommandContext

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4

GLOBAL_FLAGS = ("--config", "--seed", "--log-level", "--run-dir")


def exit_code_for(exc: BaseException) -> int:
    """Exit code for an exception; aborted experiments use their cause."""
    if isinstance(exc, ExperimentAbortedError):
        cause = exc.cause if exc.cause is not None else exc.__cause__
        if cause is not None:
            return exit_code_for(cause)
    if isinstance(exc, (ConfigError, ArgumentError)):
        return EXIT_CONFIG
    if isinstance(exc, (DataError, OSError)):
        return EXIT_DATA
    if isinstance(exc, NumericError):
        return EXIT_NUMERIC
    return EXIT_FAILURE


class CommandRouter:
    """
    Routes argv to the registered subcommands.

    Usage:
        router = CommandRouter(COMMANDS)
        sys.exit(router.route(sys.argv[1:]))
    """

    def __init__(self, commands: Sequence[BaseCommand], prog: str = "lupiseg"):
        self.commands: Dict[str, BaseCommand] = {c.name: c for c in commands}
        self.parser = self._build_parser(prog)

    def _build_parser(self, prog: str) -> argparse.ArgumentParser:
        parser = argparse.ArgumentParser(
            prog=prog,
            description="Privileged-information segmentation: data, training, experiments and reports.",
        )
        parser.add_argument("--config", help="RunConfig YAML file (defaults apply when omitted)")
        parser.add_argument("--seed", type=int, help="Global seed; overrides every seed in the config")
        parser.add_argument("--log-level", help="Log level (default: LUPISEG_LOG_LEVEL or INFO)")
        parser.add_argument("--run-dir", help="Write artifacts here instead of a new hash-named run directory")
        subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
        subparsers.required = True
        for command in self.commands.values():
            sub = subparsers.add_parser(command.name, help=command.help, description=command.help)
            command.add_arguments(sub)
        return parser

    def flag_table(self) -> Dict[str, List[str]]:
        """Long flags per subcommand (plus "global"), without --help."""
        table = {"global": sorted(self._flags(self.parser))}
        for action in self.parser._subparsers._group_actions:  # noqa: SLF001
            for name, sub in action.choices.items():
                table[name] = sorted(self._flags(sub))
        return table

    @staticmethod
    def _flags(parser: argparse.ArgumentParser) -> List[str]:
        return [
            option
            for action in parser._actions  # noqa: SLF001
            for option in action.option_strings
            if option.startswith("--") and option != "--help"
        ]

    def route(self, argv: Optional[Sequence[str]] = None, out: Optional[TextIO] = None) -> int:
        """
        Run one command line; returns the exit code.

        Args:
            argv: Arguments without the program name
            out: Stream for command summaries (default stdout)
        """
        try:
            args = self.parser.parse_args(list(argv) if argv is not None else None)
        except SystemExit as exc:
            return int(exc.code or 0)

        command = self.commands[args.command]
        try:
            settings = get_settings()
            configure_logging(args.log_level or settings.log_level)
            config = load_run_config(args.config)
            overrides = {}
            if args.seed is not None:
                overrides.update({
                    "seed": args.seed,
                    "synthetic.seed": args.seed,
                    "train.seed": args.seed,
                    "experiment.seed": args.seed,
                })
            overrides.update(command.config_overrides(args))
            config = apply_overrides(config, overrides)
            digest = log_resolved(config, command.name)
            ctx = CommandContext(args=args, config=config, config_hash=digest, settings=settings,
                                 out=out or sys.stdout)
            return command.run(ctx)
        except Exception as exc:
            code = exit_code_for(exc)
            logger.error(
                "Command failed",
                exc_info=True,
                extra={"command": command.name, "exit_code": code, "error_type": type(exc).__name__},
            )
            print(f"lupiseg {command.name}: error: {exc}", file=sys.stderr)
            return code
