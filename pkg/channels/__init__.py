"""
LupiSeg Channels Package

Input layer of the system. Today there is one channel, the command line,
but commands are written against a small contract so another surface
(a job queue, a notebook helper) can drive them the same way.

Architecture:
    1. BaseCommand - ABC defining the subcommand contract
    2. CommandContext - resolved config, hash, settings and run directory
    3. CommandRouter - parses argv, resolves config, runs, maps failures to exit codes

ADDING A NEW COMMAND:
=====================
1. Subclass BaseCommand in channels/cli/commands.py
2. Add the instance to COMMANDS
3. Document its flags in docs/cli.md

Example:
    from channels import BaseCommand, CommandContext

    class CountCommand(BaseCommand):
        name = "count"
        help = "Count patches in an archive"

        def add_arguments(self, parser) -> None:
            parser.add_argument("--archive")

        def run(self, ctx: CommandContext) -> int:
            ...
            return 0
"""
from .base import BaseCommand, CommandContext
from .router import CommandRouter, exit_code_for

__all__ = [
    "BaseCommand",
    "CommandContext",
    "CommandRouter",
    "exit_code_for",
]
