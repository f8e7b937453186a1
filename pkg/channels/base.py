"""
Base Command Abstract Classes

This module defines the contract for every CLI subcommand. Commands are
responsible for:
1. Declaring their flags
2. Mapping flags onto RunConfig overrides (flags win over the file)
3. Doing the work and writing artifacts into the run directory

KEY CONCEPTS:
=============
- BaseCommand: the contract every subcommand implements
- CommandContext: resolved config, hash, settings and run directory handed
  to a command by the router

ADDING A NEW COMMAND:
=====================

Step 1: Implement the contract

    ```python
    from channels.base import BaseCommand, CommandContext

    class CountCommand(BaseCommand):
        '''
        COPY-PASTE TEMPLATE for a new subcommand.
        '''
        name = "count"
        help = "Count patches in an archive"

        def add_arguments(self, parser) -> None:
            parser.add_argument("--archive", help="Patch archive directory")

        def run(self, ctx: CommandContext) -> int:
            split = read_archive(ctx.args.archive or ctx.config.paths.archive)
            ctx.echo(f"{len(split.train_patches)} train patches")
            return 0
    ```

Step 2: Register it
    - Add an instance to COMMANDS in channels/cli/commands.py
    - Document every flag in docs/cli.md (a test audits this)
"""
import argparse
import sys
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, TextIO

from config.run_config import RunConfig
from config.settings import Settings


@dataclass
class CommandContext:
    """
    Everything a command needs at run time.

    Attributes:
        args: Parsed command-line arguments
        config: RunConfig after flag overrides
        config_hash: SHA-256 of the resolved config
        settings: Environment settings
        out: Stream for the one-line human summary
    """
    args: argparse.Namespace
    config: RunConfig
    config_hash: str
    settings: Settings
    out: TextIO = field(default_factory=lambda: sys.stdout)
    _run_dir: Optional[Path] = None

    @property
    def run_dir(self) -> Path:
        """The run directory, created on first access."""
        if self._run_dir is None:
            from services.artifacts import artifact_service

            explicit = getattr(self.args, "run_dir", None)
            if explicit:
                self._run_dir = Path(explicit)
                self._run_dir.mkdir(parents=True, exist_ok=True)
            else:
                self._run_dir = artifact_service.create_run_dir(self.config_hash, self.settings.runs_dir)
            artifact_service.write_config(self._run_dir, self.config)
        return self._run_dir

    @property
    def workers(self) -> int:
        return getattr(self.args, "workers", None) or self.settings.workers

    def echo(self, line: str) -> None:
        print(line, file=self.out)


class BaseCommand(ABC):
    """
    Contract for a CLI subcommand.

    Subclasses set `name` and `help`, declare flags in add_arguments and do
    the work in run. config_overrides maps parsed flags to dotted RunConfig
    keys; None values are ignored.
    """
    name: str = ""
    help: str = ""

    @abstractmethod
    def add_arguments(self, parser: argparse.ArgumentParser) -> None:
        """Declare the subcommand's flags."""

    def config_overrides(self, args: argparse.Namespace) -> Dict[str, Any]:
        return {}

    @abstractmethod
    def run(self, ctx: CommandContext) -> int:
        """Execute; returns the process exit code."""
