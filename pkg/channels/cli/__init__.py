"""
Command-Line Channel

Usage:
    python main.py --config configs/desk.yaml synth
    python -m channels.cli extract --out data/archive
"""
from typing import Optional, Sequence

from channels.router import CommandRouter
from .commands import COMMANDS


def build_router() -> CommandRouter:
    return CommandRouter(COMMANDS)


def main(argv: Optional[Sequence[str]] = None) -> int:
    return build_router().route(argv)


__all__ = ["build_router", "main", "COMMANDS"]
