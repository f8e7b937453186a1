"""
LupiSeg Common Package

Shared plumbing used by every other package: the exception hierarchy,
structured logging setup and seeded RNG derivation.

Usage:
    from common.errors import ArgumentError, DataError
    from common.logging import configure_logging
    from common.rng import derive_rng
"""
from .errors import (
    LupiSegError,
    ArgumentError,
    ChannelMismatchError,
    ConfigError,
    DataError,
    ImageFormatError,
    PairingError,
    ArchiveError,
    CheckpointError,
    NumericError,
    DegenerateVarianceError,
    ExperimentAbortedError,
    DegenerateStretchWarning,
)
from .rng import derive_rng, derive_seed

__all__ = [
    "LupiSegError",
    "ArgumentError",
    "ChannelMismatchError",
    "ConfigError",
    "DataError",
    "ImageFormatError",
    "PairingError",
    "ArchiveError",
    "CheckpointError",
    "NumericError",
    "DegenerateVarianceError",
    "ExperimentAbortedError",
    "DegenerateStretchWarning",
    "derive_rng",
    "derive_seed",
]
