"""
LupiSeg Exception Hierarchy

Every error raised on purpose by the library derives from LupiSegError.
The CLI router maps the families below to process exit codes:

    ConfigError   -> 2
    DataError     -> 3   (OSError is treated the same way)
    NumericError  -> 4
    anything else -> 1

ADDING A NEW ERROR:
===================
Subclass the closest family so the exit-code mapping keeps working:

    class MyDataProblem(DataError):
        '''What went wrong with the data.'''
"""
from typing import Any, List, Optional


class LupiSegError(Exception):
    """Base class for all library errors."""


class ArgumentError(LupiSegError, ValueError):
    """Invalid argument: shape mismatch, bad range, indivisible dims."""


class ChannelMismatchError(ArgumentError):
    """Input channel count differs from the model's declared in_channels."""


class ConfigError(LupiSegError):
    """
    Invalid run configuration.

    key_path points at the offending key, e.g. "train.alpha".
    """

    def __init__(self, message: str, key_path: Optional[str] = None):
        self.key_path = key_path
        self.detail = message
        super().__init__(f"{key_path}: {message}" if key_path else message)

    def __reduce__(self):
        return (self.__class__, (self.detail, self.key_path))


class DataError(LupiSegError):
    """Problem with input data on disk or in memory."""


class ImageFormatError(DataError):
    """Raster is not a supported grayscale format or bit depth."""


class PairingError(DataError):
    """Raw and enhanced patches are not index-aligned."""


class ArchiveError(DataError):
    """Patch archive manifest disagrees with the files it describes."""


class CheckpointError(DataError):
    """Checkpoint file is truncated, corrupt or of an unknown format."""


class NumericError(LupiSegError, ArithmeticError):
    """Non-finite values or a numerically degenerate computation."""


class DegenerateVarianceError(NumericError):
    """Batch normalization in train mode over a single element."""


class ExperimentAbortedError(LupiSegError):
    """
    An experiment stopped on a training failure.

    partial_results holds whatever was completed before the failure so the
    caller can still report it. cause is the failure itself; unlike
    __cause__ it survives pickling out of a worker process.
    """

    def __init__(
        self,
        message: str,
        partial_results: Optional[List[Any]] = None,
        cause: Optional[BaseException] = None,
    ):
        super().__init__(message)
        self.partial_results = list(partial_results or [])
        self.cause = cause

    def __reduce__(self):
        return (self.__class__, (str(self), self.partial_results, self.cause))


class DegenerateStretchWarning(UserWarning):
    """Contrast stretch over a zero dynamic range; output is all zeros."""
