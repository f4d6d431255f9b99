"""Exception hierarchy shared by every toolkit module."""

from typing import Optional


class SegmentationError(ValueError):
    """Base class for all validation and runtime failures raised by the toolkit."""


class ShapeError(SegmentationError):
    """A kernel or optimizer received tensors with incompatible shapes."""


class NumericalError(SegmentationError):
    """A computation produced a non-finite value."""


class CorpusError(SegmentationError):
    """A corpus file or in-memory corpus violates its format or preconditions."""

    def __init__(self, message: str, line: Optional[int] = None, path: Optional[str] = None):
        self.message = message
        self.line = line
        self.path = path
        location = ""
        if path is not None:
            location = f"{path}"
        if line is not None:
            location = f"{location}:{line}" if location else f"line {line}"
        super().__init__(f"{location}: {message}" if location else message)


class ConfigError(SegmentationError):
    """A run or grid configuration is invalid."""

    def __init__(self, message: str, key: Optional[str] = None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class CheckpointError(SegmentationError):
    """A checkpoint file is corrupt, truncated, or from an unsupported version."""
