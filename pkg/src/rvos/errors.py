"""Exception hierarchy shared by every rvos module."""

from __future__ import annotations


class RvosError(Exception):
    """Base class for all library errors."""


# geometry
class EmptyMask(RvosError, ValueError):
    pass


class OutOfBounds(RvosError, ValueError):
    pass


class DimensionMismatch(RvosError, ValueError):
    pass


class MaskFormatError(RvosError, ValueError):
    def __init__(self, message: str, path: str | None = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


# answer codec
class ParseError(RvosError, ValueError):
    def __init__(self, message: str, offset: int):
        self.offset = offset
        super().__init__(f"{message} (at byte {offset})")


class LabelError(RvosError, ValueError):
    pass


class BoxError(RvosError, ValueError):
    pass


# matching
class NonFiniteCost(RvosError, ValueError):
    pass


# difficulty
class ScoreOutOfRange(RvosError, ValueError):
    pass


class MissingDict(RvosError, ValueError):
    pass


class MissingKey(RvosError, KeyError):
    pass


# sampler
class EmptyIntervalList(RvosError, ValueError):
    pass


class InvalidInterval(RvosError, ValueError):
    pass


class EmptyPercentages(RvosError, ValueError):
    pass


class PercentOutOfRange(RvosError, ValueError):
    pass


# metrics
class LengthMismatch(RvosError, ValueError):
    pass


class EmptyList(RvosError, ValueError):
    pass


# backends
class BackendError(RvosError):
    """A model backend failed. ``kind`` is one of timeout, malformed, http,
    out_of_range, or the name of a stage-specific failure."""

    def __init__(self, kind: str, message: str = "", *, status: int | None = None,
                 round_index: int | None = None):
        self.kind = kind
        self.status = status
        self.round_index = round_index
        detail = f"[{kind}]"
        if status is not None:
            detail += f" HTTP {status}"
        if round_index is not None:
            detail += f" round {round_index}"
        super().__init__(f"{detail} {message}".strip())


class OutOfRange(BackendError):
    def __init__(self, message: str = ""):
        super().__init__("out_of_range", message)


class TraceExhausted(BackendError):
    def __init__(self, message: str = ""):
        super().__init__("trace_exhausted", message)


class NoCandidate(BackendError):
    def __init__(self, message: str = ""):
        super().__init__("no_candidate", message)


# pipeline
class ConfigError(RvosError, ValueError):
    pass


class ManifestError(RvosError, ValueError):
    def __init__(self, message: str, path: str | None = None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class MissingFrame(RvosError, FileNotFoundError):
    def __init__(self, path: str):
        self.path = path
        super().__init__(f"missing file: {path}")
