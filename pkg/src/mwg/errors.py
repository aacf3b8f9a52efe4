"""Exception types shared across the engine."""


class MwgError(Exception):
    """Base class for all engine errors."""


class EncodingLimitError(MwgError):
    """A name or payload exceeds a hard limit of the binary encoding."""


class CorruptionError(MwgError):
    """Stored bytes cannot be decoded, or an index points at a missing chunk."""

    def __init__(self, message: str, key=None):
        super().__init__(message if key is None else f"{message} (key={key})")
        self.key = key


class UnknownWorldError(MwgError):
    """A world id was used before being registered via diverge."""


class UnknownIndexError(MwgError):
    """A named index was queried before anything was added to it."""


class NotConnectedError(MwgError):
    """A graph operation was attempted before connect() or after close()."""


class BenchmarkInvalidError(MwgError):
    """A benchmark's embedded functional verification failed; timings are void."""
