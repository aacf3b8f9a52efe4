"""mwg: an embeddable storage engine for many-world graphs.

Nodes carry typed attributes and named relation lists that evolve along
time and along forked worlds sharing their past. State is resolved on
demand from a key/value store; forking a world copies nothing.
"""

from .errors import (
    BenchmarkInvalidError,
    CorruptionError,
    EncodingLimitError,
    MwgError,
    NotConnectedError,
    UnknownIndexError,
    UnknownWorldError,
)
from .graph import GraphSession, NodeHandle
from .model import (
    ROOT_WORLD,
    AttributeValue,
    AttrType,
    ChunkKey,
    ChunkKind,
    StateChunk,
    decode_key,
    deserialize_chunk,
    encode_key,
    serialize_chunk,
)
from .resolver import Resolver
from .storage import AppendLogBackend, ChunkSpace, CountingBackend, MemoryBackend
from .timetree import TimeTree
from .worlds import GlobalWorldMap, LocalWorldMap

__version__ = "0.1.0"

__all__ = [
    "AppendLogBackend",
    "AttrType",
    "AttributeValue",
    "BenchmarkInvalidError",
    "ChunkKey",
    "ChunkKind",
    "ChunkSpace",
    "CorruptionError",
    "CountingBackend",
    "EncodingLimitError",
    "GlobalWorldMap",
    "GraphSession",
    "LocalWorldMap",
    "MemoryBackend",
    "MwgError",
    "NodeHandle",
    "NotConnectedError",
    "ROOT_WORLD",
    "Resolver",
    "StateChunk",
    "TimeTree",
    "UnknownIndexError",
    "UnknownWorldError",
    "decode_key",
    "deserialize_chunk",
    "encode_key",
    "serialize_chunk",
    "__version__",
]
