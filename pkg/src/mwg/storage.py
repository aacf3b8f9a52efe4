"""Pluggable key/value persistence, dirty tracking, and LRU caching.

A ChunkSpace is the unit-of-work layer: decoded chunks load on demand,
modifications accumulate in a dirty set that supersedes the backend until
save(), and clean entries live in an LRU cache sized in chunks. Backends
only need get/put/remove/items over raw bytes; an in-memory map and an
append-only log file are provided.
"""

from __future__ import annotations

import logging
import os
import struct
from collections import OrderedDict
from typing import Iterator

from .errors import CorruptionError
from .model import (
    ChunkKey,
    ChunkKind,
    SessionMeta,
    StateChunk,
    deserialize_chunk,
    encode_key,
    serialize_chunk,
)
from .timetree import TimeTree
from .worlds import GlobalWorldMap, LocalWorldMap

logger = logging.getLogger(__name__)

DEFAULT_CACHE_CAPACITY = 100_000


class ChunkStoreBackend:
    """Minimal byte-level store contract: get/put/remove/items."""

    name = "abstract"
    durable = False

    def get(self, key: bytes) -> bytes | None:
        raise NotImplementedError

    def put(self, key: bytes, value: bytes) -> None:
        raise NotImplementedError

    def remove(self, key: bytes) -> None:
        raise NotImplementedError

    def items(self) -> Iterator[tuple[bytes, bytes]]:
        raise NotImplementedError

    def flush(self) -> None:
        pass

    def close(self) -> None:
        pass


class MemoryBackend(ChunkStoreBackend):
    name = "memory"
    durable = False

    def __init__(self):
        self._data: dict[bytes, bytes] = {}

    def get(self, key: bytes) -> bytes | None:
        return self._data.get(key)

    def put(self, key: bytes, value: bytes) -> None:
        self._data[key] = value

    def remove(self, key: bytes) -> None:
        self._data.pop(key, None)

    def items(self) -> Iterator[tuple[bytes, bytes]]:
        return iter(self._data.items())

    def __len__(self) -> int:
        return len(self._data)


class CountingBackend(ChunkStoreBackend):
    """Wrapper counting physical operations; used by tests and benches."""

    def __init__(self, inner: ChunkStoreBackend):
        self.inner = inner
        self.name = f"counting({inner.name})"
        self.durable = inner.durable
        self.reads = 0
        self.writes = 0
        self.removes = 0

    def get(self, key: bytes) -> bytes | None:
        self.reads += 1
        return self.inner.get(key)

    def put(self, key: bytes, value: bytes) -> None:
        self.writes += 1
        self.inner.put(key, value)

    def remove(self, key: bytes) -> None:
        self.removes += 1
        self.inner.remove(key)

    def items(self) -> Iterator[tuple[bytes, bytes]]:
        return self.inner.items()

    def flush(self) -> None:
        self.inner.flush()

    def close(self) -> None:
        self.inner.close()


_LEN = struct.Struct("<I")
_DELETE_MARKER = 0xFFFFFFFF


class AppendLogBackend(ChunkStoreBackend):
    """Append-only log file; latest record per key wins.

    Record: len(key) || key || len(value) || value, 32-bit little-endian
    lengths. A value length of 0xFFFFFFFF marks a deletion and carries no
    value bytes. A truncated trailing record (torn write) is discarded
    with a warning on open and the file is repaired to the last complete
    record. When the number of superseded records crosses
    compact_threshold, flush() rewrites the log with live records only.
    """

    name = "append-log"
    durable = True

    def __init__(self, path: str, compact_threshold: int = 10_000):
        self.path = str(path)
        self.compact_threshold = compact_threshold
        self._data: dict[bytes, bytes] = {}
        self._dead = 0
        valid_end = self._replay()
        actual = os.path.getsize(self.path) if os.path.exists(self.path) else 0
        if valid_end < actual:
            logger.warning(
                "truncating %s: partial trailing record (%d of %d bytes valid)",
                self.path, valid_end, actual,
            )
            with open(self.path, "r+b") as fh:
                fh.truncate(valid_end)
        self._fh = open(self.path, "ab")

    def _replay(self) -> int:
        """Load complete records; returns the offset of the last one's end."""
        if not os.path.exists(self.path):
            with open(self.path, "wb"):
                pass
            return 0
        valid_end = 0
        with open(self.path, "rb") as fh:
            raw = fh.read()
        offset = 0
        total = len(raw)
        while offset < total:
            if offset + 4 > total:
                break
            (key_len,) = _LEN.unpack_from(raw, offset)
            if offset + 4 + key_len + 4 > total:
                break
            key = raw[offset + 4 : offset + 4 + key_len]
            (value_len,) = _LEN.unpack_from(raw, offset + 4 + key_len)
            if value_len == _DELETE_MARKER:
                record_end = offset + 4 + key_len + 4
                if record_end > total:
                    break
                if key in self._data:
                    del self._data[key]
                    self._dead += 2  # the delete and what it killed
                offset = record_end
            else:
                record_end = offset + 4 + key_len + 4 + value_len
                if record_end > total:
                    break
                if key in self._data:
                    self._dead += 1
                self._data[key] = raw[offset + 4 + key_len + 4 : record_end]
                offset = record_end
            valid_end = offset
        return valid_end

    def get(self, key: bytes) -> bytes | None:
        return self._data.get(key)

    def put(self, key: bytes, value: bytes) -> None:
        if key in self._data:
            self._dead += 1
        self._fh.write(_LEN.pack(len(key)) + key + _LEN.pack(len(value)) + value)
        self._data[key] = value

    def remove(self, key: bytes) -> None:
        if key in self._data:
            self._dead += 2
            del self._data[key]
        self._fh.write(_LEN.pack(len(key)) + key + _LEN.pack(_DELETE_MARKER))

    def items(self) -> Iterator[tuple[bytes, bytes]]:
        return iter(self._data.items())

    def __len__(self) -> int:
        return len(self._data)

    def flush(self) -> None:
        self._fh.flush()
        if self._dead >= self.compact_threshold:
            self.compact()

    def compact(self) -> None:
        """Rewrite the log with live records only."""
        tmp_path = self.path + ".compact"
        with open(tmp_path, "wb") as tmp:
            for key, value in self._data.items():
                tmp.write(_LEN.pack(len(key)) + key + _LEN.pack(len(value)) + value)
            tmp.flush()
            os.fsync(tmp.fileno())
        self._fh.close()
        os.replace(tmp_path, self.path)
        self._fh = open(self.path, "ab")
        self._dead = 0

    def close(self) -> None:
        if not self._fh.closed:
            self._fh.flush()
            self._fh.close()


def decode_value(key: ChunkKey, raw: bytes):
    """Decode a stored payload according to the key's chunk kind."""
    try:
        kind = key.kind
        if kind == ChunkKind.STATE:
            return deserialize_chunk(raw)
        if kind == ChunkKind.TIME_TREE:
            return TimeTree.deserialize(raw, node=key.node, world=key.world)
        if kind == ChunkKind.WORLD_MAP:
            return LocalWorldMap.deserialize(raw, node=key.node)
        if kind == ChunkKind.GLOBAL_WORLD_MAP:
            return GlobalWorldMap.deserialize(raw)
        return SessionMeta.deserialize(raw)
    except CorruptionError as exc:
        raise CorruptionError(str(exc), key=key) from exc


def encode_value(value) -> bytes:
    if isinstance(value, StateChunk):
        return serialize_chunk(value)
    return value.serialize()


class ChunkSpace:
    """Unit-of-work cache over a backend.

    Dirty entries live outside the LRU and are never evicted; they
    supersede the backend until save(). Clean entries are evicted
    least-recently-used once the cache exceeds its capacity (counted in
    chunks; capacity 0 disables caching of clean entries entirely).
    """

    def __init__(self, backend: ChunkStoreBackend | None = None,
                 cache_capacity: int = DEFAULT_CACHE_CAPACITY):
        if cache_capacity < 0:
            raise ValueError("cache capacity must be >= 0")
        self.backend = backend if backend is not None else MemoryBackend()
        self.cache_capacity = cache_capacity
        self._cache: OrderedDict[ChunkKey, object] = OrderedDict()
        self._dirty: dict[ChunkKey, object] = {}

    def get(self, key: ChunkKey):
        """Return the decoded chunk at key, or None when absent."""
        value = self._dirty.get(key)
        if value is not None:
            return value
        cache = self._cache
        value = cache.get(key)
        if value is not None:
            cache.move_to_end(key)
            return value
        raw = self.backend.get(encode_key(key))
        if raw is None:
            return None
        value = decode_value(key, raw)
        if self.cache_capacity > 0:
            cache[key] = value
            while len(cache) > self.cache_capacity:
                cache.popitem(last=False)
        return value

    def put_dirty(self, key: ChunkKey, value) -> None:
        self._dirty[key] = value
        self._cache.pop(key, None)

    def save(self) -> int:
        """Write every dirty chunk to the backend; returns the count.

        On backend failure the dirty set is preserved, so a retried save
        rewrites everything (at-least-once semantics).
        """
        backend = self.backend
        written = 0
        for key, value in self._dirty.items():
            backend.put(encode_key(key), encode_value(value))
            written += 1
        backend.flush()
        cache = self._cache
        for key, value in self._dirty.items():
            if hasattr(value, "dirty"):
                value.dirty = False
            if self.cache_capacity > 0:
                cache[key] = value
                cache.move_to_end(key)
        self._dirty.clear()
        while len(cache) > self.cache_capacity:
            cache.popitem(last=False)
        return written

    def dirty_keys(self) -> set[ChunkKey]:
        return set(self._dirty)

    def dirty_count(self) -> int:
        return len(self._dirty)

    def drop_clean(self) -> None:
        """Evict every clean entry (dirty ones must survive)."""
        self._cache.clear()

    def close(self) -> None:
        self.backend.close()
