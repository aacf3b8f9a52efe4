"""Core value types and byte-level codecs for many-world graph state.

A node's value at one (world, time) viewpoint is a StateChunk: a map of
typed attributes plus named, ordered relation lists. Chunks are addressed
by 25-byte keys whose lexicographic byte order equals logical order, so
any key/value store with sorted iteration can range-scan a timeline.

Edge attributes are deliberately unsupported; model them as intermediate
nodes (an "edge node" holding the attributes, with relations to both
endpoints) without losing expressiveness.
"""

from __future__ import annotations

import base64
import struct
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterator, NamedTuple

from .errors import CorruptionError, EncodingLimitError

ROOT_WORLD = 0

TIME_MIN = -(1 << 63)
TIME_MAX = (1 << 63) - 1
TIME_BIAS = 1 << 63  # shifts signed time into u64 so byte order == numeric order

U64_MAX = (1 << 64) - 1
I32_MIN, I32_MAX = -(1 << 31), (1 << 31) - 1
MAX_NAME_BYTES = 1 << 16

_KEY_STRUCT = struct.Struct(">BQQQ")
KEY_SIZE = _KEY_STRUCT.size  # 25


class ChunkKind(IntEnum):
    STATE = 0
    TIME_TREE = 1
    WORLD_MAP = 2
    GLOBAL_WORLD_MAP = 3
    META = 4


class ChunkKey(NamedTuple):
    """Storage address of a chunk: (kind, world, time, node)."""

    kind: int
    world: int
    time: int
    node: int


def state_key(world: int, time: int, node: int) -> ChunkKey:
    return ChunkKey(ChunkKind.STATE, world, time, node)


def tree_key(world: int, node: int) -> ChunkKey:
    return ChunkKey(ChunkKind.TIME_TREE, world, 0, node)


def lwim_key(node: int) -> ChunkKey:
    return ChunkKey(ChunkKind.WORLD_MAP, 0, 0, node)


GWIM_KEY = ChunkKey(ChunkKind.GLOBAL_WORLD_MAP, 0, 0, 0)
META_KEY = ChunkKey(ChunkKind.META, 0, 0, 0)


def encode_key(key: ChunkKey) -> bytes:
    """Encode a key to its 25-byte big-endian form (time biased by 2^63)."""
    if not 0 <= key.kind <= 4:
        raise ValueError(f"invalid chunk kind {key.kind}")
    if not 0 <= key.world <= U64_MAX:
        raise ValueError(f"world out of range: {key.world}")
    if not TIME_MIN <= key.time <= TIME_MAX:
        raise ValueError(f"time out of range: {key.time}")
    if not 0 <= key.node <= U64_MAX:
        raise ValueError(f"node out of range: {key.node}")
    return _KEY_STRUCT.pack(key.kind, key.world, key.time + TIME_BIAS, key.node)


def decode_key(raw: bytes) -> ChunkKey:
    if len(raw) != KEY_SIZE:
        raise CorruptionError(f"key must be {KEY_SIZE} bytes, got {len(raw)}")
    kind, world, biased_time, node = _KEY_STRUCT.unpack(raw)
    if kind > 4:
        raise CorruptionError(f"invalid chunk kind byte {kind}")
    return ChunkKey(ChunkKind(kind), world, biased_time - TIME_BIAS, node)


class AttrType(IntEnum):
    INT = 0      # 32-bit signed
    LONG = 1     # 64-bit signed
    DOUBLE = 2   # IEEE-754 binary64
    STRING = 3   # UTF-8
    BOOL = 4
    ENUM = 5     # (registry name, 16-bit ordinal)


@dataclass(frozen=True, slots=True)
class AttributeValue:
    """A typed attribute value; the type tag survives serialization."""

    type: AttrType
    value: int | float | str | bool | tuple[str, int]

    def __post_init__(self):
        t, v = self.type, self.value
        if t == AttrType.INT:
            if not isinstance(v, int) or isinstance(v, bool) or not I32_MIN <= v <= I32_MAX:
                raise ValueError(f"INT requires a 32-bit signed integer, got {v!r}")
        elif t == AttrType.LONG:
            if not isinstance(v, int) or isinstance(v, bool) or not TIME_MIN <= v <= TIME_MAX:
                raise ValueError(f"LONG requires a 64-bit signed integer, got {v!r}")
        elif t == AttrType.DOUBLE:
            if not isinstance(v, float):
                raise ValueError(f"DOUBLE requires a float, got {v!r}")
        elif t == AttrType.STRING:
            if not isinstance(v, str):
                raise ValueError(f"STRING requires a str, got {v!r}")
        elif t == AttrType.BOOL:
            if not isinstance(v, bool):
                raise ValueError(f"BOOL requires a bool, got {v!r}")
        elif t == AttrType.ENUM:
            ok = (
                isinstance(v, tuple)
                and len(v) == 2
                and isinstance(v[0], str)
                and isinstance(v[1], int)
                and not isinstance(v[1], bool)
                and 0 <= v[1] <= 0xFFFF
            )
            if not ok:
                raise ValueError(f"ENUM requires (registry name, 16-bit ordinal), got {v!r}")
        else:
            raise ValueError(f"unknown attribute type {t!r}")

    @classmethod
    def of_int(cls, v: int) -> AttributeValue:
        return cls(AttrType.INT, v)

    @classmethod
    def of_long(cls, v: int) -> AttributeValue:
        return cls(AttrType.LONG, v)

    @classmethod
    def of_double(cls, v: float) -> AttributeValue:
        return cls(AttrType.DOUBLE, v)

    @classmethod
    def of_string(cls, v: str) -> AttributeValue:
        return cls(AttrType.STRING, v)

    @classmethod
    def of_bool(cls, v: bool) -> AttributeValue:
        return cls(AttrType.BOOL, v)

    @classmethod
    def of_enum(cls, registry: str, ordinal: int) -> AttributeValue:
        return cls(AttrType.ENUM, (registry, ordinal))

    @classmethod
    def coerce(cls, raw) -> AttributeValue:
        """Wrap a native Python value; ints map to LONG, use of_int for INT."""
        if isinstance(raw, AttributeValue):
            return raw
        if isinstance(raw, bool):
            return cls(AttrType.BOOL, raw)
        if isinstance(raw, int):
            return cls(AttrType.LONG, raw)
        if isinstance(raw, float):
            return cls(AttrType.DOUBLE, raw)
        if isinstance(raw, str):
            return cls(AttrType.STRING, raw)
        raise TypeError(f"cannot coerce {type(raw).__name__} to an attribute value")


@dataclass(slots=True)
class StateChunk:
    """Resolved value of a node at one (world, time) viewpoint.

    Attribute and relation names live in disjoint namespaces within a
    chunk. Relation lists keep insertion order and hold a node id at most
    once; removing the last member drops the relation entirely, so
    structural equality and canonical serialization coincide. A tombstone
    chunk records deletion and carries no data.
    """

    attributes: dict[str, AttributeValue] = field(default_factory=dict)
    relations: dict[str, list[int]] = field(default_factory=dict)
    tombstone: bool = False

    def set_attr(self, name: str, value: AttributeValue) -> None:
        self._check_name(name, self.relations, "relation")
        if not isinstance(value, AttributeValue):
            value = AttributeValue.coerce(value)
        self.attributes[name] = value

    def remove_attr(self, name: str) -> bool:
        return self.attributes.pop(name, None) is not None

    def add_rel(self, name: str, target: int) -> bool:
        """Append target to the named relation; False if already a member."""
        self._check_name(name, self.attributes, "attribute")
        if not 0 <= target <= U64_MAX:
            raise ValueError(f"node id out of range: {target}")
        members = self.relations.setdefault(name, [])
        if target in members:
            return False
        members.append(target)
        return True

    def remove_rel(self, name: str, target: int) -> bool:
        """Remove target from the named relation; False if not a member."""
        members = self.relations.get(name)
        if members is None or target not in members:
            return False
        members.remove(target)
        if not members:
            del self.relations[name]
        return True

    def _check_name(self, name: str, other_namespace: dict, other_label: str) -> None:
        if self.tombstone:
            raise ValueError("a tombstone chunk cannot hold data")
        if not name:
            raise ValueError("names must be non-empty")
        if name in other_namespace:
            raise ValueError(f"{name!r} already used as a {other_label} name")

    def copy(self) -> StateChunk:
        return StateChunk(
            attributes=dict(self.attributes),
            relations={name: list(ids) for name, ids in self.relations.items()},
            tombstone=self.tombstone,
        )

    @classmethod
    def make_tombstone(cls) -> StateChunk:
        return cls(tombstone=True)


def write_uvarint(out: bytearray, value: int) -> None:
    if value < 0:
        raise ValueError("varint values are unsigned")
    while value > 0x7F:
        out.append((value & 0x7F) | 0x80)
        value >>= 7
    out.append(value)


def read_uvarint(buf: bytes, offset: int) -> tuple[int, int]:
    result = 0
    shift = 0
    while True:
        if offset >= len(buf):
            raise CorruptionError("truncated varint")
        byte = buf[offset]
        offset += 1
        result |= (byte & 0x7F) << shift
        if byte < 0x80:
            return result, offset
        shift += 7
        if shift > 70:
            raise CorruptionError("varint too long")


def _write_name(out: bytearray, encoded: bytes) -> None:
    if len(encoded) > MAX_NAME_BYTES:
        raise EncodingLimitError(f"name of {len(encoded)} bytes exceeds {MAX_NAME_BYTES}")
    write_uvarint(out, len(encoded))
    out += encoded


_FLAG_TOMBSTONE = 0x01
_DOUBLE_STRUCT = struct.Struct(">d")


def serialize_chunk(chunk: StateChunk) -> bytes:
    """Canonical binary form: structurally equal chunks yield equal bytes."""
    if chunk.tombstone and (chunk.attributes or chunk.relations):
        raise ValueError("tombstone chunks must be empty")
    out = bytearray()
    out.append(_FLAG_TOMBSTONE if chunk.tombstone else 0)

    attrs = sorted((name.encode(), value) for name, value in chunk.attributes.items())
    write_uvarint(out, len(attrs))
    for name_bytes, attr in attrs:
        _write_name(out, name_bytes)
        out.append(attr.type)
        t, v = attr.type, attr.value
        if t == AttrType.INT:
            out += v.to_bytes(4, "big", signed=True)
        elif t == AttrType.LONG:
            out += v.to_bytes(8, "big", signed=True)
        elif t == AttrType.DOUBLE:
            out += _DOUBLE_STRUCT.pack(v)
        elif t == AttrType.STRING:
            encoded = v.encode()
            write_uvarint(out, len(encoded))
            out += encoded
        elif t == AttrType.BOOL:
            out.append(1 if v else 0)
        else:  # ENUM
            registry = v[0].encode()
            write_uvarint(out, len(registry))
            out += registry
            out += v[1].to_bytes(2, "big")

    rels = sorted((name.encode(), ids) for name, ids in chunk.relations.items())
    write_uvarint(out, len(rels))
    for name_bytes, ids in rels:
        _write_name(out, name_bytes)
        write_uvarint(out, len(ids))
        for node in ids:
            out += node.to_bytes(8, "big")
    return bytes(out)


def deserialize_chunk(raw: bytes) -> StateChunk:
    try:
        return _deserialize_chunk(raw)
    except CorruptionError:
        raise
    except (ValueError, OverflowError, UnicodeDecodeError) as exc:
        raise CorruptionError(f"malformed chunk payload: {exc}") from exc


def _deserialize_chunk(raw: bytes) -> StateChunk:
    if not raw:
        raise CorruptionError("empty chunk payload")
    flags = raw[0]
    offset = 1
    chunk = StateChunk(tombstone=bool(flags & _FLAG_TOMBSTONE))

    attr_count, offset = read_uvarint(raw, offset)
    for _ in range(attr_count):
        name, offset = _read_name(raw, offset)
        if offset >= len(raw):
            raise CorruptionError("truncated attribute tag")
        tag = AttrType(raw[offset])
        offset += 1
        if tag == AttrType.INT:
            value, offset = _read_fixed_int(raw, offset, 4, signed=True)
        elif tag == AttrType.LONG:
            value, offset = _read_fixed_int(raw, offset, 8, signed=True)
        elif tag == AttrType.DOUBLE:
            if offset + 8 > len(raw):
                raise CorruptionError("truncated double value")
            value = _DOUBLE_STRUCT.unpack_from(raw, offset)[0]
            offset += 8
        elif tag == AttrType.STRING:
            length, offset = read_uvarint(raw, offset)
            value, offset = _read_str(raw, offset, length)
        elif tag == AttrType.BOOL:
            if offset >= len(raw):
                raise CorruptionError("truncated bool value")
            value = bool(raw[offset])
            offset += 1
        else:  # ENUM
            length, offset = read_uvarint(raw, offset)
            registry, offset = _read_str(raw, offset, length)
            ordinal, offset = _read_fixed_int(raw, offset, 2, signed=False)
            value = (registry, ordinal)
        chunk.attributes[name] = AttributeValue(tag, value)

    rel_count, offset = read_uvarint(raw, offset)
    for _ in range(rel_count):
        name, offset = _read_name(raw, offset)
        id_count, offset = read_uvarint(raw, offset)
        if offset + 8 * id_count > len(raw):
            raise CorruptionError("truncated relation ids")
        ids = [
            int.from_bytes(raw[offset + 8 * i : offset + 8 * (i + 1)], "big")
            for i in range(id_count)
        ]
        offset += 8 * id_count
        if name in chunk.attributes:
            raise CorruptionError(f"name {name!r} in both namespaces")
        chunk.relations[name] = ids

    if offset != len(raw):
        raise CorruptionError(f"{len(raw) - offset} trailing bytes after chunk")
    if chunk.tombstone and (chunk.attributes or chunk.relations):
        raise CorruptionError("tombstone chunk carries data")
    return chunk


def _read_name(raw: bytes, offset: int) -> tuple[str, int]:
    length, offset = read_uvarint(raw, offset)
    if length == 0:
        raise CorruptionError("empty name")
    if length > MAX_NAME_BYTES:
        raise CorruptionError(f"name length {length} exceeds limit")
    return _read_str(raw, offset, length)


def _read_str(raw: bytes, offset: int, length: int) -> tuple[str, int]:
    end = offset + length
    if end > len(raw):
        raise CorruptionError("truncated string")
    return raw[offset:end].decode(), end


def _read_fixed_int(raw: bytes, offset: int, size: int, signed: bool) -> tuple[int, int]:
    end = offset + size
    if end > len(raw):
        raise CorruptionError("truncated integer value")
    return int.from_bytes(raw[offset:end], "big", signed=signed), end


@dataclass(slots=True)
class SessionMeta:
    """Per-graph bookkeeping persisted under the META key."""

    next_node: int = 0
    indexes: dict[str, int] = field(default_factory=dict)

    def serialize(self) -> bytes:
        out = bytearray()
        write_uvarint(out, self.next_node)
        names = sorted((name.encode(), node) for name, node in self.indexes.items())
        write_uvarint(out, len(names))
        for name_bytes, node in names:
            _write_name(out, name_bytes)
            out += node.to_bytes(8, "big")
        return bytes(out)

    @classmethod
    def deserialize(cls, raw: bytes) -> SessionMeta:
        next_node, offset = read_uvarint(raw, 0)
        count, offset = read_uvarint(raw, offset)
        indexes: dict[str, int] = {}
        for _ in range(count):
            name, offset = _read_name(raw, offset)
            node, offset = _read_fixed_int(raw, offset, 8, signed=False)
            indexes[name] = node
        if offset != len(raw):
            raise CorruptionError("trailing bytes after session meta")
        return cls(next_node=next_node, indexes=indexes)


def export_line(key: ChunkKey, payload: bytes) -> str:
    """One text-export record: Base64(key) ':' Base64(payload) '\\n'."""
    return (
        base64.b64encode(encode_key(key)).decode("ascii")
        + ":"
        + base64.b64encode(payload).decode("ascii")
        + "\n"
    )


def parse_export_line(line: str) -> tuple[ChunkKey, bytes]:
    body = line.strip()
    try:
        key_part, value_part = body.split(":", 1)
        key = decode_key(base64.b64decode(key_part, validate=True))
        payload = base64.b64decode(value_part, validate=True)
    except (ValueError, CorruptionError) as exc:
        raise CorruptionError(f"malformed export line: {exc}") from exc
    return key, payload


def iter_export_lines(records: Iterator[tuple[ChunkKey, bytes]]) -> Iterator[str]:
    for key, payload in records:
        yield export_line(key, payload)
