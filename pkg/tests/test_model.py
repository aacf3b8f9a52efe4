"""Key and chunk codecs: bit-exact encodings, round-trips, canonical form."""

import random

import pytest

from helpers import random_chunk, random_key
from mwg.errors import CorruptionError, EncodingLimitError
from mwg.model import (
    AttrType,
    AttributeValue,
    ChunkKey,
    ChunkKind,
    SessionMeta,
    StateChunk,
    decode_key,
    deserialize_chunk,
    encode_key,
    export_line,
    parse_export_line,
    serialize_chunk,
)


class TestKeyCodec:
    def test_zero_key_bias_identity(self):
        raw = encode_key(ChunkKey(ChunkKind.STATE, 0, 0, 0))
        assert raw == bytes(9) + bytes([0x80]) + bytes(7) + bytes(8)
        assert len(raw) == 25

    def test_negative_time_bias(self):
        # bias of -1 is 2^63 - 1, i.e. 0x7FFF...FF
        raw = encode_key(ChunkKey(ChunkKind.STATE, 1, -1, 2))
        assert raw.hex() == "00" "0000000000000001" "7fffffffffffffff" "0000000000000002"

    def test_round_trip_random(self):
        rng = random.Random(1)
        for _ in range(10_000):
            key = random_key(rng)
            assert decode_key(encode_key(key)) == key

    def test_order_preserving_in_time(self):
        rng = random.Random(2)
        for _ in range(2_000):
            base = random_key(rng)
            a = base._replace(time=rng.randint(-(2**63), 2**63 - 1))
            b = base._replace(time=rng.randint(-(2**63), 2**63 - 1))
            assert (a.time < b.time) == (encode_key(a) < encode_key(b)) or a.time == b.time

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            encode_key(ChunkKey(9, 0, 0, 0))
        with pytest.raises(ValueError):
            encode_key(ChunkKey(0, -1, 0, 0))
        with pytest.raises(ValueError):
            encode_key(ChunkKey(0, 0, 2**63, 0))

    def test_decode_rejects_bad_length_and_kind(self):
        with pytest.raises(CorruptionError):
            decode_key(b"\x00" * 24)
        with pytest.raises(CorruptionError):
            decode_key(b"\x07" + b"\x00" * 24)


class TestChunkCodec:
    def test_empty_chunk_is_three_zero_bytes(self):
        assert serialize_chunk(StateChunk()) == b"\x00\x00\x00"

    def test_tombstone_flag(self):
        raw = serialize_chunk(StateChunk.make_tombstone())
        assert raw == b"\x01\x00\x00"
        assert deserialize_chunk(raw).tombstone

    def test_single_name_chunk_round_trips(self):
        chunk = StateChunk()
        chunk.set_attr("name", AttributeValue.of_string("Eve"))
        raw = serialize_chunk(chunk)
        again = deserialize_chunk(raw)
        assert again == chunk
        assert serialize_chunk(again) == raw

    def test_round_trip_random(self):
        rng = random.Random(3)
        for _ in range(10_000):
            chunk = random_chunk(rng)
            again = deserialize_chunk(serialize_chunk(chunk))
            assert again == chunk

    def test_canonical_form_ignores_insertion_order(self):
        a = StateChunk()
        a.set_attr("x", AttributeValue.of_int(1))
        a.set_attr("a", AttributeValue.of_bool(True))
        a.add_rel("r", 5)
        a.add_rel("q", 9)
        b = StateChunk()
        b.add_rel("q", 9)
        b.set_attr("a", AttributeValue.of_bool(True))
        b.add_rel("r", 5)
        b.set_attr("x", AttributeValue.of_int(1))
        assert a == b
        assert serialize_chunk(a) == serialize_chunk(b)

    def test_relation_order_is_significant(self):
        a = StateChunk()
        a.add_rel("r", 1)
        a.add_rel("r", 2)
        b = StateChunk()
        b.add_rel("r", 2)
        b.add_rel("r", 1)
        assert a != b
        assert serialize_chunk(a) != serialize_chunk(b)

    def test_all_attribute_types_round_trip(self):
        chunk = StateChunk()
        chunk.set_attr("i", AttributeValue.of_int(-(2**31)))
        chunk.set_attr("l", AttributeValue.of_long(2**63 - 1))
        chunk.set_attr("d", AttributeValue.of_double(-0.0))
        chunk.set_attr("s", AttributeValue.of_string("héllo ☃"))
        chunk.set_attr("b", AttributeValue.of_bool(False))
        chunk.set_attr("e", AttributeValue.of_enum("color", 65_535))
        again = deserialize_chunk(serialize_chunk(chunk))
        assert again == chunk
        assert again.attributes["e"].type == AttrType.ENUM

    def test_name_length_limit(self):
        chunk = StateChunk()
        chunk.attributes["x" * 70_000] = AttributeValue.of_bool(True)
        with pytest.raises(EncodingLimitError):
            serialize_chunk(chunk)

    def test_truncated_payload_is_corruption(self):
        raw = serialize_chunk(random_chunk(random.Random(4)))
        with pytest.raises(CorruptionError):
            deserialize_chunk(raw[:-1] if len(raw) > 3 else b"")

    def test_trailing_garbage_is_corruption(self):
        with pytest.raises(CorruptionError):
            deserialize_chunk(b"\x00\x00\x00\xff")


class TestChunkInvariants:
    def test_namespaces_are_disjoint(self):
        chunk = StateChunk()
        chunk.set_attr("name", AttributeValue.of_string("Eve"))
        with pytest.raises(ValueError):
            chunk.add_rel("name", 1)
        chunk.add_rel("friend", 1)
        with pytest.raises(ValueError):
            chunk.set_attr("friend", AttributeValue.of_bool(True))

    def test_relation_membership_is_unique(self):
        chunk = StateChunk()
        assert chunk.add_rel("friend", 7)
        assert not chunk.add_rel("friend", 7)
        assert chunk.relations["friend"] == [7]

    def test_remove_last_member_drops_relation(self):
        chunk = StateChunk()
        chunk.add_rel("friend", 7)
        assert chunk.remove_rel("friend", 7)
        assert "friend" not in chunk.relations
        assert not chunk.remove_rel("friend", 7)

    def test_empty_names_rejected(self):
        chunk = StateChunk()
        with pytest.raises(ValueError):
            chunk.set_attr("", AttributeValue.of_bool(True))
        with pytest.raises(ValueError):
            chunk.add_rel("", 1)

    def test_tombstone_rejects_data(self):
        chunk = StateChunk.make_tombstone()
        with pytest.raises(ValueError):
            chunk.set_attr("x", AttributeValue.of_bool(True))

    def test_copy_is_deep_enough(self):
        chunk = StateChunk()
        chunk.add_rel("friend", 1)
        dup = chunk.copy()
        dup.add_rel("friend", 2)
        assert chunk.relations["friend"] == [1]

    def test_int_range_validation(self):
        with pytest.raises(ValueError):
            AttributeValue.of_int(2**31)
        with pytest.raises(ValueError):
            AttributeValue.of_enum("x", 1 << 16)
        with pytest.raises(ValueError):
            AttributeValue(AttrType.DOUBLE, 1)

    def test_coerce(self):
        assert AttributeValue.coerce(True).type == AttrType.BOOL
        assert AttributeValue.coerce(5).type == AttrType.LONG
        assert AttributeValue.coerce(1.5).type == AttrType.DOUBLE
        assert AttributeValue.coerce("x").type == AttrType.STRING
        with pytest.raises(TypeError):
            AttributeValue.coerce([1])


class TestExportFormat:
    def test_line_shape(self):
        line = export_line(ChunkKey(ChunkKind.STATE, 0, 0, 0), b"\x00\x00\x00")
        assert line.endswith("\n")
        assert line.count(":") == 1

    def test_round_trip(self):
        rng = random.Random(5)
        for _ in range(500):
            key = random_key(rng)
            payload = serialize_chunk(random_chunk(rng))
            got_key, got_payload = parse_export_line(export_line(key, payload))
            assert got_key == key and got_payload == payload

    def test_malformed_line(self):
        with pytest.raises(CorruptionError):
            parse_export_line("not a record")


class TestSessionMeta:
    def test_round_trip(self):
        meta = SessionMeta(next_node=42, indexes={"nameIndex": 7, "zone": 9})
        again = SessionMeta.deserialize(meta.serialize())
        assert again == meta
