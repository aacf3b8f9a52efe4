"""Shared generators and validators for the test suite."""

from __future__ import annotations

import random

from mwg.model import AttributeValue, ChunkKey, StateChunk, TIME_MAX, TIME_MIN, U64_MAX
from mwg.timetree import NIL, TimeTree

_WORDS = ("load", "name", "level", "rate", "watched", "friend", "feeds", "peer", "zone")


def random_key(rng: random.Random) -> ChunkKey:
    return ChunkKey(
        kind=rng.randrange(5),
        world=rng.randrange(U64_MAX + 1),
        time=rng.randint(TIME_MIN, TIME_MAX),
        node=rng.randrange(U64_MAX + 1),
    )


def random_attribute(rng: random.Random) -> AttributeValue:
    kind = rng.randrange(6)
    if kind == 0:
        return AttributeValue.of_int(rng.randint(-(2**31), 2**31 - 1))
    if kind == 1:
        return AttributeValue.of_long(rng.randint(TIME_MIN, TIME_MAX))
    if kind == 2:
        return AttributeValue.of_double(rng.uniform(-1e12, 1e12))
    if kind == 3:
        return AttributeValue.of_string(
            "".join(rng.choice("abcdefé☃x0123") for _ in range(rng.randrange(12)))
        )
    if kind == 4:
        return AttributeValue.of_bool(rng.random() < 0.5)
    return AttributeValue.of_enum(rng.choice(_WORDS), rng.randrange(1 << 16))


def random_chunk(rng: random.Random) -> StateChunk:
    if rng.random() < 0.05:
        return StateChunk.make_tombstone()
    chunk = StateChunk()
    names = rng.sample(_WORDS, rng.randrange(len(_WORDS)))
    split = rng.randrange(len(names) + 1)
    for name in names[:split]:
        chunk.set_attr(name, random_attribute(rng))
    for name in names[split:]:
        for _ in range(rng.randrange(1, 5)):
            chunk.add_rel(name, rng.randrange(U64_MAX + 1))
    return chunk


def assert_valid_red_black(tree: TimeTree) -> int:
    """Check BST order, no red-red edges, equal black heights; returns
    the black height."""
    if tree._root == NIL:
        return 0
    key, left, right, color = tree._key, tree._left, tree._right, tree._color
    assert color[tree._root] == 0, "root must be black"

    black_height = None
    # (index, lower bound, upper bound, black count on path so far)
    stack = [(tree._root, None, None, 0)]
    while stack:
        idx, lo, hi, blacks = stack.pop()
        if idx == NIL:
            if black_height is None:
                black_height = blacks
            assert blacks == black_height, "unequal black heights"
            continue
        k = key[idx]
        assert lo is None or k > lo, "BST order violated (left)"
        assert hi is None or k < hi, "BST order violated (right)"
        if color[idx] == 1:
            for child in (left[idx], right[idx]):
                assert child == NIL or color[child] == 0, "red node with red child"
        blacks += 1 if color[idx] == 0 else 0
        stack.append((left[idx], lo, k, blacks))
        stack.append((right[idx], k, hi, blacks))
    return black_height
