"""Resolution semantics: shared past, copy-on-write, oracle equivalence."""

import random
import threading

import pytest

from mwg.errors import CorruptionError, UnknownWorldError
from mwg.graph import GraphSession
from mwg.model import (
    AttributeValue,
    ChunkKind,
    StateChunk,
    serialize_chunk,
    state_key,
)
from mwg.oracle import Scenario, run_scenario
from mwg.resolver import Resolver
from mwg.storage import ChunkSpace


def value_chunk(v):
    chunk = StateChunk()
    chunk.set_attr("v", AttributeValue.of_long(v))
    return chunk


@pytest.fixture
def resolver():
    return Resolver(ChunkSpace())


class TestInsert:
    def test_three_creates_three_chunks(self, resolver):
        for node in range(3):
            resolver.insert_chunk(node, 10, 0, value_chunk(node))
        states = [k for k in resolver.space.dirty_keys() if k.kind == ChunkKind.STATE]
        assert len(states) == 3

    def test_temporal_update_adds_one_chunk(self, resolver):
        for node in range(3):
            resolver.insert_chunk(node, 10, 0, value_chunk(node))
        resolver.insert_chunk(0, 11, 0, value_chunk(100))
        states = [k for k in resolver.space.dirty_keys() if k.kind == ChunkKind.STATE]
        assert len(states) == 4
        assert {k for k in states if k.node != 0} == {
            state_key(0, 10, 1), state_key(0, 10, 2),
        }

    def test_unknown_world_rejected(self, resolver):
        with pytest.raises(UnknownWorldError):
            resolver.insert_chunk(0, 0, 42, StateChunk())

    def test_write_locality_exactly_three_keys_plus_gwim(self, resolver):
        resolver.gwim()  # materialize before capturing
        resolver.space.save()
        resolver.insert_chunk(5, 7, 0, value_chunk(1))
        touched = resolver.space.dirty_keys()
        assert touched == {
            state_key(0, 7, 5),
            state_key(0, 7, 5)._replace(kind=ChunkKind.TIME_TREE, time=0),
            state_key(0, 0, 5)._replace(kind=ChunkKind.WORLD_MAP),
        }

    def test_insert_never_touches_parent_world(self, resolver):
        resolver.insert_chunk(0, 0, 0, value_chunk(1))
        child = resolver.diverge(0)
        resolver.space.save()
        resolver.insert_chunk(0, 5, child, value_chunk(2))
        for key in resolver.space.dirty_keys():
            if key.kind in (ChunkKind.STATE, ChunkKind.TIME_TREE):
                assert key.world == child


class TestResolve:
    def test_bob_walkthrough(self, resolver):
        """Node written only in the parent at t_i resolves through the child."""
        t_i, t_i2 = 10, 12
        resolver.insert_chunk(3, t_i, 0, value_chunk(33))
        child = resolver.diverge(0)
        entry = resolver.resolve_entry(3, t_i2, child)
        assert entry is not None
        assert (entry.world, entry.time) == (0, t_i)
        assert entry.chunk.attributes["v"].value == 33

    def test_before_first_insert_is_absent(self, resolver):
        resolver.insert_chunk(0, 100, 0, value_chunk(1))
        assert resolver.resolve(0, 99, 0) is None
        assert resolver.resolve(0, 100, 0) is not None

    def test_fig4_ladder(self, resolver):
        """w0<w1<w2 with divergences s0<s1<s2 select the right timeline."""
        s0, s1, s2 = 0, 10, 20
        resolver.insert_chunk(0, s0, 0, value_chunk(0))
        w1 = resolver.diverge(0)
        resolver.insert_chunk(0, s1, w1, value_chunk(1))
        w2 = resolver.diverge(w1)
        resolver.insert_chunk(0, s2, w2, value_chunk(2))

        def read_from_w2(t):
            chunk = resolver.resolve(0, t, w2)
            return None if chunk is None else chunk.attributes["v"].value

        assert read_from_w2(s2) == 2
        assert read_from_w2(s2 + 5) == 2
        assert read_from_w2(s1) == 1
        assert read_from_w2(s2 - 1) == 1
        assert read_from_w2(s0) == 0
        assert read_from_w2(s1 - 1) == 0
        assert read_from_w2(s0 - 1) is None

    def test_resolve_at_exact_divergence_uses_child(self, resolver):
        resolver.insert_chunk(0, 0, 0, value_chunk(0))
        child = resolver.diverge(0)
        resolver.insert_chunk(0, 5, child, value_chunk(1))
        assert resolver.resolve(0, 5, child).attributes["v"].value == 1
        assert resolver.resolve(0, 4, child).attributes["v"].value == 0

    def test_unknown_world_rejected(self, resolver):
        with pytest.raises(UnknownWorldError):
            resolver.resolve(0, 0, 9)

    def test_tombstone_resolves_to_none(self, resolver):
        resolver.insert_chunk(0, 0, 0, value_chunk(1))
        resolver.insert_chunk(0, 5, 0, StateChunk.make_tombstone())
        assert resolver.resolve(0, 4, 0) is not None
        assert resolver.resolve(0, 5, 0) is None
        assert resolver.resolve(0, 9, 0) is None

    def test_index_chunk_inconsistency_is_corruption(self, resolver):
        resolver.insert_chunk(0, 0, 0, value_chunk(1))
        # sabotage: drop the state chunk but keep the index
        resolver.space._dirty.pop(state_key(0, 0, 0))
        with pytest.raises(CorruptionError):
            resolver.resolve(0, 0, 0)

    def test_hops_bounded_by_depth_and_probes_by_hops(self, resolver):
        rng = random.Random(41)
        worlds = [0]
        for _ in range(20):
            worlds.append(resolver.diverge(rng.choice(worlds)))
        for node in range(10):
            resolver.insert_chunk(node, 0, 0, value_chunk(node))
            for _ in range(3):
                resolver.insert_chunk(
                    node, rng.randrange(1, 50), rng.choice(worlds), value_chunk(node)
                )
        gwim = resolver.gwim()
        for _ in range(500):
            node, t, world = rng.randrange(10), rng.randrange(50), rng.choice(worlds)
            stats = resolver.stats
            hops0, probes0, resolves0 = stats.hops, stats.tree_probes, stats.resolves
            resolver.resolve(node, t, world)
            hops = stats.hops - hops0
            probes = stats.tree_probes - probes0
            assert hops <= gwim.depth(world)
            assert probes <= hops + 1


class TestCopyOnWrite:
    def test_fork_then_mutate_preserves_parent(self, resolver):
        resolver.insert_chunk(0, 0, 0, value_chunk(7))
        parent_bytes = serialize_chunk(resolver.resolve(0, 0, 0))
        child = resolver.diverge(0)
        with resolver.write(0, 0, child) as chunk:
            chunk.set_attr("v", AttributeValue.of_long(8))
        assert serialize_chunk(resolver.resolve(0, 0, 0)) == parent_bytes
        assert resolver.resolve(0, 0, child).attributes["v"].value == 8

    def test_commit_without_modification_writes_nothing(self, resolver):
        resolver.insert_chunk(0, 0, 0, value_chunk(7))
        resolver.space.save()
        with resolver.write(0, 50, 0):
            pass  # resolve for write, change nothing
        assert resolver.space.dirty_count() == 0
        assert resolver.stats.chunk_inserts == 1

    def test_exact_viewpoint_returns_stored_chunk(self, resolver):
        resolver.insert_chunk(0, 3, 0, value_chunk(7))
        stored = resolver.resolve(0, 3, 0)
        working, baseline = resolver.resolve_for_write(0, 3, 0)
        assert working is stored
        assert working == baseline and working is not baseline

    def test_other_viewpoint_returns_clone(self, resolver):
        resolver.insert_chunk(0, 3, 0, value_chunk(7))
        stored = resolver.resolve(0, 3, 0)
        working, _ = resolver.resolve_for_write(0, 9, 0)
        assert working is not stored and working == stored

    def test_nothing_resolved_returns_fresh_chunk(self, resolver):
        working, baseline = resolver.resolve_for_write(0, 0, 0)
        assert working == StateChunk() and baseline == StateChunk()

    def test_post_commit_visibility(self, resolver):
        resolver.insert_chunk(0, 0, 0, value_chunk(1))
        with resolver.write(0, 10, 0) as chunk:
            chunk.set_attr("v", AttributeValue.of_long(2))
        assert resolver.resolve(0, 10, 0).attributes["v"].value == 2
        assert resolver.resolve(0, 99, 0).attributes["v"].value == 2
        assert resolver.resolve(0, 9, 0).attributes["v"].value == 1

    def test_randomized_fork_probes_stable(self, resolver):
        rng = random.Random(42)
        for node in range(20):
            for _ in range(5):
                resolver.insert_chunk(node, rng.randrange(100), 0, value_chunk(rng.randrange(1000)))
        probes = [(rng.randrange(20), rng.randrange(100)) for _ in range(300)]

        def snapshot():
            out = []
            for node, t in probes:
                chunk = resolver.resolve(node, t, 0)
                out.append(None if chunk is None else serialize_chunk(chunk))
            return out

        before = snapshot()
        child = resolver.diverge(0)
        for _ in range(200):
            node, t = rng.randrange(20), rng.randrange(100)
            with resolver.write(node, t, child) as chunk:
                if not chunk.tombstone:
                    chunk.set_attr("v", AttributeValue.of_long(rng.randrange(1000)))
        assert snapshot() == before


class TestOracleEquivalence:
    def test_seeded_scenario_small(self):
        report = run_scenario(
            Scenario(seed=101, nodes=50, timepoints=30, worlds=10, ops=1_500, probes=3_000)
        )
        assert report.ok, report.first_counterexample

    def test_shared_past_property(self):
        """resolve(n, t, child) == resolve(n, t, parent) for t < divergence."""
        rng = random.Random(43)
        session = GraphSession().connect()
        resolver = session.resolver
        for node in range(10):
            for _ in range(6):
                resolver.insert_chunk(node, rng.randrange(100), 0, value_chunk(rng.randrange(99)))
        child = session.diverge(0)
        divergence = {}
        for node in range(10):
            s = rng.randrange(40, 100)
            divergence[node] = s
            resolver.insert_chunk(node, s, child, value_chunk(-node))
        for node in range(10):
            for t in range(divergence[node]):
                a = resolver.resolve(node, t, child)
                b = resolver.resolve(node, t, 0)
                assert (a is None) == (b is None)
                if a is not None:
                    assert serialize_chunk(a) == serialize_chunk(b)

    def test_past_immutability_under_incomparable_writes(self):
        """Writes in worlds not on w's ancestor chain never change w's reads."""
        rng = random.Random(44)
        session = GraphSession().connect()
        resolver = session.resolver
        for node in range(10):
            resolver.insert_chunk(node, rng.randrange(50), 0, value_chunk(node))
        w_a = session.diverge(0)
        w_b = session.diverge(0)  # sibling: incomparable with w_a
        probes = [(rng.randrange(10), rng.randrange(60)) for _ in range(200)]

        def snapshot():
            out = []
            for node, t in probes:
                chunk = resolver.resolve(node, t, w_a)
                out.append(None if chunk is None else serialize_chunk(chunk))
            return out

        before = snapshot()
        for _ in range(100):
            resolver.insert_chunk(
                rng.randrange(10), rng.randrange(60), w_b, value_chunk(rng.randrange(9))
            )
        assert snapshot() == before


class TestConcurrency:
    def test_parallel_writers_on_distinct_nodes(self):
        session = GraphSession().connect()
        resolver = session.resolver
        errors = []

        def writer(node):
            try:
                for t in range(300):
                    resolver.insert_chunk(node, t, 0, value_chunk(node * 1000 + t))
            except Exception as exc:  # noqa: BLE001
                errors.append(exc)

        threads = [threading.Thread(target=writer, args=(n,)) for n in range(8)]
        for th in threads:
            th.start()
        for th in threads:
            th.join()
        assert not errors
        for node in range(8):
            for t in (0, 150, 299):
                assert resolver.resolve(node, t, 0).attributes["v"].value == node * 1000 + t

    def test_reader_in_other_world_sees_consistent_prestate(self):
        session = GraphSession().connect()
        resolver = session.resolver
        for t in range(100):
            resolver.insert_chunk(0, t, 0, value_chunk(t))
        child = session.diverge(0)
        stop = threading.Event()
        bad = []

        def reader():
            while not stop.is_set():
                t = random.randrange(100)
                chunk = resolver.resolve(0, t, 0)
                if chunk is None or chunk.attributes["v"].value != t:
                    bad.append(t)

        th = threading.Thread(target=reader)
        th.start()
        for t in range(100, 2_000):
            resolver.insert_chunk(0, t, child, value_chunk(-t))
        stop.set()
        th.join()
        assert not bad

    def test_same_world_reader_sees_pre_or_post_state(self):
        session = GraphSession().connect()
        resolver = session.resolver
        resolver.insert_chunk(0, 0, 0, value_chunk(0))
        stop = threading.Event()
        bad = []

        def reader():
            while not stop.is_set():
                chunk = resolver.resolve(0, 10**6, 0)
                v = chunk.attributes["v"].value
                if v != 0 and v % 7 != 0:
                    bad.append(v)

        th = threading.Thread(target=reader)
        th.start()
        for t in range(7, 3_000, 7):
            resolver.insert_chunk(0, t, 0, value_chunk(t))
        stop.set()
        th.join()
        assert not bad
