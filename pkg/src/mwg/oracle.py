"""Brute-force replay oracle and seeded scenario generation.

The oracle is the engine's ground truth: it keeps the raw operation log
and answers probes by walking a world's ancestor chain with linear scans,
straight from the math — no trees, no divergence maps, no storage. Any
disagreement with the engine on any probe is an engine bug (or, via the
mutation hook, proof the harness can catch one).
"""

from __future__ import annotations

import random
from contextlib import contextmanager
from dataclasses import dataclass, field

from .errors import CorruptionError
from .graph import GraphSession
from .model import ROOT_WORLD, AttributeValue, StateChunk, serialize_chunk
from .timetree import TimeTree

_TOMBSTONE = object()


class SnapshotOracle:
    """Replays the op log; probes by linear scan along the ancestor chain."""

    def __init__(self):
        self._parents: dict[int, int] = {}
        self._next_world = ROOT_WORLD + 1
        # (node, world) -> list of (t, chunk copy | tombstone) in op order
        self._log: dict[tuple[int, int], list[tuple[int, object]]] = {}

    def diverge(self, parent_world: int) -> int:
        world = self._next_world
        self._next_world += 1
        self._parents[world] = parent_world
        return world

    def record_insert(self, node: int, t: int, world: int, chunk: StateChunk) -> None:
        self._log.setdefault((node, world), []).append((t, chunk.copy()))

    def record_delete(self, node: int, t: int, world: int) -> None:
        self._log.setdefault((node, world), []).append((t, _TOMBSTONE))

    def probe(self, node: int, t: int, world: int) -> StateChunk | None:
        current: int | None = world
        while current is not None:
            entries = self._log.get((node, current))
            if entries:
                divergence = min(entry_t for entry_t, _ in entries)
                if t >= divergence:
                    best_t = None
                    best_value = None
                    for entry_t, value in entries:
                        # >= so that the latest op at the same timepoint wins
                        if entry_t <= t and (best_t is None or entry_t >= best_t):
                            best_t, best_value = entry_t, value
                    if best_value is _TOMBSTONE:
                        return None
                    return best_value
            current = self._parents.get(current)
        return None


@dataclass
class Scenario:
    """A seeded operation log plus the probes used to validate it."""

    seed: int
    nodes: int = 200
    timepoints: int = 50
    worlds: int = 20
    ops: int = 5_000
    probes: int = 10_000
    ops_log: list[tuple] = field(default_factory=list)


_ATTR_NAMES = ("load", "name", "level", "flag", "rate", "tag")
_REL_NAMES = ("friend", "feeds", "watched", "peer")


def generate_ops(rng: random.Random, *, nodes: int, timepoints: int,
                 worlds: int, ops: int) -> list[tuple]:
    """A seeded op log over the configured lattice.

    Ops: ("diverge", parent) — world ids are implicit, allocated in order;
    ("set", node, t, world_slot, name, value); ("rel+", node, t, world_slot,
    name, target); ("rel-", ...); ("delete", node, t, world_slot). World
    slots index into the list of created worlds (0 = root).
    """
    log: list[tuple] = []
    world_count = 1
    for _ in range(ops):
        roll = rng.random()
        if roll < 0.08 and world_count < worlds:
            log.append(("diverge", rng.randrange(world_count)))
            world_count += 1
            continue
        node = rng.randrange(nodes)
        t = rng.randrange(timepoints)
        world_slot = rng.randrange(world_count)
        if roll < 0.60:
            name = rng.choice(_ATTR_NAMES)
            value = _random_value(rng)
            log.append(("set", node, t, world_slot, name, value))
        elif roll < 0.80:
            log.append(("rel+", node, t, world_slot, rng.choice(_REL_NAMES), rng.randrange(nodes)))
        elif roll < 0.95:
            log.append(("rel-", node, t, world_slot, rng.choice(_REL_NAMES), rng.randrange(nodes)))
        else:
            log.append(("delete", node, t, world_slot))
    return log


def _random_value(rng: random.Random) -> AttributeValue:
    kind = rng.randrange(6)
    if kind == 0:
        return AttributeValue.of_int(rng.randint(-(2**31), 2**31 - 1))
    if kind == 1:
        return AttributeValue.of_long(rng.randint(-(2**63), 2**63 - 1))
    if kind == 2:
        return AttributeValue.of_double(rng.uniform(-1e9, 1e9))
    if kind == 3:
        return AttributeValue.of_string("v" + str(rng.randrange(10_000)))
    if kind == 4:
        return AttributeValue.of_bool(rng.random() < 0.5)
    return AttributeValue.of_enum("phase", rng.randrange(16))


def _apply_mutation(chunk: StateChunk, op: tuple) -> None:
    tag = op[0]
    if tag == "set":
        chunk.set_attr(op[4], op[5])
    elif tag == "rel+":
        chunk.add_rel(op[4], op[5])
    else:  # rel-
        chunk.remove_rel(op[4], op[5])


def apply_ops(session: GraphSession, oracle: SnapshotOracle, log: list[tuple]) -> list[int]:
    """Replay a log into both the engine and the oracle; returns world ids.

    Each side resolves its own base state for copy-on-write ops, so a
    wrong base resolution in the engine's write path shows up as a probe
    mismatch instead of being silently mirrored into the oracle.
    """
    worlds = [ROOT_WORLD]
    resolver = session.resolver
    for op in log:
        tag = op[0]
        if tag == "diverge":
            parent = worlds[op[1]]
            engine_world = session.diverge(parent)
            oracle_world = oracle.diverge(parent)
            assert engine_world == oracle_world, "world allocation must be deterministic"
            worlds.append(engine_world)
            continue
        node, t, world = op[1], op[2], worlds[op[3]]
        if tag == "delete":
            if resolver.resolve(node, t, world) is not None:
                resolver.insert_chunk(node, t, world, StateChunk.make_tombstone())
            if oracle.probe(node, t, world) is not None:
                oracle.record_delete(node, t, world)
            continue
        chunk, baseline = resolver.resolve_for_write(node, t, world)
        _apply_mutation(chunk, op)
        resolver.commit(node, t, world, chunk, baseline)

        base = oracle.probe(node, t, world)
        working = base.copy() if base is not None else StateChunk()
        snapshot = working.copy()
        _apply_mutation(working, op)
        if working != snapshot:
            oracle.record_insert(node, t, world, working)
    return worlds


def generate_probes(rng: random.Random, scenario: Scenario, worlds: list[int]) -> list[tuple[int, int, int]]:
    span = scenario.timepoints + 4  # a margin above ensures floor coverage
    return [
        (rng.randrange(scenario.nodes), rng.randrange(span) - 2, rng.choice(worlds))
        for _ in range(scenario.probes)
    ]


def compare_probe(session: GraphSession, oracle: SnapshotOracle,
                  node: int, t: int, world: int) -> bool:
    try:
        engine = session.resolver.resolve(node, t, world)
    except CorruptionError:
        return False  # a crash disagrees with the oracle by definition
    expected = oracle.probe(node, t, world)
    if engine is None or expected is None:
        return engine is None and expected is None
    return serialize_chunk(engine) == serialize_chunk(expected)


@dataclass
class OracleReport:
    ok: bool
    ops: int
    probes: int
    mismatches: int
    first_counterexample: tuple | None = None
    minimal_prefix: int | None = None


def run_scenario(scenario: Scenario) -> OracleReport:
    """Replay a seeded scenario and compare every probe against the oracle."""
    rng = random.Random(scenario.seed)
    log = scenario.ops_log or generate_ops(
        rng, nodes=scenario.nodes, timepoints=scenario.timepoints,
        worlds=scenario.worlds, ops=scenario.ops,
    )
    scenario.ops_log = log
    session = GraphSession().connect()
    oracle = SnapshotOracle()
    worlds = apply_ops(session, oracle, log)
    probes = generate_probes(rng, scenario, worlds)
    mismatches = 0
    first = None
    for node, t, world in probes:
        if not compare_probe(session, oracle, node, t, world):
            mismatches += 1
            if first is None:
                first = (node, t, world)
    report = OracleReport(
        ok=mismatches == 0, ops=len(log), probes=len(probes),
        mismatches=mismatches, first_counterexample=first,
    )
    if not report.ok:
        report.minimal_prefix = _shrink(scenario, log, probes)
    return report


def _prefix_fails(log: list[tuple], probes: list[tuple[int, int, int]], k: int) -> tuple | None:
    session = GraphSession().connect()
    oracle = SnapshotOracle()
    registered = set(apply_ops(session, oracle, log[:k]))
    for node, t, world in probes:
        if world not in registered:
            continue  # prefix stops before this world exists
        if not compare_probe(session, oracle, node, t, world):
            return (node, t, world)
    return None


def _shrink(scenario: Scenario, log: list[tuple], probes: list[tuple[int, int, int]]) -> int:
    """Smallest failing prefix length, found by halving."""
    lo, hi = 1, len(log)  # hi is known to fail
    while lo < hi:
        mid = (lo + hi) // 2
        if _prefix_fails(log, probes, mid) is not None:
            hi = mid
        else:
            lo = mid + 1
    return hi


@contextmanager
def corrupted_floor():
    """Mutation-testing hook: floor lookups answer for t-1 when they can.

    Used to prove the oracle harness actually catches engine defects; a
    run under this patch must produce counterexamples. The fallback keeps
    the corrupted engine total (wrong answers instead of crashes), which
    is the harder case for a checker.
    """
    original = TimeTree.floor

    def off_by_one(self, t):
        earlier = original(self, t - 1)
        return earlier if earlier is not None else original(self, t)

    TimeTree.floor = off_by_one
    try:
        yield
    finally:
        TimeTree.floor = original
