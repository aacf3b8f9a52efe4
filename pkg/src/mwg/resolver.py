"""Viewpoint resolution: shared-past reads and copy-on-write inserts.

A read at (node, t, world) walks the world's parent chain: the first
ancestor world in which the node was written at or before t answers via
its time tree's floor lookup. Inserts always land in the requested
world's local timeline and never touch ancestors, so forked worlds share
their past by construction instead of by copying.

The walk is an explicit loop, not recursion: what-if workloads produce
parent chains deep enough (10^5+) to overflow any call stack.
"""

from __future__ import annotations

import threading
import time
from contextlib import contextmanager
from dataclasses import dataclass

from .errors import CorruptionError, UnknownWorldError
from .model import GWIM_KEY, StateChunk, lwim_key, state_key, tree_key
from .storage import ChunkSpace
from .timetree import TimeTree
from .worlds import GlobalWorldMap, LocalWorldMap


class ResolveStats:
    """Instrumentation counters; complexity claims are asserted on these."""

    __slots__ = ("resolves", "hops", "tree_probes", "chunk_inserts")

    def __init__(self):
        self.reset()

    def reset(self) -> None:
        self.resolves = 0
        self.hops = 0
        self.tree_probes = 0
        self.chunk_inserts = 0

    def snapshot(self) -> dict[str, int]:
        return {
            "resolves": self.resolves,
            "hops": self.hops,
            "tree_probes": self.tree_probes,
            "chunk_inserts": self.chunk_inserts,
        }


@dataclass(slots=True)
class ResolvedEntry:
    """A resolved chunk plus the (world, time) its bytes live under."""

    chunk: StateChunk
    world: int
    time: int


class Resolver:
    """Insert/read engine over a chunk space.

    Writers take a per-node mutex; timeline mutations additionally bump a
    per-node epoch (seqlock) so lock-free readers either see the state
    entirely before or entirely after a write, retrying the rare race.
    """

    def __init__(self, space: ChunkSpace):
        self.space = space
        self.stats = ResolveStats()
        self._gwim_lock = threading.Lock()
        self._locks_guard = threading.Lock()
        self._node_locks: dict[int, threading.Lock] = {}
        self._node_epoch: dict[int, int] = {}

    # -- world management ---------------------------------------------------

    def gwim(self) -> GlobalWorldMap:
        g = self.space.get(GWIM_KEY)
        if g is None:
            g = GlobalWorldMap()
            self.space.put_dirty(GWIM_KEY, g)
        return g

    def diverge(self, parent_world: int) -> int:
        with self._gwim_lock:
            g = self.gwim()
            world = g.diverge(parent_world)
            self.space.put_dirty(GWIM_KEY, g)
            return world

    def _check_world(self, world: int) -> None:
        if not self.gwim().is_registered(world):
            raise UnknownWorldError(f"world {world} is not registered")

    # -- write path ----------------------------------------------------------

    def _node_lock(self, node: int) -> threading.Lock:
        lock = self._node_locks.get(node)
        if lock is None:
            with self._locks_guard:
                lock = self._node_locks.setdefault(node, threading.Lock())
        return lock

    def insert_chunk(self, node: int, t: int, world: int, chunk: StateChunk) -> None:
        """Store chunk at (node, t, world) in that world's local timeline.

        Touches exactly three persisted keys: the state chunk, the
        (node, world) time tree, and the node's local world map.
        """
        self._check_world(world)
        space = self.space
        with self._node_lock(node):
            space.put_dirty(state_key(world, t, node), chunk)
            key = tree_key(world, node)
            tree = space.get(key)
            if tree is None:
                tree = TimeTree(node=node, world=world)
            lkey = lwim_key(node)
            lwim = space.get(lkey)
            if lwim is None:
                lwim = LocalWorldMap(node=node)
            epoch = self._node_epoch
            epoch[node] = epoch.get(node, 0) + 1  # odd: mutation in progress
            tree.insert(t)
            lwim.mark(world, t)
            epoch[node] += 1
            space.put_dirty(key, tree)
            space.put_dirty(lkey, lwim)
        self.stats.chunk_inserts += 1

    # -- read path -----------------------------------------------------------

    def resolve(self, node: int, t: int, world: int) -> StateChunk | None:
        """The chunk visible at (node, t, world); tombstones read as absent."""
        entry = self.resolve_entry(node, t, world)
        if entry is None or entry.chunk.tombstone:
            return None
        return entry.chunk

    def resolve_entry(self, node: int, t: int, world: int) -> ResolvedEntry | None:
        """Like resolve but keeps tombstones and reports chunk provenance."""
        epoch = self._node_epoch
        while True:
            before = epoch.get(node, 0)
            if before & 1:
                time.sleep(0)  # writer mid-mutation; yield and retry
                continue
            result = self._resolve_once(node, t, world)
            if epoch.get(node, 0) == before:
                return result
            time.sleep(0)

    def _resolve_once(self, node: int, t: int, world: int) -> ResolvedEntry | None:
        space = self.space
        gwim = self.gwim()
        if not gwim.is_registered(world):
            raise UnknownWorldError(f"world {world} is not registered")
        stats = self.stats
        stats.resolves += 1
        lwim = space.get(lwim_key(node))
        divergence = lwim.divergence if lwim is not None else None
        parents = gwim.parent
        current = world
        while True:
            s = divergence.get(current) if divergence is not None else None
            if s is not None and t >= s:
                tree = space.get(tree_key(current, node))
                stats.tree_probes += 1
                floor_t = tree.floor(t) if tree is not None else None
                if floor_t is None:
                    raise CorruptionError(
                        f"node {node} diverged in world {current} at {s} "
                        f"but its time tree has no entry <= {t}"
                    )
                key = state_key(current, floor_t, node)
                chunk = space.get(key)
                if chunk is None:
                    raise CorruptionError("time tree entry has no chunk", key=key)
                return ResolvedEntry(chunk=chunk, world=current, time=floor_t)
            parent = parents.get(current)
            if parent is None:
                return None
            stats.hops += 1
            current = parent

    # -- copy-on-write -------------------------------------------------------

    def resolve_for_write(self, node: int, t: int, world: int) -> tuple[StateChunk, StateChunk | None]:
        """A mutable working chunk for (node, t, world) plus its baseline.

        The working chunk is the stored object itself when (t, world)
        already holds one, a clone when the resolved chunk came from an
        ancestor viewpoint, and a fresh empty chunk when nothing resolves.
        The baseline is a snapshot for identity-write suppression.
        """
        entry = self.resolve_entry(node, t, world)
        if entry is None or entry.chunk.tombstone:
            return StateChunk(), StateChunk()
        if entry.world == world and entry.time == t:
            return entry.chunk, entry.chunk.copy()
        return entry.chunk.copy(), entry.chunk.copy()

    def commit(self, node: int, t: int, world: int,
               chunk: StateChunk, baseline: StateChunk | None) -> bool:
        """Insert the working chunk unless it is identical to its baseline."""
        if chunk == baseline:
            return False
        self.insert_chunk(node, t, world, chunk)
        return True

    @contextmanager
    def write(self, node: int, t: int, world: int):
        """Context manager: resolve for write, commit on exit if changed."""
        chunk, baseline = self.resolve_for_write(node, t, world)
        yield chunk
        self.commit(node, t, world, chunk, baseline)
