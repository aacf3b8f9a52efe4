"""Developer-facing graph sessions and viewpoint-bound node handles.

A session is one unit of work over a chunk space: connect, mutate through
handles, save. A handle binds a node id to a (world, time) viewpoint;
travel operations rebind the viewpoint without touching storage, so
moving around in time or across worlds is free until something is
written.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import NotConnectedError, UnknownIndexError, UnknownWorldError
from .model import (
    META_KEY,
    ROOT_WORLD,
    TIME_MIN,
    AttributeValue,
    AttrType,
    SessionMeta,
    StateChunk,
)
from .resolver import Resolver
from .storage import ChunkSpace, ChunkStoreBackend

_BUCKET_SEP = "\x1f"


@dataclass(frozen=True, slots=True)
class NodeHandle:
    """A node seen from one (world, time) viewpoint; immutable."""

    session: GraphSession
    node: int
    world: int
    time: int

    # -- viewpoint travel ----------------------------------------------------

    def travel_in_time(self, t: int) -> NodeHandle:
        return replace(self, time=t)

    def travel_in_world(self, world: int) -> NodeHandle:
        self.session._require_world(world)
        return replace(self, world=world)

    # -- reads ----------------------------------------------------------------

    def exists(self) -> bool:
        return self._resolve() is not None

    def state(self) -> StateChunk | None:
        """A defensive copy of the resolved chunk at this viewpoint."""
        chunk = self._resolve()
        return chunk.copy() if chunk is not None else None

    def get(self, name: str) -> AttributeValue | None:
        chunk = self._resolve()
        if chunk is None:
            return None
        return chunk.attributes.get(name)

    def relation(self, name: str) -> list[NodeHandle]:
        """Targets of the named relation, resolvable ones only."""
        return self.relation_resolved(name)[0]

    def relation_resolved(self, name: str) -> tuple[list[NodeHandle], list[int]]:
        """(resolvable targets as handles, target ids absent at this viewpoint)."""
        chunk = self._resolve()
        if chunk is None:
            return [], []
        session = self.session
        resolver = session.resolver
        handles: list[NodeHandle] = []
        skipped: list[int] = []
        for target in chunk.relations.get(name, ()):
            if resolver.resolve(target, self.time, self.world) is None:
                skipped.append(target)
            else:
                handles.append(replace(self, node=target))
        return handles, skipped

    def relation_targets(self, name: str) -> list[int]:
        """Raw target ids, whether or not they resolve at this viewpoint."""
        chunk = self._resolve()
        if chunk is None:
            return []
        return list(chunk.relations.get(name, ()))

    # -- writes ---------------------------------------------------------------

    def set(self, name: str, value) -> NodeHandle:
        """Set an attribute at this viewpoint (copy-on-write); returns self."""
        value = AttributeValue.coerce(value)
        with self.session._write(self) as chunk:
            chunk.set_attr(name, value)
        return self

    def remove(self, name: str) -> bool:
        with self.session._write(self) as chunk:
            removed = chunk.remove_attr(name)
        return removed

    def add_relation(self, name: str, target: NodeHandle | int) -> bool:
        target_id = target.node if isinstance(target, NodeHandle) else target
        with self.session._write(self) as chunk:
            added = chunk.add_rel(name, target_id)
        return added

    def remove_relation(self, name: str, target: NodeHandle | int) -> bool:
        """False when the target was not a member (no-op)."""
        target_id = target.node if isinstance(target, NodeHandle) else target
        with self.session._write(self) as chunk:
            removed = chunk.remove_rel(name, target_id)
        return removed

    def delete(self) -> bool:
        """Tombstone this node at the viewpoint; False if already absent."""
        session = self.session
        session._check_connected()
        if session.resolver.resolve(self.node, self.time, self.world) is None:
            return False
        session.resolver.insert_chunk(
            self.node, self.time, self.world, StateChunk.make_tombstone()
        )
        return True

    def _resolve(self) -> StateChunk | None:
        session = self.session
        session._check_connected()
        return session.resolver.resolve(self.node, self.time, self.world)


class GraphSession:
    """One unit of work over a many-world graph."""

    def __init__(self, backend: ChunkStoreBackend | None = None,
                 cache_capacity: int | None = None):
        if cache_capacity is None:
            self.space = ChunkSpace(backend)
        else:
            self.space = ChunkSpace(backend, cache_capacity=cache_capacity)
        self.resolver = Resolver(self.space)
        self._meta: SessionMeta | None = None
        self._connected = False

    # -- lifecycle ------------------------------------------------------------

    def connect(self) -> GraphSession:
        meta = self.space.get(META_KEY)
        if meta is None:
            meta = SessionMeta()
            self.space.put_dirty(META_KEY, meta)
        self._meta = meta
        self.resolver.gwim()  # materialize the world map
        self._connected = True
        return self

    def save(self) -> int:
        """Flush every dirty chunk to the backend; returns the count."""
        self._check_connected()
        return self.space.save()

    def close(self) -> None:
        self._connected = False
        self.space.close()

    def __enter__(self) -> GraphSession:
        return self.connect() if not self._connected else self

    def __exit__(self, exc_type, exc, tb) -> None:
        self.close()

    def _check_connected(self) -> None:
        if not self._connected:
            raise NotConnectedError("graph session is not connected")

    # -- nodes and worlds -----------------------------------------------------

    def create_node(self, world: int = ROOT_WORLD, time: int = 0) -> NodeHandle:
        """Allocate a fresh node and insert its empty chunk at (world, time)."""
        self._check_connected()
        self._require_world(world)
        meta = self._meta
        node = meta.next_node
        meta.next_node += 1
        self.space.put_dirty(META_KEY, meta)
        self.resolver.insert_chunk(node, time, world, StateChunk())
        return NodeHandle(self, node, world, time)

    def node(self, node: int, world: int = ROOT_WORLD, time: int = 0) -> NodeHandle:
        """A handle for an existing (or conceptual) node id."""
        self._check_connected()
        self._require_world(world)
        return NodeHandle(self, node, world, time)

    def diverge(self, parent_world: int) -> int:
        """Fork a new world from parent_world; shares all state before
        each node's first write in the child."""
        self._check_connected()
        return self.resolver.diverge(parent_world)

    def _require_world(self, world: int) -> None:
        if not self.resolver.gwim().is_registered(world):
            raise UnknownWorldError(f"world {world} is not registered")

    def _write(self, handle: NodeHandle):
        self._check_connected()
        return self.resolver.write(handle.node, handle.time, handle.world)

    # -- named indexes ----------------------------------------------------------

    def index_add(self, index_name: str, handle: NodeHandle, attribute: str) -> None:
        """File handle's node under its current value of attribute.

        The index is itself a node (created at the root world, earliest
        time, so it is visible from every viewpoint); its buckets are
        relations keyed by the attribute value, so the index versions in
        time and across worlds exactly like any other node.
        """
        self._check_connected()
        value = handle.get(attribute)
        if value is None:
            raise ValueError(
                f"node {handle.node} has no attribute {attribute!r} at its viewpoint"
            )
        index_node = self._index_node(index_name, create=True)
        bucket = _bucket_name(value)
        index_handle = NodeHandle(self, index_node, handle.world, handle.time)
        index_handle.add_relation(bucket, handle.node)

    def index_find(self, index_name: str, value, world: int = ROOT_WORLD,
                   time: int = 0) -> list[NodeHandle]:
        """Nodes filed under value, as seen from the given viewpoint."""
        self._check_connected()
        index_node = self._index_node(index_name, create=False)
        bucket = _bucket_name(AttributeValue.coerce(value))
        index_handle = self.node(index_node, world, time)
        return [
            NodeHandle(self, target, world, time)
            for target in index_handle.relation_targets(bucket)
        ]

    def _index_node(self, index_name: str, create: bool) -> int:
        meta = self._meta
        node = meta.indexes.get(index_name)
        if node is not None:
            return node
        if not create:
            raise UnknownIndexError(f"no index named {index_name!r}")
        created = self.create_node(ROOT_WORLD, TIME_MIN)
        meta.indexes[index_name] = created.node
        self.space.put_dirty(META_KEY, meta)
        return created.node


def _bucket_name(value: AttributeValue) -> str:
    if value.type == AttrType.ENUM:
        text = f"{value.value[0]}:{value.value[1]}"
    elif value.type == AttrType.BOOL:
        text = "true" if value.value else "false"
    elif value.type == AttrType.DOUBLE:
        text = repr(value.value)
    else:
        text = str(value.value)
    return f"{int(value.type)}{_BUCKET_SEP}{text}"
