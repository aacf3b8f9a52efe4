"""World genealogy and per-node divergence times.

Two maps drive shared-past resolution: the global world map records every
world's parent (the fork tree), and each node's local world map records
the earliest timepoint the node was ever written in each world — its
divergence point. A child world never copies data at fork time; reads
below the divergence point walk up the parent chain instead.
"""

from __future__ import annotations

from .errors import CorruptionError, UnknownWorldError
from .model import ROOT_WORLD, TIME_BIAS, read_uvarint, write_uvarint


class GlobalWorldMap:
    """Singleton world -> parent map; allocates world ids monotonically."""

    __slots__ = ("parent", "dirty", "_next")

    def __init__(self):
        self.parent: dict[int, int] = {}
        self.dirty = False
        self._next = ROOT_WORLD + 1

    def diverge(self, parent_world: int) -> int:
        """Fork a fresh world from parent_world; no data is copied, ever."""
        if not self.is_registered(parent_world):
            raise UnknownWorldError(f"cannot diverge from unknown world {parent_world}")
        world = self._next
        self._next += 1
        self.parent[world] = parent_world
        self.dirty = True
        return world

    def parent_of(self, world: int) -> int | None:
        return self.parent.get(world)

    def is_registered(self, world: int) -> bool:
        return world == ROOT_WORLD or world in self.parent

    def depth(self, world: int) -> int:
        """Hops from world up to the root."""
        hops = 0
        cur: int | None = world
        while cur is not None and cur != ROOT_WORLD:
            cur = self.parent.get(cur)
            if cur is None:
                raise UnknownWorldError(f"world {world} does not reach the root")
            hops += 1
        return hops

    def worlds(self) -> list[int]:
        return [ROOT_WORLD, *self.parent.keys()]

    def serialize(self) -> bytes:
        out = bytearray()
        write_uvarint(out, len(self.parent))
        for world in sorted(self.parent):
            out += world.to_bytes(8, "big")
            out += self.parent[world].to_bytes(8, "big")
        return bytes(out)

    @classmethod
    def deserialize(cls, raw: bytes) -> GlobalWorldMap:
        count, offset = read_uvarint(raw, 0)
        if offset + 16 * count != len(raw):
            raise CorruptionError("world map payload length mismatch")
        gwim = cls()
        for i in range(count):
            base = offset + 16 * i
            world = int.from_bytes(raw[base : base + 8], "big")
            parent = int.from_bytes(raw[base + 8 : base + 16], "big")
            gwim.parent[world] = parent
        if gwim.parent:
            gwim._next = max(gwim.parent) + 1
        return gwim


class LocalWorldMap:
    """Per-node world -> divergence timepoint map."""

    __slots__ = ("node", "divergence", "dirty")

    def __init__(self, node: int = 0):
        self.node = node
        self.divergence: dict[int, int] = {}
        self.dirty = False

    def divergence_of(self, world: int) -> int | None:
        return self.divergence.get(world)

    def mark(self, world: int, t: int) -> None:
        """Record a write at t; keeps the minimum ever seen per world."""
        current = self.divergence.get(world)
        if current is None or t < current:
            self.divergence[world] = t
        self.dirty = True

    def serialize(self) -> bytes:
        out = bytearray()
        write_uvarint(out, len(self.divergence))
        for world in sorted(self.divergence):
            out += world.to_bytes(8, "big")
            out += (self.divergence[world] + TIME_BIAS).to_bytes(8, "big")
        return bytes(out)

    @classmethod
    def deserialize(cls, raw: bytes, node: int = 0) -> LocalWorldMap:
        count, offset = read_uvarint(raw, 0)
        if offset + 16 * count != len(raw):
            raise CorruptionError("local world map payload length mismatch")
        lwim = cls(node=node)
        for i in range(count):
            base = offset + 16 * i
            world = int.from_bytes(raw[base : base + 8], "big")
            t = int.from_bytes(raw[base + 8 : base + 16], "big") - TIME_BIAS
            lwim.divergence[world] = t
        return lwim
