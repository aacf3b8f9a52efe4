"""Ordered per-(node, world) timepoint index with O(log n) insert and floor.

A red-black tree stored in flat primitive arrays (`array` module), one
tree per (node, world): entries are the timepoints at which that node was
written in that world. Flat arrays keep a million-entry tree in a few
contiguous buffers instead of a million heap objects, which is what makes
the single-node temporal benchmark viable. Child/parent indexes are
32-bit, capping one tree at ~2^31 entries.

The floor lookup (greatest entry <= t) realizes temporal validity
intervals [t_i, t_i+1): a chunk written at t_i answers every read until
the next write.
"""

from __future__ import annotations

from array import array

from .errors import CorruptionError
from .model import TIME_BIAS, TIME_MAX, TIME_MIN, read_uvarint, write_uvarint

NIL = -1
_RED = 1
_BLACK = 0


class TimeTree:
    __slots__ = (
        "node", "world", "dirty", "_root",
        "_key", "_left", "_right", "_parent", "_color",
        "_max_key", "_rightmost",
    )

    def __init__(self, node: int = 0, world: int = 0):
        self.node = node
        self.world = world
        self.dirty = False
        self._root = NIL
        self._key = array("q")
        self._left = array("i")
        self._right = array("i")
        self._parent = array("i")
        self._color = bytearray()
        self._max_key = 0
        self._rightmost = NIL

    def __len__(self) -> int:
        return len(self._key)

    def __contains__(self, t: int) -> bool:
        key, left, right = self._key, self._left, self._right
        cur = self._root
        while cur != NIL:
            k = key[cur]
            if t == k:
                return True
            cur = left[cur] if t < k else right[cur]
        return False

    def insert(self, t: int) -> bool:
        """Add a timepoint; returns False (and changes nothing) if present."""
        if not TIME_MIN <= t <= TIME_MAX:
            raise ValueError(f"timepoint out of range: {t}")
        self.dirty = True
        key, left, right, parent = self._key, self._left, self._right, self._parent

        if self._rightmost != NIL and t > self._max_key:
            # timeline appends are the common case: skip the descent
            parent_idx = self._rightmost
        else:
            parent_idx = NIL
            cur = self._root
            while cur != NIL:
                k = key[cur]
                if t == k:
                    return False
                parent_idx = cur
                cur = left[cur] if t < k else right[cur]

        idx = len(key)
        key.append(t)
        left.append(NIL)
        right.append(NIL)
        parent.append(parent_idx)
        self._color.append(_RED)

        if parent_idx == NIL:
            self._root = idx
        elif t < key[parent_idx]:
            left[parent_idx] = idx
        else:
            right[parent_idx] = idx
        if t > self._max_key or self._rightmost == NIL:
            self._max_key = t
            self._rightmost = idx
        self._insert_fixup(idx)
        return True

    def _insert_fixup(self, z: int) -> None:
        left, right, parent, color = self._left, self._right, self._parent, self._color
        while True:
            p = parent[z]
            if p == NIL or color[p] == _BLACK:
                break
            g = parent[p]
            if p == left[g]:
                uncle = right[g]
                if uncle != NIL and color[uncle] == _RED:
                    color[p] = _BLACK
                    color[uncle] = _BLACK
                    color[g] = _RED
                    z = g
                else:
                    if z == right[p]:
                        z = p
                        self._rotate_left(z)
                        p = parent[z]
                        g = parent[p]
                    color[p] = _BLACK
                    color[g] = _RED
                    self._rotate_right(g)
            else:
                uncle = left[g]
                if uncle != NIL and color[uncle] == _RED:
                    color[p] = _BLACK
                    color[uncle] = _BLACK
                    color[g] = _RED
                    z = g
                else:
                    if z == left[p]:
                        z = p
                        self._rotate_right(z)
                        p = parent[z]
                        g = parent[p]
                    color[p] = _BLACK
                    color[g] = _RED
                    self._rotate_left(g)
        self._color[self._root] = _BLACK

    def _rotate_left(self, x: int) -> None:
        left, right, parent = self._left, self._right, self._parent
        y = right[x]
        right[x] = left[y]
        if left[y] != NIL:
            parent[left[y]] = x
        parent[y] = parent[x]
        if parent[x] == NIL:
            self._root = y
        elif x == left[parent[x]]:
            left[parent[x]] = y
        else:
            right[parent[x]] = y
        left[y] = x
        parent[x] = y

    def _rotate_right(self, x: int) -> None:
        left, right, parent = self._left, self._right, self._parent
        y = left[x]
        left[x] = right[y]
        if right[y] != NIL:
            parent[right[y]] = x
        parent[y] = parent[x]
        if parent[x] == NIL:
            self._root = y
        elif x == right[parent[x]]:
            right[parent[x]] = y
        else:
            left[parent[x]] = y
        right[y] = x
        parent[x] = y

    def floor(self, t: int) -> int | None:
        """Greatest entry <= t, or None when every entry is above t."""
        key, left, right = self._key, self._left, self._right
        best = None
        cur = self._root
        while cur != NIL:
            k = key[cur]
            if k == t:
                return t
            if k < t:
                best = k
                cur = right[cur]
            else:
                cur = left[cur]
        return best

    def first(self) -> int | None:
        cur = self._root
        if cur == NIL:
            return None
        left = self._left
        while left[cur] != NIL:
            cur = left[cur]
        return self._key[cur]

    def range_between(self, lo: int, hi: int) -> list[int]:
        """All entries in [lo, hi], ascending."""
        if lo > hi:
            raise ValueError(f"empty range: {lo} > {hi}")
        key, left, right = self._key, self._left, self._right
        out: list[int] = []
        stack: list[int] = []
        cur = self._root
        while stack or cur != NIL:
            while cur != NIL:
                k = key[cur]
                if k < lo:
                    cur = right[cur]  # whole left subtree below lo
                    continue
                stack.append(cur)
                cur = left[cur]
            if not stack:
                break
            cur = stack.pop()
            k = key[cur]
            if k > hi:
                break  # in-order from here only grows
            if k >= lo:
                out.append(k)
            cur = right[cur]
        return out

    def iter_ascending(self):
        key, left, right = self._key, self._left, self._right
        stack: list[int] = []
        cur = self._root
        while stack or cur != NIL:
            while cur != NIL:
                stack.append(cur)
                cur = left[cur]
            cur = stack.pop()
            yield key[cur]
            cur = right[cur]

    def max_depth(self) -> int:
        """Longest root-to-node path (nodes counted); balance probe."""
        if self._root == NIL:
            return 0
        left, right = self._left, self._right
        depth = 0
        stack = [(self._root, 1)]
        while stack:
            idx, d = stack.pop()
            if d > depth:
                depth = d
            if left[idx] != NIL:
                stack.append((left[idx], d + 1))
            if right[idx] != NIL:
                stack.append((right[idx], d + 1))
        return depth

    def serialize(self) -> bytes:
        out = bytearray()
        write_uvarint(out, len(self._key))
        for t in self.iter_ascending():
            out += (t + TIME_BIAS).to_bytes(8, "big")
        return bytes(out)

    @classmethod
    def deserialize(cls, raw: bytes, node: int = 0, world: int = 0) -> TimeTree:
        count, offset = read_uvarint(raw, 0)
        if offset + 8 * count != len(raw):
            raise CorruptionError("time tree payload length mismatch")
        times = array("q")
        previous = None
        for i in range(count):
            t = int.from_bytes(raw[offset + 8 * i : offset + 8 * (i + 1)], "big") - TIME_BIAS
            if previous is not None and t <= previous:
                raise CorruptionError("time tree entries not strictly increasing")
            previous = t
            times.append(t)
        tree = cls(node=node, world=world)
        tree._build_balanced(times)
        return tree

    def _build_balanced(self, sorted_times: array) -> None:
        """Rebuild from sorted input: midpoint recursion, deepest level red."""
        n = len(sorted_times)
        if n == 0:
            return
        self._key = array("q", bytes(8 * n))
        self._left = array("i", bytes(4 * n))
        self._right = array("i", bytes(4 * n))
        self._parent = array("i", bytes(4 * n))
        self._color = bytearray(n)
        key, left, right, parent, color = self._key, self._left, self._right, self._parent, self._color
        red_depth = n.bit_length() - 1
        next_idx = 0
        # (lo, hi, parent index, depth), explicit stack to survive any size
        stack: list[tuple[int, int, int, int]] = [(0, n - 1, NIL, 0)]
        while stack:
            lo, hi, par, depth = stack.pop()
            mid = (lo + hi) // 2
            idx = next_idx
            next_idx += 1
            key[idx] = sorted_times[mid]
            parent[idx] = par
            color[idx] = _RED if (depth == red_depth and par != NIL) else _BLACK
            left[idx] = right[idx] = NIL
            if par == NIL:
                self._root = idx
            elif sorted_times[mid] < key[par]:
                left[par] = idx
            else:
                right[par] = idx
            # push right first so the left child is materialized next (index
            # order is irrelevant, parent index just must exist before child)
            if mid + 1 <= hi:
                stack.append((mid + 1, hi, idx, depth + 1))
            if lo <= mid - 1:
                stack.append((lo, mid - 1, idx, depth + 1))
        self._max_key = sorted_times[n - 1]
        cur = self._root
        while right[cur] != NIL:
            cur = right[cur]
        self._rightmost = cur
