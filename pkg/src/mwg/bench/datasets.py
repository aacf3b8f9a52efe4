"""SNAP-style edge list ingestion and synthetic dataset generation."""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass

logger = logging.getLogger(__name__)


@dataclass
class EdgeListDataset:
    """A parsed edge list with ids densely remapped to 0..node_count-1."""

    path: str
    edges: list[tuple[int, int]]
    node_count: int
    malformed: int

    def adjacency(self) -> dict[int, list[int]]:
        adj: dict[int, list[int]] = {}
        for source, target in self.edges:
            adj.setdefault(source, []).append(target)
        return adj


def load_edge_list(path: str) -> EdgeListDataset:
    """Parse a whitespace-separated edge list; '#' lines are comments.

    Original ids are remapped densely in first-seen order, duplicate
    edges are dropped, malformed lines are counted and logged.
    """
    remap: dict[int, int] = {}
    edges: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    malformed = 0
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                malformed += 1
                continue
            try:
                raw_source, raw_target = int(parts[0]), int(parts[1])
            except ValueError:
                malformed += 1
                continue
            source = remap.setdefault(raw_source, len(remap))
            target = remap.setdefault(raw_target, len(remap))
            if (source, target) in seen:
                continue
            seen.add((source, target))
            edges.append((source, target))
    if malformed:
        logger.warning("%s: skipped %d malformed lines", path, malformed)
    if not edges:
        raise ValueError(f"{path}: no valid edges")
    return EdgeListDataset(
        path=str(path), edges=edges, node_count=len(remap), malformed=malformed
    )


def synthetic_edge_list(path: str, nodes: int, edges: int, seed: int = 42) -> str:
    """Write a synthetic dataset with exactly the requested unique counts.

    A spanning path guarantees every node id appears; the rest are random
    distinct pairs. Returns the path for convenience.
    """
    if nodes < 2:
        raise ValueError("need at least 2 nodes")
    if edges < nodes - 1:
        raise ValueError("need at least nodes-1 edges to touch every node")
    max_edges = nodes * (nodes - 1)
    if edges > max_edges:
        raise ValueError(f"at most {max_edges} distinct directed edges with {nodes} nodes")
    rng = random.Random(seed)
    seen: set[tuple[int, int]] = set()
    ordered: list[tuple[int, int]] = []
    for i in range(nodes - 1):
        edge = (i, i + 1)
        seen.add(edge)
        ordered.append(edge)
    while len(ordered) < edges:
        source = rng.randrange(nodes)
        target = rng.randrange(nodes)
        if source == target or (source, target) in seen:
            continue
        seen.add((source, target))
        ordered.append((source, target))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# synthetic edge list: {nodes} nodes, {edges} edges, seed {seed}\n")
        fh.write("# FromNodeId\tToNodeId\n")
        for source, target in ordered:
            fh.write(f"{source}\t{target}\n")
    return str(path)
