"""Forked worlds sharing their past.

diverge() creates a world without copying anything. A child world reads
its parent's chunks for times before a node's first write in the child,
and its own from then on. Writes in a child never leak into the parent.
"""

from mwg import GraphSession

g = GraphSession().connect()

grid = g.create_node(world=0, time=0)
grid.set("load", 100)
grid.travel_in_time(10).set("load", 140)

# explore an alternative: what if we had rebalanced at t=10?
what_if = g.diverge(0)
grid.travel_in_world(what_if).travel_in_time(10).set("load", 90)

for t in (5, 10, 20):
    real = grid.travel_in_time(t).get("load").value
    alt = grid.travel_in_world(what_if).travel_in_time(t).get("load").value
    shared = "shared past" if t < 10 else "diverged"
    print(f"t={t:>2}: real={real:>4} what-if={alt:>4}   ({shared})")

# worlds nest: fork the fork, change nothing -> reads fall through two levels
deeper = g.diverge(what_if)
print("deeper world at t=20:", grid.travel_in_world(deeper).travel_in_time(20).get("load").value)
print("deeper world at t=5: ", grid.travel_in_world(deeper).travel_in_time(5).get("load").value)

# storage stayed lean: one extra chunk for the single divergent write
from mwg import ChunkKind

states = [k for k in g.space.dirty_keys() if k.kind == ChunkKind.STATE]
print("state chunks stored:", len(states), "(2 in the real world, 1 in the fork)")

# instrumentation: deep reads walk the parent chain, hop by hop
stats = g.resolver.stats
before = stats.hops
grid.travel_in_world(deeper).travel_in_time(5).get("load")
print("parent hops for the deep shared-past read:", stats.hops - before)
