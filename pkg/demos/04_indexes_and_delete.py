"""Named indexes that time-travel, and deletion as history.

An index is a regular node whose buckets are relations keyed by value,
so index lookups obey the same time/world semantics as everything else.
Deleting a node writes a tombstone: later reads see it as absent, the
past stays readable.
"""

from mwg import GraphSession

g = GraphSession().connect()

eve = g.create_node(0, 0)
eve.set("name", "Eve")
bob = g.create_node(0, 0)
bob.set("name", "Bob")

g.index_add("byName", eve, "name")
g.index_add("byName", bob, "name")
print("find Eve:", [h.node for h in g.index_find("byName", "Eve")])

# the index itself forks: rename Eve in a what-if world and re-index there
w1 = g.diverge(0)
alice = eve.travel_in_world(w1)
alice.set("name", "Alice")
g.index_add("byName", alice, "name")
print("root world, Alice? ", [h.node for h in g.index_find("byName", "Alice", world=0)])
print("fork, Alice:       ", [h.node for h in g.index_find("byName", "Alice", world=w1)])
print("fork, Eve (inherited bucket):", [h.node for h in g.index_find("byName", "Eve", world=w1)])

# deletion: tombstone at t=50
eve.travel_in_time(50).delete()
print("eve at t=49:", eve.travel_in_time(49).get("name").value)
print("eve at t=50 exists:", eve.travel_in_time(50).exists())
print("delete again is a no-op:", eve.travel_in_time(50).delete())

# deletion is world-local too
print("alice in fork at t=50:", alice.travel_in_time(50).get("name").value)

# dangling relation targets are skipped and reported
bob.add_relation("friend", eve)
handles, skipped = bob.travel_in_time(60).relation_resolved("friend")
print("bob's resolvable friends at t=60:", [h.node for h in handles], "skipped:", skipped)
