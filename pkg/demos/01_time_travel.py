"""A node's attributes and relations evolving along time.

Writes land at timepoints; a read at time t sees the latest state at or
before t, so every write opens a validity interval that lasts until the
next one.
"""

from mwg import AttributeValue, GraphSession

g = GraphSession().connect()

eve = g.create_node(world=0, time=0)
bob = g.create_node(world=0, time=0)
eve.set("name", "Eve")
eve.set("age", AttributeValue.of_int(17))
bob.set("name", "Bob")
eve.add_relation("friend", bob)
bob.add_relation("friend", eve)

print("at t=0:", eve.get("name").value, "age", eve.get("age").value)
print("friends:", [h.get("name").value for h in eve.relation("friend")])

# a birthday at t=100 — earlier reads are untouched
eve.travel_in_time(100).set("age", AttributeValue.of_int(18))
for t in (50, 100, 150):
    print(f"age at t={t}:", eve.travel_in_time(t).get("age").value)

# relations version the same way
eve.travel_in_time(200).remove_relation("friend", bob)
print("friends at t=199:", [h.node for h in eve.travel_in_time(199).relation("friend")])
print("friends at t=200:", [h.node for h in eve.travel_in_time(200).relation("friend")])

# before its first write, a node simply does not exist
print("eve exists at t=-1:", eve.travel_in_time(-1).exists())

written = g.save()
print("chunks saved:", written)
