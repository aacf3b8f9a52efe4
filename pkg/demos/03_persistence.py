"""Durability: the append-log backend, restarts, and the text export.

A session is a unit of work: mutations stay in memory as dirty chunks
until save() writes them to the backend. The append-only log replays
latest-record-wins on open and repairs a torn tail.
"""

import os
import tempfile

from mwg import AppendLogBackend, GraphSession
from mwg.model import decode_key, export_line

workdir = tempfile.mkdtemp(prefix="mwg-demo-")
db_path = os.path.join(workdir, "graph.db")

g = GraphSession(AppendLogBackend(db_path)).connect()
sensor = g.create_node(world=0, time=0)
sensor.set("name", "feeder-7")
for t in range(0, 50, 10):
    sensor.travel_in_time(t).set("reading", 100 + t)
print("chunks written by save():", g.save())
g.close()

# restart: a new process would see exactly this
g2 = GraphSession(AppendLogBackend(db_path)).connect()
reopened = g2.node(sensor.node)
print("after reopen, reading at t=25:", reopened.travel_in_time(25).get("reading").value)

# the text export: one Base64 key:value record per line
dump_path = os.path.join(workdir, "dump.txt")
with open(dump_path, "w") as fh:
    for raw_key, raw_value in sorted(g2.space.backend.items()):
        fh.write(export_line(decode_key(raw_key), raw_value))
print("dump lines:", sum(1 for _ in open(dump_path)))
print("first line:", open(dump_path).readline().strip()[:60], "...")
g2.close()

# torn-write recovery: chop the log mid-record and reopen
size = os.path.getsize(db_path)
with open(db_path, "r+b") as fh:
    fh.truncate(size - 3)
g3 = GraphSession(AppendLogBackend(db_path)).connect()  # warns, repairs
print("after torn-tail repair, name still:", g3.node(sensor.node).get("name").value)
g3.close()
print("demo files in", workdir)
