"""A quick tour of the benchmark harness at toy scale.

Every workload embeds functional verification and refuses to report
timings if it fails; complexity claims are checked on instrumentation
counters (hops, probes, chunk writes), not wall clocks.
"""

import sys
import tempfile

from mwg.bench import (
    bench_miw,
    bench_node_worlds,
    bench_siw,
    bench_stair,
    bench_whatif,
    desk_config,
    load_edge_list,
    synthetic_edge_list,
)

with tempfile.NamedTemporaryFile(suffix=".edges", delete=False) as tmp:
    edges_path = tmp.name
synthetic_edge_list(edges_path, nodes=200, edges=800, seed=1)
dataset = load_edge_list(edges_path)

cfg = desk_config("miw", nodes=200)
miw = bench_miw(cfg, dataset)
siw = bench_siw(cfg, dataset)
print(f"MIW: {miw.metric('values_per_s'):>10,.0f} values/s (bulk load, one save)")
print(f"SIW: {siw.metric('values_per_s'):>10,.0f} values/s (save per insertion)")

worlds = bench_node_worlds(desk_config("worlds", worlds=50, timepoints=2_000, repetitions=10))
print(
    "nested worlds: shared-past read",
    f"{worlds.metric('read_latency_R2_us'):.1f}us",
    "vs local read",
    f"{worlds.metric('read_latency_R3_us'):.1f}us",
    f"(x{worlds.metric('r3_vs_r2_speedup'):.1f} faster after divergence)",
)

stair = bench_stair(desk_config("stair", nodes=40, timepoints=50, worlds=60, m_step=30, x_step=0.5))
print("stair hop means (must equal m exactly):")
for m, x, hops in stair.metric_series("hops_mean"):
    print(f"  m={m:>3} x={x}: {hops}")

whatif = bench_whatif(desk_config("whatif", nodes=60, timepoints=20, generations=400))
print(
    "what-if 400 generations:",
    f"slope {whatif.metric('latency_slope_us_per_gen'):.3f} us/gen,",
    f"R^2 {whatif.metric('latency_r_squared'):.2f},",
    f"{int(whatif.metric('writes_per_generation'))} chunk writes/gen",
)

print("\nall embedded verifications passed")
sys.exit(0)
