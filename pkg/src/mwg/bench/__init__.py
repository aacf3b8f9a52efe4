"""Benchmark harness: datasets, workloads, and CSV reporting."""

from .datasets import EdgeListDataset, load_edge_list, synthetic_edge_list
from .report import BenchReport
from .workloads import (
    BenchConfig,
    bench_miw,
    bench_node_worlds,
    bench_siw,
    bench_stair,
    bench_temporal,
    bench_whatif,
    desk_config,
)

__all__ = [
    "BenchConfig",
    "BenchReport",
    "EdgeListDataset",
    "bench_miw",
    "bench_node_worlds",
    "bench_siw",
    "bench_stair",
    "bench_temporal",
    "bench_whatif",
    "desk_config",
    "load_edge_list",
    "synthetic_edge_list",
]
