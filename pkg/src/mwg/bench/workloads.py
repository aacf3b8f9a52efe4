"""Experiment families for the engine, at desk scale.

Every workload embeds functional verification (value echoes, byte-equal
probe snapshots, instrumentation-counter checks) and refuses to report
timings when any of it fails. Wherever a complexity claim is asserted,
it is asserted on hop/probe/write counters, not wall clocks; wall-clock
assertions live in the acceptance suite with wide bands.

Desk-scale defaults shrink the original grids while preserving their
shape; `scale="paper"` restores the full-size grids for overnight runs.
"""

from __future__ import annotations

import gc
import math
import random
import statistics
import time
from contextlib import contextmanager
from dataclasses import dataclass

from ..graph import GraphSession
from ..model import AttributeValue, StateChunk, serialize_chunk
from ..oracle import SnapshotOracle
from ..resolver import Resolver
from .datasets import EdgeListDataset
from .report import BenchReport

EDGE_RELATION = "linked"


@dataclass
class BenchConfig:
    """Knobs shared by all scenarios; the seed fixes every random choice."""

    scenario: str = "custom"
    nodes: int = 2_000
    timepoints: int = 10_000
    worlds: int = 100
    mutation: float = 0.03
    generations: int = 2_000
    seed: int = 42
    repetitions: int = 100
    out: str | None = None
    scale: str = "desk"
    m_step: int = 100
    x_step: float = 0.25

    def __post_init__(self):
        if not 0.0 <= self.mutation <= 1.0:
            raise ValueError(f"mutation fraction must be in [0, 1], got {self.mutation}")
        if self.scale not in ("desk", "paper"):
            raise ValueError(f"scale must be desk or paper, got {self.scale!r}")
        for name in ("nodes", "timepoints", "generations", "repetitions"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


_DESK_DEFAULTS = {
    "miw": dict(nodes=2_000, timepoints=1, worlds=0),
    "siw": dict(nodes=200, timepoints=1, worlds=0),
    "temporal": dict(nodes=1, timepoints=1_000_000, worlds=0, repetitions=1),
    "worlds": dict(nodes=1, timepoints=10_000, worlds=100, repetitions=100),
    "stair": dict(nodes=120, timepoints=150, worlds=500, m_step=100, x_step=0.25),
    "whatif": dict(nodes=500, timepoints=100, generations=2_000, mutation=0.03),
}

_PAPER_DEFAULTS = {
    "miw": dict(nodes=36_692, timepoints=1, worlds=0),
    "siw": dict(nodes=36_692, timepoints=1, worlds=0),
    "temporal": dict(nodes=1, timepoints=256_000_000, worlds=0, repetitions=1),
    "worlds": dict(nodes=1, timepoints=10_000, worlds=100, repetitions=100),
    "stair": dict(nodes=2_000, timepoints=10_000, worlds=5_000, m_step=200, x_step=0.10),
    "whatif": dict(nodes=2_000, timepoints=10_000, generations=120_000, mutation=0.03),
}


def desk_config(scenario: str, scale: str = "desk", **overrides) -> BenchConfig:
    table = _PAPER_DEFAULTS if scale == "paper" else _DESK_DEFAULTS
    if scenario not in table:
        raise ValueError(f"unknown scenario {scenario!r}")
    fields = dict(table[scenario])
    fields.update(overrides)
    return BenchConfig(scenario=scenario, scale=scale, **fields)


def _fresh_session() -> GraphSession:
    # in-memory backend, caches deactivated: measures the engine, not a store
    return GraphSession(cache_capacity=0).connect()


@contextmanager
def _gc_paused():
    """Cycle collection off while a workload runs.

    The engine's structures are acyclic and reclaimed by refcounting; the
    cycle collector only adds O(heap) pauses that scale with the working
    set and would be charged to whichever operation they interrupt.
    """
    was_enabled = gc.isenabled()
    gc.disable()
    try:
        yield
    finally:
        if was_enabled:
            gc.enable()


def _gc_paused_bench(fn):
    def wrapper(*args, **kwargs):
        with _gc_paused():
            return fn(*args, **kwargs)

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def _value_chunk(t: int) -> StateChunk:
    chunk = StateChunk()
    chunk.attributes["v"] = AttributeValue.of_long(t)
    return chunk


# --------------------------------------------------------------------------
# MIW / SIW
# --------------------------------------------------------------------------

def _verify_edges(session: GraphSession, dataset: EdgeListDataset,
                  report: BenchReport) -> None:
    adjacency = dataset.adjacency()
    bad = 0
    for source in range(dataset.node_count):
        expected = adjacency.get(source, [])
        got = [h.node for h in session.node(source).relation(EDGE_RELATION)]
        if got != expected:
            bad += 1
    report.check(
        "edge_retrieval", bad == 0,
        f"{bad} of {dataset.node_count} nodes disagree with the input adjacency",
    )


@_gc_paused_bench
def bench_miw(cfg: BenchConfig, dataset: EdgeListDataset) -> BenchReport:
    """Massive insertion: bulk nodes, bulk edges, one save at the end."""
    report = BenchReport("miw", cfg.seed)
    session = _fresh_session()
    adjacency = dataset.adjacency()
    started = time.perf_counter()
    for _ in range(dataset.node_count):
        session.create_node(0, 0)
    resolver = session.resolver
    for source, targets in adjacency.items():
        chunk, baseline = resolver.resolve_for_write(source, 0, 0)
        for target in targets:
            chunk.add_rel(EDGE_RELATION, target)
        resolver.commit(source, 0, 0, chunk, baseline)
    written = session.save()
    elapsed = time.perf_counter() - started

    total_values = dataset.node_count + len(dataset.edges)
    report.add("nodes", dataset.node_count, param1=dataset.node_count, param2=len(dataset.edges))
    report.add("edges", len(dataset.edges), param1=dataset.node_count, param2=len(dataset.edges))
    report.add("chunks_saved", written, param1=dataset.node_count, param2=len(dataset.edges))
    _verify_edges(session, dataset, report)
    report.require_ok()
    report.add("values_per_s", total_values / elapsed if elapsed > 0 else 0.0,
               param1=dataset.node_count, param2=len(dataset.edges))
    return report


@_gc_paused_bench
def bench_siw(cfg: BenchConfig, dataset: EdgeListDataset) -> BenchReport:
    """Single insertion: every node and edge is committed (saved) directly."""
    report = BenchReport("siw", cfg.seed)
    session = _fresh_session()
    started = time.perf_counter()
    for _ in range(dataset.node_count):
        session.create_node(0, 0)
        session.save()
    for source, target in dataset.edges:
        session.node(source).add_relation(EDGE_RELATION, target)
        session.save()
    elapsed = time.perf_counter() - started

    total_values = dataset.node_count + len(dataset.edges)
    report.add("nodes", dataset.node_count, param1=dataset.node_count, param2=len(dataset.edges))
    report.add("edges", len(dataset.edges), param1=dataset.node_count, param2=len(dataset.edges))
    _verify_edges(session, dataset, report)
    report.require_ok()
    report.add("values_per_s", total_values / elapsed if elapsed > 0 else 0.0,
               param1=dataset.node_count, param2=len(dataset.edges))
    return report


# --------------------------------------------------------------------------
# Temporal throughput (single node, single world)
# --------------------------------------------------------------------------

def temporal_scales(cfg: BenchConfig) -> list[int]:
    top = cfg.timepoints
    return sorted({max(1, top // 100), max(1, top // 10), top})


def bench_temporal(cfg: BenchConfig) -> BenchReport:
    """Insert n timepoints into one node, then read them back shuffled."""
    report = BenchReport("temporal", cfg.seed)
    rng = random.Random(cfg.seed)
    for n in temporal_scales(cfg):
        session = _fresh_session()
        resolver = session.resolver
        insert_chunk = resolver.insert_chunk
        resolve = resolver.resolve

        order = list(range(n))
        rng.shuffle(order)
        with _gc_paused():
            started = time.perf_counter()
            for t in range(n):
                insert_chunk(0, t, 0, _value_chunk(t))
            insert_elapsed = time.perf_counter() - started

            started = time.perf_counter()
            for t in order:
                resolve(0, t, 0)
            read_elapsed = time.perf_counter() - started

        # functional echo check, outside the timed loops
        echo_failures = 0
        for t in order:
            chunk = resolve(0, t, 0)
            if chunk is None or chunk.attributes["v"].value != t:
                echo_failures += 1
        report.check(f"value_echo_n{n}", echo_failures == 0,
                     f"{echo_failures} reads returned the wrong value")
        log2n = math.log2(n) if n > 1 else 1.0
        insert_rate = n / insert_elapsed if insert_elapsed > 0 else 0.0
        read_rate = n / read_elapsed if read_elapsed > 0 else 0.0
        report.add("insert_per_s", insert_rate, param1=n)
        report.add("read_per_s", read_rate, param1=n)
        report.add("insert_per_s_per_log2", insert_rate / log2n, param1=n)
        report.add("read_per_s_per_log2", read_rate / log2n, param1=n)
        session.close()
    for metric in ("insert_per_s_per_log2", "read_per_s_per_log2"):
        values = [v for _, _, v in report.metric_series(metric)]
        report.add(metric.replace("_per_s_per_log2", "_log_band"),
                   max(values) / min(values) if min(values) > 0 else float("inf"))
    report.require_ok()
    return report


# --------------------------------------------------------------------------
# Node-scale worlds (nested forks around one node)
# --------------------------------------------------------------------------

def _timed_probes(resolver: Resolver, node: int, t: int, world: int,
                  repetitions: int, batch: int) -> list[float]:
    """Mean seconds per resolve, one sample per repetition."""
    resolve = resolver.resolve
    samples = []
    for _ in range(repetitions):
        started = time.perf_counter()
        for _ in range(batch):
            resolve(node, t, world)
        samples.append((time.perf_counter() - started) / batch)
    return samples


@_gc_paused_bench
def bench_node_worlds(cfg: BenchConfig) -> BenchReport:
    """Forks m nested worlds around one node; probes either side of s.

    The node has a timeline [0, timepoints) in the root world; every
    nested world writes once at s = timepoints, so reads below s from the
    deepest world walk the full chain while reads at/after s stay local.
    """
    report = BenchReport("worlds", cfg.seed)
    m = cfg.worlds
    t_divergence = cfg.timepoints
    t_shared = cfg.timepoints // 2        # below s
    t_local = cfg.timepoints + 5_000      # above s
    session = _fresh_session()
    resolver = session.resolver
    node = 0
    for t in range(cfg.timepoints):
        resolver.insert_chunk(node, t, 0, _value_chunk(t))

    probe_times = sorted(random.Random(cfg.seed).sample(range(cfg.timepoints), min(64, cfg.timepoints)))
    probe_times += [t_shared, t_local]
    pre_fork = [
        _probe_bytes(resolver, node, t, 0)
        for t in probe_times
    ]

    world = 0
    chain = [0]
    for i in range(1, m + 1):
        world = session.diverge(world)
        chain.append(world)
        resolver.insert_chunk(node, t_divergence, world, _value_chunk(t_divergence + i))
    deepest = chain[-1]

    # insert throughput in the root and in the deepest world, fresh times
    insert_batch = 2_000
    rates = {}
    for label, w in (("w0", 0), ("wm", deepest)):
        base_t = t_local + 10_000 if label == "w0" else t_local + 200_000
        started = time.perf_counter()
        for i in range(insert_batch):
            resolver.insert_chunk(node, base_t + i, w, _value_chunk(i))
        elapsed = time.perf_counter() - started
        rates[label] = insert_batch / elapsed if elapsed > 0 else 0.0
        report.add(f"insert_per_s_{label}", rates[label], param1=m)

    post_fork = [_probe_bytes(resolver, node, t, 0) for t in probe_times]
    report.check(
        "root_unaffected", pre_fork == post_fork,
        "root-world probe bytes changed after forking",
    )
    shared = resolver.resolve(node, t_shared, deepest)
    expected = resolver.resolve(node, t_shared, 0)
    report.check(
        "shared_past_value",
        shared is not None and expected is not None
        and serialize_chunk(shared) == serialize_chunk(expected),
        "deep-world read below s does not match the root chunk",
    )

    batch = 200
    reps = cfg.repetitions
    r0 = _timed_probes(resolver, node, t_shared, 0, reps, batch)
    r1 = _timed_probes(resolver, node, t_local, 0, reps, batch)
    r2 = _timed_probes(resolver, node, t_shared, deepest, reps, batch)
    r3 = _timed_probes(resolver, node, t_local, deepest, reps, batch)
    for label, samples in (("R0", r0), ("R1", r1), ("R2", r2), ("R3", r3)):
        report.add(f"read_latency_{label}_us", statistics.mean(samples) * 1e6, param1=m)
    report.require_ok()
    report.add("r3_vs_r2_speedup", statistics.mean(r2) / statistics.mean(r3)
               if statistics.mean(r3) > 0 else 0.0, param1=m)
    session.close()
    return report


def _probe_bytes(resolver: Resolver, node: int, t: int, world: int) -> bytes | None:
    chunk = resolver.resolve(node, t, world)
    return serialize_chunk(chunk) if chunk is not None else None


# --------------------------------------------------------------------------
# Stair-shaped worlds (graph-scale worst case)
# --------------------------------------------------------------------------

def stair_grid(cfg: BenchConfig) -> tuple[list[int], list[float]]:
    m_values = [1] + list(range(cfg.m_step, cfg.worlds + 1, cfg.m_step))
    m_values = sorted(set(m_values))
    x_values = []
    x = 0.0
    while x <= 1.0 + 1e-9:
        x_values.append(round(min(x, 1.0), 6))
        x += cfg.x_step
    return m_values, sorted(set(x_values))


@_gc_paused_bench
def bench_stair(cfg: BenchConfig) -> BenchReport:
    """Stairs of m worlds, a fixed x fraction of nodes mutated per step.

    The whole graph is read from the deepest world at probe times below
    every divergence, so each probe must walk the full chain: the
    expected parent-hop count is exactly m per read, for every x.
    """
    report = BenchReport("stair", cfg.seed)
    m_values, x_values = stair_grid(cfg)
    n, t0 = cfg.nodes, cfg.timepoints
    sample_size = min(10, n)
    for m in m_values:
        for x in x_values:
            rng = random.Random(f"{cfg.seed}:{m}:{x}")
            session = _fresh_session()
            resolver = session.resolver
            oracle = SnapshotOracle()
            sample = set(rng.sample(range(n), sample_size))
            for node in range(n):
                record = node in sample
                for t in range(t0):
                    chunk = _value_chunk(t)
                    resolver.insert_chunk(node, t, 0, chunk)
                    if record:
                        oracle.record_insert(node, t, 0, chunk)
            selected = rng.sample(range(n), round(x * n))
            world = 0
            for step in range(1, m + 1):
                parent = world
                world = session.diverge(parent)
                assert oracle.diverge(parent) == world
                for node in selected:
                    chunk = _value_chunk(t0 + step)
                    resolver.insert_chunk(node, t0 + step, world, chunk)
                    if node in sample:
                        oracle.record_insert(node, t0 + step, world, chunk)
            deepest = world

            probe_times = [rng.randrange(t0) for _ in range(n)]
            resolve = resolver.resolve
            hops_before = resolver.stats.hops
            started = time.perf_counter()
            for node in range(n):
                resolve(node, probe_times[node], deepest)
            elapsed = time.perf_counter() - started
            hops = resolver.stats.hops - hops_before

            mean_hops = hops / n
            report.add("hops_mean", mean_hops, param1=m, param2=x)
            report.add("hops_expected", m, param1=m, param2=x)
            report.add("read_latency_us", elapsed / n * 1e6, param1=m, param2=x)
            report.check(
                f"hops_exact_m{m}_x{x}", mean_hops == m,
                f"mean hops {mean_hops} != expected {m}",
            )
            mismatches = 0
            for node in sample:
                engine = resolve(node, probe_times[node], deepest)
                expected = oracle.probe(node, probe_times[node], deepest)
                same = (engine is None and expected is None) or (
                    engine is not None and expected is not None
                    and serialize_chunk(engine) == serialize_chunk(expected)
                )
                if not same:
                    mismatches += 1
            report.check(
                f"oracle_sample_m{m}_x{x}", mismatches == 0,
                f"{mismatches} sampled probes disagree with the oracle",
            )
            session.close()
    report.require_ok()
    return report


# --------------------------------------------------------------------------
# Deep what-if generations
# --------------------------------------------------------------------------

@_gc_paused_bench
def bench_whatif(cfg: BenchConfig) -> BenchReport:
    """One world per generation, mutating a random x fraction of nodes.

    Reads sample the initial timeline from the newest world every k
    generations; the per-read latency grows with the parent-chain depth,
    and the linear fit (slope, R^2) quantifies it.
    """
    report = BenchReport("whatif", cfg.seed)
    rng = random.Random(cfg.seed)
    n, t0, g = cfg.nodes, cfg.timepoints, cfg.generations
    writes_per_generation = math.ceil(cfg.mutation * n)
    measure_every = max(1, g // 20)
    sample = rng.sample(range(n), min(200, n))
    probe_time = t0 // 2

    session = _fresh_session()
    resolver = session.resolver
    for node in range(n):
        for t in range(t0):
            resolver.insert_chunk(node, t, 0, _value_chunk(t))

    world = 0
    write_count_violations = 0
    points: list[tuple[int, float]] = []
    for generation in range(1, g + 1):
        world = session.diverge(world)
        mutated = rng.sample(range(n), writes_per_generation)
        before = resolver.stats.chunk_inserts
        for node in mutated:
            resolver.insert_chunk(node, t0 + generation, world, _value_chunk(generation))
        if resolver.stats.chunk_inserts - before != writes_per_generation:
            write_count_violations += 1
        if generation % measure_every == 0 or generation == g:
            resolve = resolver.resolve
            started = time.perf_counter()
            for node in sample:
                resolve(node, probe_time, world)
            per_read = (time.perf_counter() - started) / len(sample)
            points.append((generation, per_read * 1e6))
            report.add("read_latency_us", per_read * 1e6, param1=generation)

    report.check(
        "writes_per_generation", write_count_violations == 0,
        f"{write_count_violations} generations wrote != ceil(x*n) = {writes_per_generation} chunks",
    )
    report.add("writes_per_generation", writes_per_generation)
    if len(points) >= 2:
        xs = [float(gen) for gen, _ in points]
        ys = [lat for _, lat in points]
        fit = statistics.linear_regression(xs, ys)
        r = statistics.correlation(xs, ys)
        report.add("latency_slope_us_per_gen", fit.slope)
        report.add("latency_intercept_us", fit.intercept)
        report.add("latency_r_squared", r * r)
    report.require_ok()
    session.close()
    return report


def run_scenario_bench(cfg: BenchConfig, dataset: EdgeListDataset | None = None) -> BenchReport:
    """Dispatch by cfg.scenario; miw/siw require a dataset."""
    if cfg.scenario in ("miw", "siw"):
        if dataset is None:
            raise ValueError(f"{cfg.scenario} needs an edge-list dataset")
        return bench_miw(cfg, dataset) if cfg.scenario == "miw" else bench_siw(cfg, dataset)
    if cfg.scenario == "temporal":
        return bench_temporal(cfg)
    if cfg.scenario == "worlds":
        return bench_node_worlds(cfg)
    if cfg.scenario == "stair":
        return bench_stair(cfg)
    if cfg.scenario == "whatif":
        return bench_whatif(cfg)
    raise ValueError(f"unknown scenario {cfg.scenario!r}")


__all__ = [
    "BenchConfig",
    "EDGE_RELATION",
    "bench_miw",
    "bench_node_worlds",
    "bench_siw",
    "bench_stair",
    "bench_temporal",
    "bench_whatif",
    "desk_config",
    "run_scenario_bench",
    "stair_grid",
    "temporal_scales",
]
