"""Command-line harness: benchmarks, dataset loading, dump/restore, verify.

Exit code is 0 only when every embedded functional assertion passed.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
import time

from .bench.datasets import load_edge_list, synthetic_edge_list
from .bench.report import BenchReport
from .bench.workloads import BenchConfig, desk_config, run_scenario_bench
from .errors import MwgError
from .graph import GraphSession
from .model import decode_key, encode_key, export_line, parse_export_line
from .oracle import Scenario, corrupted_floor, run_scenario
from .storage import AppendLogBackend, MemoryBackend

_SCENARIOS = ("miw", "siw", "temporal", "worlds", "stair", "whatif")


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    return int(raw) if raw else default


def _open_backend(path: str | None, compact_threshold: int):
    if path:
        return AppendLogBackend(path, compact_threshold=compact_threshold)
    return MemoryBackend()


def _add_db_options(parser: argparse.ArgumentParser, required: bool = False) -> None:
    parser.add_argument(
        "--db", default=os.environ.get("MWG_DB"), required=required,
        help="append-log backend path (default: in-memory, or $MWG_DB)",
    )
    parser.add_argument(
        "--cache-capacity", type=int,
        default=_env_int("MWG_CACHE_CAPACITY", 100_000),
        help="LRU capacity in chunks, 0 disables (default 100000 or $MWG_CACHE_CAPACITY)",
    )
    parser.add_argument(
        "--compact-threshold", type=int,
        default=_env_int("MWG_COMPACT_THRESHOLD", 10_000),
        help="dead records before log compaction (default 10000 or $MWG_COMPACT_THRESHOLD)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mwg", description="Many-world graph storage engine harness"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    bench = sub.add_parser("bench", help="run an experiment family, emit CSV")
    bench.add_argument("scenario", choices=_SCENARIOS)
    bench.add_argument("--seed", type=int, default=42)
    bench.add_argument("--out", help="CSV output path (default: stdout)")
    bench.add_argument("--scale", choices=("desk", "paper"), default="desk")
    bench.add_argument("--nodes", type=int)
    bench.add_argument("--timepoints", type=int)
    bench.add_argument("--worlds", type=int)
    bench.add_argument("--mutation", type=float)
    bench.add_argument("--generations", type=int)
    bench.add_argument("--repetitions", type=int)
    bench.add_argument("--m-step", type=int, dest="m_step")
    bench.add_argument("--x-step", type=float, dest="x_step")
    bench.add_argument("--dataset", help="edge list file for miw/siw (default: synthetic)")
    bench.add_argument("--edges", type=int, help="synthetic edge count for miw/siw")

    load = sub.add_parser("load", help="ingest a SNAP-style edge list")
    load.add_argument("edge_list")
    _add_db_options(load)

    dump = sub.add_parser("dump", help="export a database as Base64 text records")
    dump.add_argument("file", help="output text file, '-' for stdout")
    _add_db_options(dump, required=True)

    restore = sub.add_parser("restore", help="import Base64 text records into a database")
    restore.add_argument("file", help="input text file")
    _add_db_options(restore, required=True)

    verify = sub.add_parser("verify", help="engine vs. brute-force oracle equivalence")
    verify.add_argument("--ops", type=int, default=5_000)
    verify.add_argument("--seed", type=int, default=42)
    verify.add_argument("--probes", type=int, default=10_000)
    verify.add_argument("--nodes", type=int, default=200)
    verify.add_argument("--timepoints", type=int, default=50)
    verify.add_argument("--worlds", type=int, default=20)
    verify.add_argument(
        "--inject-floor-bug", action="store_true",
        help="mutation-testing hook: corrupt floor lookups and expect a counterexample",
    )
    return parser


def _cmd_bench(args) -> int:
    overrides = {
        name: getattr(args, name)
        for name in ("nodes", "timepoints", "worlds", "mutation",
                     "generations", "repetitions", "m_step", "x_step")
        if getattr(args, name) is not None
    }
    cfg = desk_config(args.scenario, scale=args.scale, **overrides)
    cfg = BenchConfig(**{**cfg.__dict__, "seed": args.seed, "out": args.out})

    dataset = None
    if args.scenario in ("miw", "siw"):
        if args.dataset:
            dataset = load_edge_list(args.dataset)
        else:
            edges = args.edges if args.edges is not None else cfg.nodes * 4
            with tempfile.NamedTemporaryFile(
                mode="w", suffix=".edges", delete=False
            ) as tmp:
                path = tmp.name
            synthetic_edge_list(path, cfg.nodes, edges, seed=cfg.seed)
            dataset = load_edge_list(path)
            os.unlink(path)

    started = time.perf_counter()
    report = run_scenario_bench(cfg, dataset)
    elapsed = time.perf_counter() - started
    _emit_report(report, cfg.out)
    for name, ok, detail in report.checks:
        print(f"check {name}: {'ok' if ok else 'FAIL ' + detail}", file=sys.stderr)
    print(f"{cfg.scenario}: done in {elapsed:.1f}s, "
          f"{len(report.rows)} metric rows, all checks passed", file=sys.stderr)
    return 0


def _emit_report(report: BenchReport, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            report.write_csv(fh)
    else:
        report.write_csv(sys.stdout)


def _cmd_load(args) -> int:
    started = time.perf_counter()
    dataset = load_edge_list(args.edge_list)
    backend = _open_backend(args.db, args.compact_threshold)
    session = GraphSession(backend, cache_capacity=args.cache_capacity).connect()
    for _ in range(dataset.node_count):
        session.create_node(0, 0)
    resolver = session.resolver
    for source, targets in dataset.adjacency().items():
        chunk, baseline = resolver.resolve_for_write(source, 0, 0)
        for target in targets:
            chunk.add_rel("linked", target)
        resolver.commit(source, 0, 0, chunk, baseline)
    written = session.save()
    session.close()
    elapsed = time.perf_counter() - started
    print(
        f"loaded {dataset.node_count} nodes, {len(dataset.edges)} edges "
        f"({dataset.malformed} malformed lines skipped) -> {written} chunks "
        f"in {elapsed:.1f}s"
    )
    return 0


def _cmd_dump(args) -> int:
    backend = _open_backend(args.db, args.compact_threshold)
    count = 0
    out = sys.stdout if args.file == "-" else open(args.file, "w", encoding="utf-8")
    try:
        for raw_key, raw_value in sorted(backend.items()):
            out.write(export_line(decode_key(raw_key), raw_value))
            count += 1
    finally:
        if out is not sys.stdout:
            out.close()
        backend.close()
    print(f"dumped {count} records", file=sys.stderr)
    return 0


def _cmd_restore(args) -> int:
    backend = _open_backend(args.db, args.compact_threshold)
    count = 0
    with open(args.file, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            key, payload = parse_export_line(line)
            backend.put(encode_key(key), payload)
            count += 1
    backend.flush()
    backend.close()
    print(f"restored {count} records", file=sys.stderr)
    return 0


def _cmd_verify(args) -> int:
    scenario = Scenario(
        seed=args.seed, nodes=args.nodes, timepoints=args.timepoints,
        worlds=args.worlds, ops=args.ops, probes=args.probes,
    )
    if args.inject_floor_bug:
        with corrupted_floor():
            report = run_scenario(scenario)
        if report.ok:
            print("floor bug injected but every probe still agreed", file=sys.stderr)
            return 1
        print(
            f"injected floor bug caught: {report.mismatches} mismatches, "
            f"first at (node, t, world) = {report.first_counterexample}, "
            f"minimal failing prefix = {report.minimal_prefix} ops"
        )
        return 0
    report = run_scenario(scenario)
    if report.ok:
        print(f"ok: {report.ops} ops, {report.probes} probes, engine == oracle")
        return 0
    print(
        f"MISMATCH: {report.mismatches} of {report.probes} probes disagree; "
        f"first at (node, t, world) = {report.first_counterexample}; "
        f"minimal failing prefix = {report.minimal_prefix} ops",
        file=sys.stderr,
    )
    return 1


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "bench": _cmd_bench,
        "load": _cmd_load,
        "dump": _cmd_dump,
        "restore": _cmd_restore,
        "verify": _cmd_verify,
    }
    try:
        return handlers[args.command](args)
    except MwgError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
