"""CLI surface: subcommands, exit codes, file formats."""

import csv

import pytest

from mwg.bench.datasets import synthetic_edge_list
from mwg.cli import main
from mwg.graph import GraphSession
from mwg.storage import AppendLogBackend


@pytest.fixture
def edges_file(tmp_path):
    path = str(tmp_path / "toy.edges")
    synthetic_edge_list(path, nodes=40, edges=120, seed=2)
    return path


class TestBenchCommand:
    def test_worlds_bench_csv(self, tmp_path, capsys):
        out = str(tmp_path / "worlds.csv")
        code = main([
            "bench", "worlds", "--worlds", "10", "--timepoints", "200",
            "--repetitions", "3", "--out", out, "--seed", "7",
        ])
        assert code == 0
        rows = list(csv.reader(open(out)))
        assert rows[0] == ["scenario", "seed", "param1", "param2", "metric", "value"]
        assert all(row[0] == "worlds" and row[1] == "7" for row in rows[1:])

    def test_miw_with_dataset(self, edges_file, tmp_path):
        out = str(tmp_path / "miw.csv")
        assert main(["bench", "miw", "--dataset", edges_file, "--out", out]) == 0
        metrics = {row[4] for row in list(csv.reader(open(out)))[1:]}
        assert "values_per_s" in metrics

    def test_siw_synthetic_default(self, tmp_path):
        out = str(tmp_path / "siw.csv")
        assert main(["bench", "siw", "--nodes", "30", "--edges", "60", "--out", out]) == 0

    def test_stair_small(self, tmp_path):
        out = str(tmp_path / "stair.csv")
        code = main([
            "bench", "stair", "--nodes", "10", "--timepoints", "10",
            "--worlds", "10", "--m-step", "10", "--x-step", "1.0", "--out", out,
        ])
        assert code == 0

    def test_whatif_small(self, tmp_path):
        out = str(tmp_path / "whatif.csv")
        code = main([
            "bench", "whatif", "--nodes", "20", "--timepoints", "10",
            "--generations", "50", "--out", out,
        ])
        assert code == 0

    def test_temporal_small(self, tmp_path):
        out = str(tmp_path / "t.csv")
        assert main(["bench", "temporal", "--timepoints", "5000", "--out", out]) == 0


class TestLoadDumpRestore:
    def test_load_reports_counts(self, edges_file, capsys):
        assert main(["load", edges_file]) == 0
        out = capsys.readouterr().out
        assert "40 nodes" in out and "120 edges" in out

    def test_load_into_db_then_dump_restore_round_trip(self, edges_file, tmp_path, capsys):
        db = str(tmp_path / "graph.db")
        assert main(["load", edges_file, "--db", db]) == 0

        dump_file = str(tmp_path / "dump.txt")
        assert main(["dump", dump_file, "--db", db]) == 0
        lines = open(dump_file).read().splitlines()
        assert lines and all(":" in line for line in lines)

        db2 = str(tmp_path / "restored.db")
        assert main(["restore", dump_file, "--db", db2]) == 0

        g1 = GraphSession(AppendLogBackend(db)).connect()
        g2 = GraphSession(AppendLogBackend(db2)).connect()
        for node in range(40):
            assert (
                g1.node(node).relation_targets("linked")
                == g2.node(node).relation_targets("linked")
            )
        g1.close()
        g2.close()

    def test_load_missing_file(self, capsys):
        assert main(["load", "/nonexistent.edges"]) == 1

    def test_restore_malformed_file(self, tmp_path, capsys):
        bad = tmp_path / "bad.txt"
        bad.write_text("this is not a record\n")
        db = str(tmp_path / "x.db")
        assert main(["restore", str(bad), "--db", db]) == 1


class TestVerifyCommand:
    def test_verify_passes(self, capsys):
        code = main([
            "verify", "--ops", "400", "--probes", "600", "--nodes", "25",
            "--timepoints", "20", "--worlds", "5", "--seed", "13",
        ])
        assert code == 0
        assert "engine == oracle" in capsys.readouterr().out

    def test_verify_catches_injected_bug(self, capsys):
        code = main([
            "verify", "--ops", "300", "--probes", "600", "--nodes", "20",
            "--timepoints", "25", "--worlds", "4", "--inject-floor-bug",
        ])
        assert code == 0
        out = capsys.readouterr().out
        assert "caught" in out and "minimal failing prefix" in out
