"""CSV reporting with embedded functional verification.

Schema: scenario,seed,param1,param2,metric,value — one metric per row.
A report refuses to emit timings while any embedded check failed:
numbers from a broken engine are meaningless.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import IO

from ..errors import BenchmarkInvalidError

CSV_HEADER = ("scenario", "seed", "param1", "param2", "metric", "value")


@dataclass
class BenchReport:
    scenario: str
    seed: int
    rows: list[tuple[str, str, str, str]] = field(default_factory=list)
    checks: list[tuple[str, bool, str]] = field(default_factory=list)

    def add(self, metric: str, value, param1="", param2="") -> None:
        self.rows.append((str(param1), str(param2), metric, _fmt(value)))

    def check(self, name: str, ok: bool, detail: str = "") -> bool:
        self.checks.append((name, bool(ok), detail))
        return bool(ok)

    @property
    def ok(self) -> bool:
        return all(ok for _, ok, _ in self.checks)

    def failures(self) -> list[str]:
        return [f"{name}: {detail}" if detail else name
                for name, ok, detail in self.checks if not ok]

    def require_ok(self) -> BenchReport:
        if not self.ok:
            raise BenchmarkInvalidError(
                f"{self.scenario}: functional verification failed: "
                + "; ".join(self.failures())
            )
        return self

    def metric(self, name: str, param1=None, param2=None) -> float:
        """Look a metric back up (test convenience)."""
        for p1, p2, metric, value in self.rows:
            if metric != name:
                continue
            if param1 is not None and p1 != str(param1):
                continue
            if param2 is not None and p2 != str(param2):
                continue
            return float(value)
        raise KeyError(f"no metric {name!r} (param1={param1}, param2={param2})")

    def metric_series(self, name: str) -> list[tuple[str, str, float]]:
        return [(p1, p2, float(value)) for p1, p2, metric, value in self.rows
                if metric == name]

    def write_csv(self, fh: IO[str]) -> None:
        self.require_ok()
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for p1, p2, metric, value in self.rows:
            writer.writerow((self.scenario, self.seed, p1, p2, metric, value))


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)
