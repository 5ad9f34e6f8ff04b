"""Report writers: assertion CSV, flat key-value summaries and plot data."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path


def fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return repr(v)
    if v is None:
        return ""
    return str(v)


@dataclass
class Report:
    """Assertion rows ``(name, value, bound, pass)`` and summary key-values."""

    command: str
    rows: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)  # name -> (header, rows)
    plots: dict = field(default_factory=dict)  # name -> (caption, xs, ys)
    expect: dict = field(default_factory=dict)  # name -> expected pass flag (default true)

    def check(self, name: str, value, bound, passed: bool) -> bool:
        self.rows.append((name, value, bound, bool(passed)))
        return bool(passed)

    def info(self, key: str, value) -> None:
        self.summary[key] = value

    @property
    def failures(self) -> list:
        return [r[0] for r in self.rows if r[3] != bool(self.expect.get(r[0], True))]

    @property
    def passed(self) -> bool:
        return not self.failures

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "value", "bound", "pass"])
        for name, value, bound, ok in self.rows:
            w.writerow([name, fmt(value), fmt(bound), fmt(ok)])
        return buf.getvalue()

    def summary_text(self) -> str:
        lines = [f"command = {self.command}", f"status = {'pass' if self.passed else 'fail'}"]
        for k, v in self.summary.items():
            lines.append(f"{k} = {fmt(v)}")
        if self.failures:
            lines.append("failed = " + ",".join(self.failures))
        return "\n".join(lines) + "\n"

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.csv").write_text(self.csv_text())
        (out / "summary.txt").write_text(self.summary_text())
        for name, (header, rows) in self.tables.items():
            buf = io.StringIO()
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([fmt(v) for v in row])
            (out / f"{name}.csv").write_text(buf.getvalue())
        for name, (caption, xs, ys) in self.plots.items():
            lines = [f"# {caption}"] + [f"{fmt(float(x))} {fmt(float(y))}" for x, y in zip(xs, ys)]
            (out / f"{name}.dat").write_text("\n".join(lines) + "\n")

    def human(self) -> str:
        lines = [f"{self.command}: {'PASS' if self.passed else 'FAIL'}"]
        for name, value, bound, ok in self.rows:
            lines.append(f"  [{'pass' if ok else 'FAIL'}] {name} = {fmt(value)} (bound {fmt(bound)})")
        return "\n".join(lines)
