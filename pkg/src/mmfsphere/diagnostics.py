"""Tabular diagnostics: time series and convergence tables.

One container serves both uses.  Column names carry their unit or
normalization in square brackets (e.g. ``time[day]``, ``l2[rel]``) so
every CSV header documents itself.  Values are written with %.17g and
therefore round-trip losslessly; repeated runs of the same
configuration produce byte-identical files.  Wall-clock time and other
non-reproducible facts go into the metadata JSON, never the CSV.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import SchemaMismatch


def _base_name(column: str) -> str:
    return column.split("[", 1)[0]


@dataclass
class DiagnosticsSeries:
    columns: tuple
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def append(self, *values):
        if len(values) != len(self.columns):
            raise ValueError(f"expected {len(self.columns)} values, "
                             f"got {len(values)}")
        self.rows.append(tuple(float(v) for v in values))

    def column(self, name: str) -> np.ndarray:
        """Column by exact name or by base name without the unit suffix."""
        for i, c in enumerate(self.columns):
            if c == name or _base_name(c) == name:
                return np.array([r[i] for r in self.rows])
        raise KeyError(name)

    def validate(self):
        """First column strictly increasing, all entries finite, error
        columns non-negative (the first column may be signed time=0)."""
        data = np.array(self.rows, dtype=float)
        if data.size == 0:
            raise ValueError("empty series")
        if not np.isfinite(data).all():
            raise ValueError("non-finite diagnostics entry")
        x = data[:, 0]
        if len(x) > 1 and not (np.diff(x) > 0).all():
            raise ValueError("leading column must be strictly increasing")
        if (data[:, 1:] < 0).any():
            raise ValueError("negative error entry")

    def write_csv(self, path):
        lines = [",".join(self.columns)]
        for row in self.rows:
            lines.append(",".join("%.17g" % v for v in row))
        Path(path).write_text("\n".join(lines) + "\n")

    def write_metadata(self, path):
        Path(path).write_text(json.dumps(self.metadata, indent=2,
                                         sort_keys=True) + "\n")


def read_series(path) -> DiagnosticsSeries:
    text = Path(path).read_text().strip().splitlines()
    if not text:
        raise SchemaMismatch(f"{path}: empty file")
    columns = tuple(text[0].split(","))
    series = DiagnosticsSeries(columns=columns)
    for line in text[1:]:
        series.append(*(float(v) for v in line.split(",")))
    return series


def read_metadata(path) -> dict:
    return json.loads(Path(path).read_text())


def tail_saturated(x: np.ndarray, y: np.ndarray, count: int = 3,
                   threshold: float = 0.2) -> bool:
    """True when |d log10(y) / dx| over the last ``count`` rows < threshold."""
    if len(x) < count:
        return False
    xs = np.asarray(x[-count:], dtype=float)
    ys = np.log10(np.maximum(np.abs(y[-count:]), 1e-300))
    slope = np.polyfit(xs, ys, 1)[0]
    return bool(abs(slope) < threshold)


def compare_series(a: DiagnosticsSeries, b: DiagnosticsSeries) -> dict:
    """Final-row per-column ratio table plus saturation flags.

    The first column is the abscissa (time or order) and is required to
    match; remaining columns are compared as a/b at the last row.
    """
    if a.columns != b.columns:
        raise SchemaMismatch(f"column mismatch: {a.columns} vs {b.columns}")
    if not a.rows or not b.rows:
        raise SchemaMismatch("cannot compare empty series")
    if a.rows[-1][0] != b.rows[-1][0]:
        raise SchemaMismatch("final abscissa differs: "
                             f"{a.rows[-1][0]} vs {b.rows[-1][0]}")
    report = {"abscissa": a.rows[-1][0], "ratios": {}, "saturated": {}}
    x_a, x_b = a.column(a.columns[0]), b.column(b.columns[0])
    for name in a.columns[1:]:
        va, vb = a.column(name)[-1], b.column(name)[-1]
        if va == vb:
            ratio = 1.0
        elif vb == 0.0:
            ratio = float("inf")
        else:
            ratio = va / vb
        report["ratios"][name] = ratio
        report["saturated"][name] = {
            "a": tail_saturated(x_a, a.column(name)),
            "b": tail_saturated(x_b, b.column(name)),
        }
    return report


def format_compare_report(report: dict) -> str:
    lines = [f"final abscissa: {report['abscissa']:g}",
             f"{'column':24s} {'ratio a/b':>12s} {'sat(a)':>7s} {'sat(b)':>7s}"]
    for name, ratio in report["ratios"].items():
        sat = report["saturated"][name]
        lines.append(f"{name:24s} {ratio:12.4g} {str(sat['a']):>7s} "
                     f"{str(sat['b']):>7s}")
    return "\n".join(lines)
