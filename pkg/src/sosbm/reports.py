"""Verification report rows and their CSV serialization."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

REPORT_COLUMNS = ("quantity", "t", "x", "y", "lhs", "rhs", "ratio", "pass")


def format_float(value: float | None) -> str:
    """Round-trip float text; None renders as an empty cell."""
    if value is None:
        return ""
    value = float(value)
    if math.isnan(value):
        return "nan"
    return repr(value)


@dataclass(frozen=True)
class ReportRow:
    quantity: str
    t: float | None
    x: float | None
    y: float | None
    lhs: float
    rhs: float
    ratio: float | None
    passed: bool

    def cells(self) -> list[str]:
        return [self.quantity, format_float(self.t), format_float(self.x), format_float(self.y),
                format_float(self.lhs), format_float(self.rhs), format_float(self.ratio),
                "true" if self.passed else "false"]


@dataclass
class VerificationReport:
    """Rows of a numerical audit plus named summary values."""

    name: str
    rows: list[ReportRow] = field(default_factory=list)
    summary: dict[str, float] = field(default_factory=dict)
    checks: dict[str, bool] = field(default_factory=dict)

    def add(self, quantity: str, t, x, y, lhs: float, rhs: float, ratio: float | None, passed: bool) -> None:
        self.rows.append(ReportRow(quantity, t, x, y, float(lhs), float(rhs),
                                   None if ratio is None else float(ratio), bool(passed)))

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows) and all(self.checks.values())

    def extend(self, other: "VerificationReport") -> None:
        self.rows.extend(other.rows)
        prefix = other.name + "."
        self.summary.update({prefix + k: v for k, v in other.summary.items()})
        self.checks.update({prefix + k: v for k, v in other.checks.items()})

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(REPORT_COLUMNS)
        for row in self.rows:
            writer.writerow(row.cells())
        for key, ok in self.checks.items():
            value = self.summary.get(key)
            writer.writerow([key, "", "", "", format_float(value), "", "", "true" if ok else "false"])
        return buf.getvalue()

    def write(self, path: str | Path) -> None:
        Path(path).write_text(self.to_csv())


def write_table(path: str | Path, header: Iterable[str], rows: Iterable[Iterable]) -> None:
    """Write a plain CSV table; floats are written with full precision."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([format_float(v) if isinstance(v, float) else ("" if v is None else v) for v in row])
