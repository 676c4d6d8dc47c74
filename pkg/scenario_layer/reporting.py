"""
Run reports and plot-data emission.

A RunReport collects pass/fail checks, plain tables and field snapshots
while a scenario runs; emit_plotdata writes them as headed CSV files:

  summary.csv       check,value,tolerance,status (first row names the scenario)
  parameters.csv    section,key,value
  <table>.csv       one file per scenario table (conserved.csv, sigma.csv, ...)
  field_<step>.csv  (P, S) snapshots indexed by zero-padded step number

Floats are written with %.17g and rows keep insertion order, so the same
run always produces the same bytes.
"""

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

from probability_geometry.field_io import NUMBER_FORMAT, write_state

from .errors import OutputError

logger = logging.getLogger("scenario_layer.reporting")

CONSERVED_HEADER = ("t", "norm", "H", "Ax", "Ay", "Az", "sigma")
SNAPSHOT_DIGITS = 6

COMPARISONS = {
    "<=": lambda value, tolerance: value <= tolerance,
    ">=": lambda value, tolerance: value >= tolerance,
}


def format_cell(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return NUMBER_FORMAT % value
    if value is None:
        return ""
    return str(value)


@dataclass(frozen=True)
class CheckRecord:
    """One summary line: a measured value against its tolerance."""

    check: str
    value: float
    tolerance: float
    comparison: str = "<="

    @property
    def passed(self):
        if not math.isfinite(self.value):
            return False
        return COMPARISONS[self.comparison](self.value, self.tolerance)

    @property
    def status(self):
        return "PASS" if self.passed else "FAIL"

    def row(self):
        return [self.check, format_cell(float(self.value)), format_cell(float(self.tolerance)), self.status]


@dataclass
class RunReport:
    name: str
    parameters: tuple = ()
    checks: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)
    snapshots: list = field(default_factory=list)

    def add_check(self, check, value, tolerance, comparison="<="):
        if comparison not in COMPARISONS:
            raise ValueError(f"Unknown comparison '{comparison}'")
        record = CheckRecord(check, float(value), float(tolerance), comparison)
        self.checks.append(record)
        log = logger.info if record.passed else logger.error
        log(f"{record.status} {check}: {record.value:.3e} {comparison} {record.tolerance:.1e}")
        return record

    def add_table(self, filename, header, rows):
        self.tables[filename] = (tuple(header), [list(row) for row in rows])

    def add_conserved(self, filename, conserved):
        self.add_table(filename, CONSERVED_HEADER, [c.row() for c in conserved])

    def add_snapshot(self, step, state):
        self.snapshots.append((int(step), state))

    @property
    def passed(self):
        return all(record.passed for record in self.checks)

    @property
    def status(self):
        return "PASS" if self.passed else "FAIL"

    def failures(self):
        return [record for record in self.checks if not record.passed]


def _write_rows(path, header, rows):
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_cell(cell) for cell in row])


def snapshot_name(step):
    return f"field_{step:0{SNAPSHOT_DIGITS}d}.csv"


def emit_plotdata(report, output_dir):
    """Write every artifact of a report into output_dir.

    Returns:
        list of written Paths, in write order.

    Raises:
        OutputError: with the failing path, for any I/O failure.
    """
    output_dir = Path(output_dir)
    written = []

    def guarded(path, write):
        try:
            write(path)
        except OSError as exc:
            raise OutputError(f"Cannot write output ({exc.strerror or exc})", path) from exc
        written.append(path)

    try:
        output_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"Cannot create output directory ({exc.strerror or exc})", output_dir) from exc

    summary_rows = [["scenario", report.name, "", report.status]] + [record.row() for record in report.checks]
    guarded(output_dir / "summary.csv", lambda p: _write_rows(p, ("check", "value", "tolerance", "status"), summary_rows))
    guarded(output_dir / "parameters.csv", lambda p: _write_rows(p, ("section", "key", "value"), report.parameters))

    for filename, (header, rows) in report.tables.items():
        guarded(output_dir / filename, lambda p, h=header, r=rows: _write_rows(p, h, r))
    for step, state in report.snapshots:
        guarded(output_dir / snapshot_name(step), lambda p, s=state: write_state(p, s))

    logger.info(f"Wrote {len(written)} files to {output_dir}")
    return written
