"""
Tabular output. Floats are written with ``repr``, the shortest decimal
string that reads back to the same double, so CSV and JSON files reproduce
the computed values exactly.
"""

import csv
import dataclasses
import json
import math
import typing

from .phase_shift import PhaseRecord

PHASE_COLUMNS = [
    "t",
    "re_trace",
    "im_trace",
    "phase_principal",
    "phase_unwrapped",
    "nu_mod4",
    "det_s_minus_i",
    "degenerate",
]

Cell = typing.Union[None, bool, int, float, str]


@dataclasses.dataclass
class Table:
    columns: typing.List[str]
    rows: typing.List[typing.Dict[str, Cell]] = dataclasses.field(default_factory=list)

    def add_column(self, name: str, values: typing.Sequence[Cell]):
        if len(values) != len(self.rows):
            raise ValueError(f"column {name} has {len(values)} values for {len(self.rows)} rows")
        self.columns.append(name)
        for row, value in zip(self.rows, values):
            row[name] = value

    def write_csv(self, fp: typing.TextIO):
        writer = csv.writer(fp, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([format_cell(row.get(c)) for c in self.columns])

    def write_json(self, fp: typing.TextIO):
        rows = [{c: json_cell(row.get(c)) for c in self.columns} for row in self.rows]
        json.dump({"columns": self.columns, "rows": rows}, fp, indent=2)
        fp.write("\n")

    def write(self, fp: typing.TextIO, fmt: str):
        if fmt == "json":
            self.write_json(fp)
        else:
            self.write_csv(fp)


def format_cell(value: Cell) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def json_cell(value: Cell) -> Cell:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def _real(value) -> typing.Optional[float]:
    return None if value is None else float(value)


def phase_table(records: typing.Sequence[PhaseRecord]) -> Table:
    table = Table(list(PHASE_COLUMNS))
    for rec in records:
        trace = rec.trace
        table.rows.append(
            {
                "t": rec.t,
                "re_trace": None if trace is None else float(trace.real),
                "im_trace": None if trace is None else float(trace.imag),
                "phase_principal": _real(rec.phase_principal),
                "phase_unwrapped": _real(rec.phase_unwrapped),
                "nu_mod4": rec.nu_mod4,
                "det_s_minus_i": rec.det_s_minus_i,
                "degenerate": rec.degenerate,
            }
        )
    return table
