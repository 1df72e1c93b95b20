"""CSV series files, provenance sidecars and tabular outputs.

A series file has a header with ``timestamp`` and ``value`` columns.
Timestamps are integers or ISO-8601 strings and must increase strictly. An
empty value cell (or the configured sentinel) is a missing point. Values are
written with ``repr(float)``, the shortest string that round-trips.
"""

from __future__ import annotations

import csv
import math
from datetime import datetime
from typing import Iterable, Optional, Sequence

import numpy as np

from .metrics import METRIC_NAMES, MetricReport
from .series import MISSING, TimeSeries, status_label
from .simulate import HeldOut


class SeriesFileError(ValueError):
    def __init__(self, message, line: Optional[int] = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _parse_time(cell: str):
    try:
        return int(cell)
    except ValueError:
        pass
    try:
        return datetime.fromisoformat(cell)
    except ValueError:
        return None


def format_value(v: float) -> str:
    return "" if v is None or math.isnan(v) else repr(float(v))


def read_series(path, na_value: Optional[str] = None, value_column: str = "value",
                time_column: str = "timestamp") -> TimeSeries:
    """Load a series file; ``na_value`` (e.g. ``-200``) also marks missing points."""
    na = float(na_value) if na_value not in (None, "") else None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SeriesFileError("file is empty", 1) from None
        header = [h.strip() for h in header]
        for col in (time_column, value_column):
            if col not in header:
                raise SeriesFileError(f"missing column {col!r} (header: {','.join(header)})", 1)
        ti, vi = header.index(time_column), header.index(value_column)
        stamps, values = [], []
        prev = None
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise SeriesFileError(f"expected {len(header)} fields, got {len(row)}", lineno)
            ts, cell = row[ti].strip(), row[vi].strip()
            key = _parse_time(ts)
            if key is None:
                raise SeriesFileError(f"unparseable timestamp {ts!r}", lineno)
            if prev is not None:
                try:
                    increasing = key > prev
                except TypeError:
                    raise SeriesFileError("mixed integer and ISO timestamps", lineno) from None
                if not increasing:
                    raise SeriesFileError(f"timestamp {ts!r} does not increase", lineno)
            prev = key
            if cell == "":
                v = math.nan
            else:
                try:
                    v = float(cell)
                except ValueError:
                    raise SeriesFileError(f"unparseable value {cell!r}", lineno) from None
                if not math.isfinite(v):
                    raise SeriesFileError(f"non-finite value {cell!r}", lineno)
                if na is not None and v == na:
                    v = math.nan
            stamps.append(ts)
            values.append(v)
    if not values:
        raise SeriesFileError("no data rows")
    return TimeSeries(np.array(values), time_index=stamps)


def _stamps(series: TimeSeries) -> Sequence:
    return series.time_index if series.time_index is not None else range(len(series))


def write_series(series: TimeSeries, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["timestamp", "value"])
        for ts, v, s in zip(_stamps(series), series.values, series.status):
            w.writerow([ts, "" if s == MISSING else format_value(v)])


def write_provenance(series: TimeSeries, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "timestamp", "status", "stage"])
        for i, (ts, s) in enumerate(zip(_stamps(series), series.status)):
            label = status_label(int(s)).split("(")[0]
            w.writerow([i, ts, label, int(s) if s > 0 else ""])


def write_heldout(series: TimeSeries, truth: HeldOut, path):
    stamps = list(_stamps(series))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["timestamp", "value"])
        for p, v in zip(truth.positions, truth.values):
            w.writerow([stamps[int(p)], format_value(v)])


def read_heldout(path, series: TimeSeries) -> HeldOut:
    """Held-out truth aligned to ``series`` by timestamp."""
    truth = read_series(path)
    lookup = {str(ts): i for i, ts in enumerate(_stamps(series))}
    pos = []
    for ts in truth.time_index:
        if ts not in lookup:
            raise SeriesFileError(f"timestamp {ts!r} not present in the series")
        pos.append(lookup[ts])
    return HeldOut(np.array(pos, dtype=np.int64), truth.values.copy())


def write_rows(rows: Iterable[dict], path, columns: Optional[Sequence[str]] = None):
    rows = list(rows)
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_cell(r.get(c)) for c in columns])


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return format_value(float(v))
    return str(v)


def metric_row(report: MetricReport) -> dict:
    return report.as_dict()


def write_metric_report(report: MetricReport, path):
    write_rows([metric_row(report)], path, METRIC_NAMES)
