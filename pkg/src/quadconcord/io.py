"""Dataset ingestion and emission.

Two CSV layouts are supported:

* long -- header ``subject,time,method,value``, one measurement per row;
* wide -- header ``subject,<method>_<t>,...``, one subject per row.

A dataset is a complete grid: every subject carries every method over the
same gap-free time range 1..T+1.  Records are stored canonically sorted, so
two datasets with the same measurements compare equal regardless of row
order in the source files.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import (
    ConfigError,
    DataError,
    DuplicateRecordError,
    IncompleteSeriesError,
    ParseError,
)
from .series import MeasurementSeries

LONG_HEADER = ("subject", "time", "method", "value")


@dataclass(frozen=True, order=True)
class Record:
    subject: str
    method: str
    time: int
    value: float


class Dataset:
    """Validated measurement records with per-pair series access."""

    def __init__(self, records):
        recs = sorted(
            Record(subject=str(r.subject), method=str(r.method), time=int(r.time),
                   value=float(r.value))
            if isinstance(r, Record) else Record(str(r[0]), str(r[2]), int(r[1]), float(r[3]))
            for r in records
        )
        if not recs:
            raise DataError("dataset contains no records")
        seen = set()
        for r in recs:
            key = (r.subject, r.method, r.time)
            if key in seen:
                raise DuplicateRecordError(
                    f"duplicate record for subject {r.subject!r}, "
                    f"method {r.method!r}, time {r.time}"
                )
            seen.add(key)
            if not np.isfinite(r.value):
                raise DataError(
                    f"non-finite value for subject {r.subject!r}, "
                    f"method {r.method!r}, time {r.time}"
                )
        self._records = tuple(recs)
        self._by_series: dict[tuple[str, str], dict[int, float]] = {}
        for r in recs:
            self._by_series.setdefault((r.subject, r.method), {})[r.time] = r.value
        self.subjects = tuple(sorted({r.subject for r in recs}))
        self.methods = tuple(sorted({r.method for r in recs}))
        n_times = max(r.time for r in recs)
        bad = []
        for subject in self.subjects:
            for method in self.methods:
                times = self._by_series.get((subject, method))
                if times is None or sorted(times) != list(range(1, n_times + 1)):
                    bad.append((subject, method))
        if bad:
            subjects = sorted({s for s, _ in bad})
            raise IncompleteSeriesError(
                f"incomplete series (need times 1..{n_times} for every method) "
                f"for subjects: {subjects}",
                subjects=subjects,
            )
        self.n_times = n_times
        if n_times < 2:
            raise DataError("need at least two time points per series")

    @property
    def records(self) -> tuple[Record, ...]:
        return self._records

    @property
    def t_diffs(self) -> int:
        return self.n_times - 1

    @property
    def n_subjects(self) -> int:
        return len(self.subjects)

    def __eq__(self, other):
        return isinstance(other, Dataset) and self._records == other._records

    def __hash__(self):
        return hash(self._records)

    def series(self, subject: str, method: str) -> np.ndarray:
        times = self._by_series[(subject, method)]
        return np.array([times[t] for t in range(1, self.n_times + 1)])

    def measurement_pairs(self, gold: str, experimental: str) -> list[MeasurementSeries]:
        for method in (gold, experimental):
            if method not in self.methods:
                raise ConfigError(
                    f"method {method!r} not in dataset (has {list(self.methods)})"
                )
        if gold == experimental:
            raise ConfigError("pair must name two distinct methods")
        return [
            MeasurementSeries(
                subject_id=subject,
                x_raw=self.series(subject, gold),
                y_raw=self.series(subject, experimental),
            )
            for subject in self.subjects
        ]

    def subset(self, subjects) -> "Dataset":
        wanted = set(subjects)
        missing = wanted - set(self.subjects)
        if missing:
            raise ConfigError(f"unknown subjects requested: {sorted(missing)}")
        return Dataset([r for r in self._records if r.subject in wanted])


def _read_rows(path):
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            return list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path} is not valid UTF-8: {exc}") from exc


def _parse_long(rows) -> list[Record]:
    if not rows:
        raise ParseError("empty file", line=1)
    header = tuple(h.strip().lower() for h in rows[0])
    if header != LONG_HEADER:
        raise ParseError(
            f"expected header {','.join(LONG_HEADER)!r}, got {','.join(rows[0])!r}",
            line=1,
        )
    records = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 4:
            raise ParseError(f"expected 4 fields, got {len(row)}", line=lineno)
        subject, time_s, method, value_s = (f.strip() for f in row)
        try:
            time = int(time_s)
        except ValueError:
            raise ParseError(f"time {time_s!r} is not an integer", line=lineno) from None
        try:
            value = float(value_s)
        except ValueError:
            raise ParseError(f"value {value_s!r} is not a number", line=lineno) from None
        if time < 1:
            raise ParseError(f"time index must be >= 1, got {time}", line=lineno)
        records.append(Record(subject=subject, method=method, time=time, value=value))
    return records


def _parse_wide(rows) -> list[Record]:
    if not rows:
        raise ParseError("empty file", line=1)
    header = [h.strip() for h in rows[0]]
    if not header or header[0].lower() != "subject":
        raise ParseError("first column must be 'subject'", line=1)
    columns = []
    for col in header[1:]:
        name, sep, t_s = col.rpartition("_")
        if not sep or not name:
            raise ParseError(f"column {col!r} is not of the form <method>_<t>", line=1)
        try:
            t = int(t_s)
        except ValueError:
            raise ParseError(f"column {col!r} has non-integer time {t_s!r}", line=1) from None
        columns.append((name, t))
    records = []
    seen_subjects = set()
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != len(header):
            raise ParseError(
                f"expected {len(header)} fields, got {len(row)}", line=lineno
            )
        subject = row[0].strip()
        if subject in seen_subjects:
            raise DuplicateRecordError(f"line {lineno}: duplicate subject {subject!r}")
        seen_subjects.add(subject)
        for (method, t), value_s in zip(columns, row[1:]):
            try:
                value = float(value_s)
            except ValueError:
                raise ParseError(
                    f"value {value_s.strip()!r} is not a number", line=lineno
                ) from None
            records.append(Record(subject=subject, method=method, time=t, value=value))
    return records


def ingest(path, format: str = "long") -> Dataset:
    """Read and validate a dataset file; errors carry line numbers."""
    if format not in ("long", "wide"):
        raise ConfigError(f"format must be 'long' or 'wide', got {format!r}")
    rows = _read_rows(path)
    records = _parse_long(rows) if format == "long" else _parse_wide(rows)
    return Dataset(records)


def write_dataset(dataset: Dataset, path, format: str = "long") -> None:
    """Emit a dataset; ingest(write(ds)) round-trips for both formats."""
    if format not in ("long", "wide"):
        raise ConfigError(f"format must be 'long' or 'wide', got {format!r}")
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if format == "long":
            writer.writerow(LONG_HEADER)
            for r in dataset.records:
                writer.writerow([r.subject, r.time, r.method, repr(r.value)])
        else:
            header = ["subject"] + [
                f"{method}_{t}"
                for method in dataset.methods
                for t in range(1, dataset.n_times + 1)
            ]
            writer.writerow(header)
            for subject in dataset.subjects:
                row = [subject]
                for method in dataset.methods:
                    row.extend(repr(v) for v in dataset.series(subject, method))
                writer.writerow(row)
