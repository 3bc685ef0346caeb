"""Binary multi-cell store and CSV ingestion for daily series.

The store format is deliberately minimal so that a directory of huge-ensemble
output can be carried around as a single seekable file:

    magic  "EVA1"                       4 bytes
    format version                      u16 LE
    cell count                          u32 LE
    then, per cell:
        id length                       u16 LE
        id                              UTF-8 bytes
        n_days                          u32 LE
        start year                      i32 LE
        leap flag                       u8  (1 = real calendar with Feb 29)
        variable length + variable      u16 LE + UTF-8
        units length + units            u16 LE + UTF-8
        values                          n_days * f64 LE

Cells can be read one at a time (`iter_store`) without holding the whole file
in memory; `index_store` returns per-cell byte offsets for random access.
"""

from __future__ import annotations

import csv
import datetime
import struct
from typing import Iterator, Sequence

import numpy as np

from .series import DailySeries, is_leap_year

MAGIC = b"EVA1"
FORMAT_VERSION = 1

_HEAD = struct.Struct("<4sHI")      # magic, version, cell count
_CELL_FIXED = struct.Struct("<IiB")  # n_days, start_year, leap flag
_U16 = struct.Struct("<H")


class StoreError(Exception):
    """Malformed or truncated store file; carries the byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class CsvError(Exception):
    """Malformed CSV input."""


# ----------------------------------------------------------------- writing

def write_store(path: str, cells: Sequence[DailySeries]) -> None:
    """Write a collection of daily series as one binary store."""
    with open(path, "wb") as f:
        f.write(_HEAD.pack(MAGIC, FORMAT_VERSION, len(cells)))
        for s in cells:
            for text in (s.cell_id, s.variable, s.units):
                raw = text.encode("utf-8")
                if len(raw) > 0xFFFF:
                    raise ValueError(f"string field too long ({len(raw)} bytes)")
            ident = s.cell_id.encode("utf-8")
            f.write(_U16.pack(len(ident)))
            f.write(ident)
            f.write(_CELL_FIXED.pack(s.values.size, s.start_year,
                                     1 if s.with_leap_days else 0))
            for text in (s.variable, s.units):
                raw = text.encode("utf-8")
                f.write(_U16.pack(len(raw)))
                f.write(raw)
            f.write(np.ascontiguousarray(s.values, dtype="<f8").tobytes())


# ----------------------------------------------------------------- reading

def _read_exact(f, n: int, what: str) -> bytes:
    offset = f.tell()
    buf = f.read(n)
    if len(buf) != n:
        raise StoreError(f"truncated store: expected {n} bytes for {what}", offset)
    return buf


def _read_header(f) -> int:
    offset = f.tell()
    magic, version, n_cells = _HEAD.unpack(_read_exact(f, _HEAD.size, "header"))
    if magic != MAGIC:
        raise StoreError(f"bad magic {magic!r}, expected {MAGIC!r}", offset)
    if version != FORMAT_VERSION:
        raise StoreError(f"unsupported format version {version}", offset + 4)
    return n_cells

def _read_cell_meta(f):
    """Read one cell header, returning everything but the values."""
    header_offset = f.tell()
    (id_len,) = _U16.unpack(_read_exact(f, 2, "cell id length"))
    try:
        cell_id = _read_exact(f, id_len, "cell id").decode("utf-8")
    except UnicodeDecodeError:
        raise StoreError("cell id is not valid UTF-8", header_offset + 2)
    n_days, start_year, leap = _CELL_FIXED.unpack(
        _read_exact(f, _CELL_FIXED.size, f"cell {cell_id!r} metadata"))
    if leap not in (0, 1):
        raise StoreError(f"cell {cell_id!r}: leap flag must be 0 or 1, got {leap}",
                         header_offset)
    texts = []
    for what in ("variable", "units"):
        (n,) = _U16.unpack(_read_exact(f, 2, f"cell {cell_id!r} {what} length"))
        try:
            texts.append(_read_exact(f, n, f"cell {cell_id!r} {what}").decode("utf-8"))
        except UnicodeDecodeError:
            raise StoreError(f"cell {cell_id!r}: {what} is not valid UTF-8",
                             header_offset)
    return header_offset, cell_id, n_days, start_year, bool(leap), texts[0], texts[1]


def _read_cell(f) -> DailySeries:
    header_offset, cell_id, n_days, start_year, leap, variable, units = \
        _read_cell_meta(f)
    raw = _read_exact(f, 8 * n_days, f"cell {cell_id!r} values")
    values = np.frombuffer(raw, dtype="<f8").astype(float)
    try:
        return DailySeries.from_values(cell_id, values, start_year,
                                       with_leap_days=leap,
                                       variable=variable, units=units)
    except ValueError as e:
        raise StoreError(f"cell {cell_id!r}: {e}", header_offset)


def iter_store(path: str) -> Iterator[DailySeries]:
    """Yield cells one at a time without loading the whole store."""
    with open(path, "rb") as f:
        n_cells = _read_header(f)
        for _ in range(n_cells):
            yield _read_cell(f)
        offset = f.tell()
        if f.read(1):
            raise StoreError("trailing bytes after last cell", offset)


def read_store(path: str) -> list[DailySeries]:
    return list(iter_store(path))


def index_store(path: str) -> list[tuple[str, int]]:
    """Return (cell_id, byte offset) for every cell, skipping value blocks."""
    out = []
    with open(path, "rb") as f:
        n_cells = _read_header(f)
        for _ in range(n_cells):
            header_offset, cell_id, n_days, *_rest = _read_cell_meta(f)
            out.append((cell_id, header_offset))
            f.seek(8 * n_days, 1)
        end = f.tell()
        f.seek(0, 2)
        if f.tell() < end:
            raise StoreError("truncated store: value block extends past end of file",
                             end)
    return out


def read_cell_at(path: str, offset: int) -> DailySeries:
    """Read a single cell whose header starts at `offset` (from index_store)."""
    with open(path, "rb") as f:
        f.seek(offset)
        return _read_cell(f)


# ----------------------------------------------------------------- CSV input

_CSV_COLUMNS = ("date", "cell_id", "value")


def _expected_dates(first: datetime.date, last: datetime.date, with_leap: bool):
    """All calendar dates in [first, last], optionally skipping Feb 29."""
    out = []
    d = first
    one = datetime.timedelta(days=1)
    while d <= last:
        if with_leap or not (d.month == 2 and d.day == 29):
            out.append(d)
        d += one
    return out


def read_csv(path: str, variable: str = "value",
             units: str = "") -> list[DailySeries]:
    """Read daily series from CSV with columns date, cell_id, value.

    Rows may be in any order; each cell must cover whole calendar years with
    no gaps.  A record that spans a leap year but has no Feb 29 rows is taken
    to be on a 365-day model calendar.  Cells come back sorted by id.  The
    CSV carries no variable metadata, so `variable`/`units` label the result.
    """
    per_cell: dict[str, dict[datetime.date, float]] = {}
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None:
            raise CsvError(f"{path}: empty file")
        missing = [c for c in _CSV_COLUMNS if c not in reader.fieldnames]
        if missing:
            raise CsvError(f"{path}: missing column(s) {', '.join(missing)}")
        for i, row in enumerate(reader, start=2):
            try:
                date = datetime.date.fromisoformat(row["date"])
            except (TypeError, ValueError):
                raise CsvError(f"{path} line {i}: bad date {row['date']!r}")
            try:
                value = float(row["value"])
            except (TypeError, ValueError):
                raise CsvError(f"{path} line {i}: bad value {row['value']!r}")
            cell = row["cell_id"]
            if cell is None or cell == "":
                raise CsvError(f"{path} line {i}: empty cell_id")
            dates = per_cell.setdefault(cell, {})
            if date in dates:
                raise CsvError(f"duplicate entry for cell {cell}, {date.isoformat()}")
            dates[date] = value
    if not per_cell:
        raise CsvError(f"{path}: no data rows")

    out = []
    for cell in sorted(per_cell):
        dates = per_cell[cell]
        first, last = min(dates), max(dates)
        if first.month != 1 or first.day != 1:
            raise CsvError(f"cell {cell}: record must start on Jan 1 "
                           f"(got {first.isoformat()})")
        if last.month != 12 or last.day != 31:
            raise CsvError(f"cell {cell}: record must end on Dec 31 "
                           f"(got {last.isoformat()})")
        spans_leap = any(is_leap_year(y) for y in range(first.year, last.year + 1))
        with_leap = (not spans_leap) or any(
            d.month == 2 and d.day == 29 for d in dates)
        expected = _expected_dates(first, last, with_leap)
        gaps = [d for d in expected if d not in dates]
        if gaps:
            shown = ", ".join(f"cell {cell}, {d.isoformat()}" for d in gaps[:5])
            more = f" and {len(gaps) - 5} more" if len(gaps) > 5 else ""
            raise CsvError(f"missing dates: {shown}{more}")
        extras = set(dates) - set(expected)
        if extras:
            d = min(extras)
            raise CsvError(f"cell {cell}: unexpected date {d.isoformat()} "
                           f"for a 365-day calendar record")
        values = np.array([dates[d] for d in expected], dtype=float)
        out.append(DailySeries.from_values(cell, values, first.year,
                                           with_leap_days=with_leap,
                                           variable=variable, units=units))
    return out
