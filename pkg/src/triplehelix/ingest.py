"""Parsing and validation of firm-level microdata.

Input is a UTF-8 comma-separated file with a header row. Four columns are
required: a firm identifier, a postal (or administrative) code, a size column
holding either pre-binned classes 1..9 or raw employee counts, and a NACE
activity code. Rows that fail to parse are skipped and recorded in an
:class:`IngestReport`; they never abort the run.
"""
from __future__ import annotations

import csv
import io
import os
import re
from bisect import bisect_right
from dataclasses import dataclass, field
from typing import Iterable

from .errors import EmptyInput, MalformedCode, MissingColumn

__all__ = [
    "FirmRecord",
    "Schema",
    "Rejection",
    "IngestReport",
    "SIZE_CLASS_BOUNDS",
    "bin_size_class",
    "normalize_nace",
    "parse_firms",
    "validate_dataset",
]

# lower employee bound of classes 2..9
SIZE_CLASS_BOUNDS = (2, 5, 10, 20, 50, 100, 200, 500)

NACE_PATTERN = re.compile(r"^\d{2}(\.\d{1,2})?$")
_MULTI_CODE_SEP = re.compile(r"[;|/\s]+")


@dataclass(frozen=True, slots=True)
class FirmRecord:
    firm_id: str
    geo_code: str
    size_class: int
    nace_code: str


@dataclass(frozen=True)
class Schema:
    """Column mapping for :func:`parse_firms`.

    ``size_mode`` is ``"class"`` when the size column already holds classes
    1..9 and ``"employees"`` when it holds head counts to be binned.
    """

    id_col: str = "id"
    geo_col: str = "cap"
    size_col: str = "size"
    nace_col: str = "nace"
    size_mode: str = "class"

    def __post_init__(self):
        if self.size_mode not in ("class", "employees"):
            raise ValueError(f"size_mode must be 'class' or 'employees', got {self.size_mode!r}")

    @property
    def columns(self):
        return (self.id_col, self.geo_col, self.size_col, self.nace_col)


@dataclass(frozen=True)
class Rejection:
    line: int
    reason: str


@dataclass
class IngestReport:
    records_accepted: int = 0
    records_rejected: int = 0
    rejection_reasons: list[Rejection] = field(default_factory=list)
    duplicate_ids: list[str] = field(default_factory=list)

    @property
    def total(self):
        return self.records_accepted + self.records_rejected

    @property
    def clean(self):
        return self.records_rejected == 0

    def reason_counts(self):
        out: dict[str, int] = {}
        for r in self.rejection_reasons:
            out[r.reason] = out.get(r.reason, 0) + 1
        return dict(sorted(out.items()))


def bin_size_class(employees: int) -> int:
    """Map a non-negative employee count to size class 1..9.

    Bins: 0-1, 2-4, 5-9, 10-19, 20-49, 50-99, 100-199, 200-499, 500+.
    """
    if employees < 0:
        raise ValueError(f"employee count must be non-negative, got {employees}")
    return bisect_right(SIZE_CLASS_BOUNDS, employees) + 1


def _split_nace(raw: str) -> tuple[str, str]:
    s = raw.strip()
    if not s:
        raise MalformedCode("empty NACE code")
    s = _MULTI_CODE_SEP.split(s)[0]
    # ATECO/NACE exports sometimes prefix the section letter ("C26.1")
    if s[:1].isalpha() and s[1:2].isdigit():
        s = s[1:]
    if "." in s:
        division, _, rest = s.partition(".")
        rest = rest.replace(".", "")
    else:
        division, rest = s[:2], s[2:]
    if len(division) != 2 or not division.isdigit() or (rest and not rest.isdigit()):
        raise MalformedCode(f"cannot parse NACE code {raw!r}")
    return division, rest[:2]


def normalize_nace(raw: str, digits: int | str = "full") -> str:
    """Normalize a NACE Rev. 2 code and truncate it to ``digits`` depth.

    ``digits`` is 2 (division, ``"30"``), 3 (group, ``"30.3"``), 4 (class,
    ``"30.30"``) or ``"full"`` (as much as is given, at most 4 digits). Codes
    shallower than the requested depth are returned at their own depth. When
    several codes are packed in one field only the first is kept.

    >>> normalize_nace("30.3", 2)
    '30'
    >>> normalize_nace("2611", "full")
    '26.11'
    """
    division, sub = _split_nace(raw)
    if digits == "full":
        keep = 2
    else:
        keep = int(digits) - 2
        if keep not in (0, 1, 2):
            raise ValueError(f"digits must be 2, 3, 4 or 'full', got {digits!r}")
    sub = sub[:keep]
    return f"{division}.{sub}" if sub else division


class _Rejected(Exception):
    def __init__(self, reason):
        self.reason = reason


class _RowParser:
    """Turns one CSV row into ``(firm_id, geo_code, size_class, nace_code)``.

    Normalization results are memoized on the raw field strings; census files
    repeat a few thousand distinct values millions of times.
    """

    def __init__(self, schema: Schema, header: list[str]):
        names = [h.strip() for h in header]
        missing = [c for c in schema.columns if c not in names]
        if missing:
            raise MissingColumn(f"columns not in header: {', '.join(missing)}")
        self.idx = tuple(names.index(c) for c in schema.columns)
        self.width = len(names)
        self.employees = schema.size_mode == "employees"
        self._size_cache: dict[str, int | str] = {}
        self._nace_cache: dict[str, str | None] = {}

    def size(self, raw: str) -> int:
        v = self._size_cache.get(raw)
        if v is None:
            s = raw.strip()
            if not s.isdigit():
                v = "MalformedSize"
            elif self.employees:
                v = bin_size_class(int(s))
            else:
                n = int(s)
                v = n if 1 <= n <= 9 else "MalformedSize"
            self._size_cache[raw] = v
        if type(v) is str:
            raise _Rejected(v)
        return v

    def nace(self, raw: str) -> str:
        try:
            v = self._nace_cache[raw]
        except KeyError:
            try:
                v = normalize_nace(raw)
            except MalformedCode:
                v = None
            self._nace_cache[raw] = v
        if v is None:
            raise _Rejected("MalformedCode")
        return v

    def __call__(self, row: list[str]) -> tuple[str, str, int, str]:
        if len(row) != self.width:
            raise _Rejected("WrongFieldCount" if row else "EmptyRow")
        i, g, s, n = self.idx
        fid, geo, size, nace = row[i].strip(), row[g].strip(), row[s], row[n]
        if not fid or not geo or not size.strip() or not nace.strip():
            raise _Rejected("MissingField")
        return fid, geo, self.size(size), self.nace(nace)


def _read_text(source) -> str:
    if isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    elif isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            data = fh.read()
    else:
        data = source.read()
        if isinstance(data, str):
            return data
    return data.decode("utf-8-sig")


def parse_firms(source, schema: Schema | None = None) -> tuple[list[FirmRecord], IngestReport]:
    """Parse a firm CSV into records plus a diagnostic report.

    ``source`` may be bytes, a binary file object or a path. Row order is
    preserved. Line numbers in the report are physical file lines with the
    header on line 1. A repeated firm id keeps its first occurrence; later ones
    are rejected as ``DuplicateId``.
    """
    schema = schema or Schema()
    reader = csv.reader(io.StringIO(_read_text(source), newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyInput("input has no header row") from None
    parse = _RowParser(schema, header)

    records: list[FirmRecord] = []
    report = IngestReport()
    seen: set[str] = set()
    dups: dict[str, None] = {}
    for row in reader:
        try:
            fid, geo, size, nace = parse(row)
        except _Rejected as r:
            report.rejection_reasons.append(Rejection(reader.line_num, r.reason))
            continue
        if fid in seen:
            dups.setdefault(fid)
            report.rejection_reasons.append(Rejection(reader.line_num, "DuplicateId"))
            continue
        seen.add(fid)
        records.append(FirmRecord(fid, geo, size, nace))

    report.records_accepted = len(records)
    report.records_rejected = len(report.rejection_reasons)
    report.duplicate_ids = list(dups)
    if report.total == 0:
        raise EmptyInput("input has no data rows")
    return records, report


def validate_dataset(records: Iterable[FirmRecord], taxonomy=None) -> IngestReport:
    """Check already-built records; nothing is raised.

    Reports repeated ids, size classes outside 1..9, NACE codes not in
    normalized form and, when a taxonomy is given, geo codes it cannot
    resolve. The ``line`` of each rejection is the 1-based position of the
    record in the input sequence. A record is rejected at most once, with its
    first problem.
    """
    report = IngestReport()
    seen: set[str] = set()
    dups: dict[str, None] = {}
    for pos, rec in enumerate(records, start=1):
        reason = None
        if rec.firm_id in seen:
            dups.setdefault(rec.firm_id)
            reason = "DuplicateId"
        seen.add(rec.firm_id)
        if reason is None and not (isinstance(rec.size_class, int) and 1 <= rec.size_class <= 9):
            reason = "SizeOutOfRange"
        if reason is None and not NACE_PATTERN.match(rec.nace_code or ""):
            reason = "MalformedCode"
        if reason is None and taxonomy is not None and taxonomy.match_unit(rec.geo_code) is None:
            reason = "UnresolvableGeo"
        if reason is None:
            report.records_accepted += 1
        else:
            report.rejection_reasons.append(Rejection(pos, reason))
    report.records_rejected = len(report.rejection_reasons)
    report.duplicate_ids = list(dups)
    return report
