"""Streaming aggregation of firm CSVs into integer counts.

A :class:`FirmTally` stores one integer per distinct
``(region, geo category, full NACE code, size class)`` key, so memory grows
with the number of distinct category combinations rather than with the number
of firms. Any partition, NACE depth or sector filter can be derived from the
same tally afterwards.

Files are cut into fixed-size byte chunks at newline boundaries. The chunk
layout depends only on the file and ``chunk_bytes``, never on the worker
count, and partial tallies are merged in chunk order with integer addition,
so results are bit-identical for any number of workers.

Chunking assumes no quoted field contains a newline.
"""
from __future__ import annotations

import csv
import io
import multiprocessing
import os
from dataclasses import dataclass, field
from typing import Iterable

from .errors import EmptyInput, UnresolvableGeo
from .infocore import ContingencyTensor, GeoLevel
from .ingest import FirmRecord, IngestReport, Rejection, Schema, _Rejected, _RowParser, normalize_nace
from .taxonomy import GeoTaxonomy

__all__ = ["FirmTally", "scan_csv", "DEFAULT_CHUNK_BYTES"]

DEFAULT_CHUNK_BYTES = 8 << 20


@dataclass
class FirmTally:
    geo_level: GeoLevel
    counts: dict = field(default_factory=dict)
    report: IngestReport = field(default_factory=IngestReport)

    @property
    def n(self) -> int:
        return sum(self.counts.values())

    @classmethod
    def from_records(cls, records: Iterable[FirmRecord], taxonomy: GeoTaxonomy,
                     geo_level: GeoLevel) -> "FirmTally":
        """Tally in-memory records; unresolvable geo codes raise."""
        counts: dict = {}
        geo_cache: dict = {}
        n = 0
        for rec in records:
            hit = geo_cache.get(rec.geo_code)
            if hit is None:
                unit = taxonomy.match_unit(rec.geo_code)
                if unit is None:
                    raise UnresolvableGeo(f"firm {rec.firm_id!r}: no prefix matches {rec.geo_code!r}")
                region = taxonomy.unit_to_region[unit]
                hit = geo_cache[rec.geo_code] = (region, geo_level.category(rec.geo_code, region))
            key = (hit[0], hit[1], rec.nace_code, rec.size_class)
            counts[key] = counts.get(key, 0) + 1
            n += 1
        return cls(geo_level, counts, IngestReport(records_accepted=n))

    def grouped_cells(self, group_of_key, nace_digits=2) -> dict:
        """``{group: {(g, t, o): count}}`` with ``group = group_of_key(key)``.

        ``group_of_key`` returning ``None`` drops the key (used for sector
        filters).
        """
        out: dict = {}
        nace_cache: dict = {}
        for key, c in self.counts.items():
            grp = group_of_key(key)
            if grp is None:
                continue
            region, g, nace, size = key
            t = nace_cache.get(nace)
            if t is None:
                t = nace_cache[nace] = normalize_nace(nace, nace_digits)
            cells = out.setdefault(grp, {})
            k = (g, t, size)
            cells[k] = cells.get(k, 0) + c
        return out

    def tensor(self, nace_digits=2, keep=None) -> ContingencyTensor:
        """Whole-set tensor; ``keep(key)`` optionally filters keys."""
        cells = self.grouped_cells(
            (lambda k: 0) if keep is None else (lambda k: 0 if keep(k) else None), nace_digits
        )
        return ContingencyTensor.from_counts(cells.get(0, {}))

    def filtered(self, keep) -> "FirmTally":
        sub = {k: c for k, c in self.counts.items() if keep(k)}
        return FirmTally(self.geo_level, sub, IngestReport(records_accepted=sum(sub.values())))


# worker state, installed once per process by the pool initializer
_PLAN = None


@dataclass(frozen=True)
class _Plan:
    path: str
    header: tuple
    schema: Schema
    taxonomy: GeoTaxonomy
    geo_level: GeoLevel
    check_ids: bool


def _install(plan):
    global _PLAN
    _PLAN = plan


def _scan_chunk(span):
    start, end = span
    plan = _PLAN
    with open(plan.path, "rb") as fh:
        fh.seek(start)
        data = fh.read(end - start)
    parse = _RowParser(plan.schema, list(plan.header))
    tax, level = plan.taxonomy, plan.geo_level
    counts: dict = {}
    rejections = []
    ids = [] if plan.check_ids else None
    geo_cache: dict = {}
    reader = csv.reader(io.StringIO(data.decode("utf-8"), newline=""))
    for row in reader:
        try:
            fid, geo, size, nace = parse(row)
        except _Rejected as r:
            rejections.append((reader.line_num, r.reason))
            continue
        hit = geo_cache.get(geo)
        if hit is None:
            unit = tax.match_unit(geo)
            if unit is None:
                hit = geo_cache[geo] = False
            else:
                region = tax.unit_to_region[unit]
                hit = geo_cache[geo] = (region, level.category(geo, region))
        if hit is False:
            rejections.append((reader.line_num, "UnresolvableGeo"))
            continue
        key = (hit[0], hit[1], nace, size)
        counts[key] = counts.get(key, 0) + 1
        if ids is not None:
            ids.append((reader.line_num, fid, key))
    return counts, rejections, ids, data.count(b"\n")


def _chunk_spans(path, start, size, chunk_bytes):
    spans = []
    with open(path, "rb") as fh:
        pos = start
        while pos < size:
            end = min(pos + chunk_bytes, size)
            if end < size:
                fh.seek(end)
                tail = fh.readline()
                end += len(tail)
            spans.append((pos, end))
            pos = end
    return spans


def scan_csv(
    path,
    taxonomy: GeoTaxonomy,
    schema: Schema | None = None,
    geo_level: GeoLevel | str = "prefix:2",
    workers: int = 1,
    check_ids: bool = False,
    chunk_bytes: int = DEFAULT_CHUNK_BYTES,
) -> FirmTally:
    """Stream a firm CSV into a :class:`FirmTally`.

    Rows that fail to parse or whose geo code the taxonomy cannot resolve are
    rejected and reported, never fatal. Firm-id uniqueness is only checked
    with ``check_ids=True``, which keeps every id in memory; later duplicates
    are then removed from the counts and reported as ``DuplicateId``.
    """
    schema = schema or Schema()
    if isinstance(geo_level, str):
        geo_level = GeoLevel.parse(geo_level)
    path = os.fspath(path)
    size = os.path.getsize(path)
    with open(path, "rb") as fh:
        head = fh.readline()
    header_text = head.decode("utf-8-sig").rstrip("\r\n")
    if not header_text.strip():
        raise EmptyInput(f"{path}: no header row")
    header = next(csv.reader([header_text]))
    _RowParser(schema, header)  # raises MissingColumn early

    plan = _Plan(path, tuple(header), schema, taxonomy, geo_level, check_ids)
    spans = _chunk_spans(path, len(head), size, chunk_bytes)
    if workers <= 1 or len(spans) <= 1:
        _install(plan)
        results = map(_scan_chunk, spans)
        pool = None
    else:
        ctx = multiprocessing.get_context("fork" if os.name == "posix" else "spawn")
        pool = ctx.Pool(workers, initializer=_install, initargs=(plan,))
        results = pool.imap(_scan_chunk, spans)

    counts: dict = {}
    report = IngestReport()
    seen = set() if check_ids else None
    dups: dict = {}
    line_offset = 1
    try:
        for part, rejections, ids, nlines in results:
            for k, c in part.items():
                counts[k] = counts.get(k, 0) + c
            report.rejection_reasons.extend(Rejection(line_offset + ln, r) for ln, r in rejections)
            if ids is not None:
                for ln, fid, key in ids:
                    if fid in seen:
                        dups.setdefault(fid)
                        report.rejection_reasons.append(Rejection(line_offset + ln, "DuplicateId"))
                        counts[key] -= 1
                        if not counts[key]:
                            del counts[key]
                    else:
                        seen.add(fid)
            line_offset += nlines
    finally:
        if pool is not None:
            pool.close()
            pool.join()
        else:
            _install(None)

    if check_ids:
        report.rejection_reasons.sort(key=lambda r: r.line)
    report.records_accepted = sum(counts.values())
    report.records_rejected = len(report.rejection_reasons)
    report.duplicate_ids = list(dups)
    if report.total == 0:
        raise EmptyInput(f"{path}: no data rows")
    return FirmTally(geo_level, counts, report)
