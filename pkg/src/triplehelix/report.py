"""Stable CSV/JSON serialization of reports.

Numbers are written with fixed precision (millibits to 6 decimals,
percentages to 4) so outputs are byte-stable across platforms. Negative zero
is written as zero.
"""
from __future__ import annotations

import csv
import io
import json
import re
from typing import Sequence

from .decomp import DatasetSection, MultiLevelReport, SynergyDecomposition
from .infocore import to_millibits

MB_PLACES = 6
PCT_PLACES = 4
RHO_PLACES = 6

COMPUTE_CSV_COLUMNS = (
    "dataset", "partition", "status", "row", "group", "n",
    "t_millibits", "weighted_millibits", "percent",
)

_RAW = "\x00raw:"
_RAW_RE = re.compile(r'"\\u0000raw:([^"]*)"')


def fixed(x: float | None, places: int) -> str:
    if x is None:
        return ""
    s = f"{x:.{places}f}"
    if s.startswith("-") and not s.strip("-0."):
        s = s[1:]
    return s


def mb(bits):
    return fixed(None if bits is None else to_millibits(bits), MB_PLACES)


def pct(p):
    return fixed(p, PCT_PLACES)


def _num(text: str):
    # emitted unquoted: a JSON number, or null for missing values
    return _RAW + (text if text else "null")


def dumps(obj) -> str:
    """JSON with two-space indent and fixed-precision numbers."""
    return _RAW_RE.sub(r"\1", json.dumps(obj, indent=2, ensure_ascii=False)) + "\n"


def partition_block(d: SynergyDecomposition, status: str = "ok") -> dict:
    return {
        "partition": d.partition,
        "status": status,
        "groups": [
            {
                "group": g.group,
                "n": g.n,
                "t_millibits": _num(mb(g.T)),
                "weighted_millibits": _num(mb(g.weighted)),
                "percent": _num(pct(g.percent)),
            }
            for g in d.groups
        ],
        "t0": {"t_millibits": _num(mb(d.T_0)), "percent": _num(pct(d.T_0_percent))},
        "total": {"n": d.N, "t_millibits": _num(mb(d.total_T))},
    }


def _dataset_head(sec: DatasetSection) -> dict:
    return {
        "name": sec.name,
        "n_records": sec.N,
        "n_rejected": sec.rejected,
        "cardinalities": dict(sec.cardinalities),
        "total_millibits": _num(mb(sec.total_T)),
    }


def compute_json(report: MultiLevelReport) -> str:
    datasets = []
    for sec in report.datasets:
        head = _dataset_head(sec)
        head["partitions"] = [
            partition_block(d, sec.errors.get(d.partition, "ok")) for d in sec.decompositions
        ]
        datasets.append(head)
    return dumps({"schema": "triplehelix.compute/1", "config": dict(report.config), "datasets": datasets})


def decomposition_rows(dataset: str, d: SynergyDecomposition, status: str = "ok") -> list[list[str]]:
    rows = [
        [dataset, d.partition, status, "group", g.group, str(g.n), mb(g.T), mb(g.weighted), pct(g.percent)]
        for g in d.groups
    ]
    rows.append([dataset, d.partition, status, "T0", "", "", mb(d.T_0), mb(d.T_0), pct(d.T_0_percent)])
    rows.append([dataset, d.partition, status, "total", "", str(d.N), mb(d.total_T), "", ""])
    return rows


def _csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def compute_csv(report: MultiLevelReport) -> str:
    rows = []
    for sec in report.datasets:
        for d in sec.decompositions:
            rows.extend(decomposition_rows(sec.name, d, sec.errors.get(d.partition, "ok")))
    return _csv(COMPUTE_CSV_COLUMNS, rows)


def plot_csv(d: SynergyDecomposition, names=None) -> str:
    """``group,name,percent`` rows for choropleth tools."""
    names = names or {}
    return _csv(("group", "name", "percent"),
                [[g.group, names.get(g.group, g.group), pct(g.percent)] for g in d.groups])


def validate_json(reports: Sequence[tuple[str, object]]) -> str:
    out = []
    for name, rep in reports:
        out.append({
            "name": name,
            "records_accepted": rep.records_accepted,
            "records_rejected": rep.records_rejected,
            "reason_counts": rep.reason_counts(),
            "rejections": [{"line": r.line, "reason": r.reason} for r in rep.rejection_reasons],
            "duplicate_ids": list(rep.duplicate_ids),
        })
    return dumps({"schema": "triplehelix.validate/1", "datasets": out})


def validate_csv(reports) -> str:
    rows = [[name, str(r.line), r.reason] for name, rep in reports for r in rep.rejection_reasons]
    return _csv(("dataset", "line", "reason"), rows)


SECTORS_CSV_COLUMNS = ("dataset", "partition", "sector", "status", "row", "group", "n",
                       "t_millibits", "weighted_millibits", "percent", "delta_percent")


def sectors_json(sections) -> str:
    """``sections``: list of dicts produced by :func:`triplehelix.cli.run_sectors`."""
    datasets = []
    for s in sections:
        parts = []
        for p in s["partitions"]:
            sectors = []
            for rep in p["sectors"]:
                entry = {"label": rep["label"], "status": rep["status"],
                         "n_subset": rep["n_subset"], "share_percent": _num(pct(rep["share_percent"]))}
                if rep["status"] == "ok":
                    r = rep["report"]
                    entry["decomposition"] = partition_block(r.decomposition)
                    entry["deltas"] = [{"group": g, "delta_percent": _num(pct(v))} for g, v in r.deltas.items()]
                sectors.append(entry)
            parts.append({
                "partition": p["full"].partition,
                "full": partition_block(p["full"], p["status"]),
                "sectors": sectors,
                "rank_correlations": [
                    {"quantity": q, "a": a, "b": b,
                     "n": None if rc is None else rc.n,
                     "rho": _num(fixed(None if rc is None else rc.rho, RHO_PLACES)),
                     "p_value_approx": _num(fixed(None if rc is None else rc.p_value_approx, RHO_PLACES))}
                    for q, a, b, rc in p["correlations"]
                ],
            })
        datasets.append({"name": s["name"], "n_records": s["n_records"], "partitions": parts})
    return dumps({"schema": "triplehelix.sectors/1", "config": sections[0]["config"] if sections else {},
                  "datasets": datasets})


def sectors_csv(sections) -> str:
    rows = []
    for s in sections:
        for p in s["partitions"]:
            full = p["full"]
            for r in decomposition_rows(s["name"], full, p["status"]):
                rows.append(r[:2] + ["full"] + r[2:] + [""])
            for rep in p["sectors"]:
                if rep["status"] != "ok":
                    rows.append([s["name"], full.partition, rep["label"], rep["status"],
                                 "", "", "" if rep["n_subset"] is None else str(rep["n_subset"]),
                                 "", "", "", ""])
                    continue
                r = rep["report"]
                for row in decomposition_rows(s["name"], r.decomposition):
                    gid = row[4] if row[3] == "group" else ("T0" if row[3] == "T0" else None)
                    delta = pct(r.deltas[gid]) if gid is not None else ""
                    rows.append(row[:2] + [rep["label"]] + row[2:] + [delta])
    return _csv(SECTORS_CSV_COLUMNS, rows)
