"""Command-line interface: ``triplehelix {validate,compute,sectors,synth}``.

Exit codes: 0 success, 1 domain error (bad data or configuration
semantics, or any per-pair error in a report), 2 I/O or usage error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import report as fmt
from .decomp import decompose_tally, multi_level_report, percent_contributions
from .errors import EmptySubset, DegenerateTotal, SynergyError
from .infocore import TensorConfig
from .ingest import Schema
from .sectors import rank_correlation_table, sector_report
from .synthgen import ITALY_2015_SIZE_WEIGHTS, MODES, SynthSpec, write_csv
from .tally import scan_csv
from .taxonomy import default_geo_taxonomy, default_sector_taxonomy, load_geo_config, load_sector_config

log = logging.getLogger("triplehelix")


class UsageError(Exception):
    pass


def _inputs(values):
    out = {}
    for v in values or []:
        name, sep, path = v.partition("=")
        if not sep:
            name, path = Path(v).stem, v
        if not name or not path:
            raise UsageError(f"--input expects name=path, got {v!r}")
        if name in out:
            raise UsageError(f"dataset name {name!r} given twice")
        out[name] = path
    if not out:
        raise UsageError("at least one --input is required")
    return out


def _schema(args):
    return Schema(args.id_col, args.geo_col, args.size_col, args.nace_col, args.size_mode)


def _geo(args):
    return load_geo_config(args.geo_config) if args.geo_config else default_geo_taxonomy()


def _sectors(args):
    return load_sector_config(args.sector_config) if args.sector_config else default_sector_taxonomy()


def _config(args):
    try:
        return TensorConfig.make(args.geo_level, args.nace_digits)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _partitions(args, taxonomy):
    names = args.partition or list(taxonomy.partitions)
    return [taxonomy.partition(n) for n in names]


def _emit(text, output):
    if output in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(output).write_text(text, encoding="utf-8", newline="")


def _scan_all(args, taxonomy, config, check_ids=False):
    tallies = {}
    for name, path in _inputs(args.input).items():
        tally = scan_csv(path, taxonomy, _schema(args), config.geo_level, workers=args.workers,
                         check_ids=check_ids)
        if tally.report.records_rejected:
            log.warning("%s: %d rows rejected %s", name, tally.report.records_rejected,
                        tally.report.reason_counts())
        tallies[name] = tally
    return tallies


def cmd_validate(args) -> int:
    taxonomy = _geo(args)
    config = _config(args)
    tallies = _scan_all(args, taxonomy, config, check_ids=True)
    reports = [(name, t.report) for name, t in tallies.items()]
    _emit(fmt.validate_csv(reports) if args.format == "csv" else fmt.validate_json(reports), args.output)
    for name, rep in reports:
        print(f"{name}: accepted={rep.records_accepted} rejected={rep.records_rejected}", file=sys.stderr)
    return 0 if all(rep.clean for _, rep in reports) else 1


def cmd_compute(args) -> int:
    taxonomy = _geo(args)
    config = _config(args)
    partitions = _partitions(args, taxonomy)
    tallies = _scan_all(args, taxonomy, config)
    rep = multi_level_report(tallies, partitions, taxonomy, config)
    _emit(fmt.compute_csv(rep) if args.format == "csv" else fmt.compute_json(rep), args.output)
    if args.plot_data:
        out = Path(args.plot_data)
        out.mkdir(parents=True, exist_ok=True)
        for sec in rep.datasets:
            for d in sec.decompositions:
                if d.partition not in sec.errors:
                    (out / f"{sec.name}__{d.partition}.csv").write_text(
                        fmt.plot_csv(d, taxonomy.region_names), encoding="utf-8", newline="")
    failed = [(s.name, p, e) for s in rep.datasets for p, e in s.errors.items()]
    for name, p, e in failed:
        print(f"{e}: dataset {name!r}, partition {p!r}", file=sys.stderr)
    return 1 if failed else 0


def run_sectors(tallies, taxonomy, sectors, partitions, labels, config):
    for label in labels:
        sectors.require(label)
    sections = []
    for name, tally in tallies.items():
        parts = []
        for p in partitions:
            full = decompose_tally(tally, p, config)
            try:
                full = percent_contributions(full)
            except DegenerateTotal as exc:
                parts.append({"full": full, "status": exc.code, "sectors": [], "correlations": []})
                continue
            entries = []
            percents = {"full": full.percents}
            counts = {"full": {g.group: g.n for g in full.groups}}
            for label in labels:
                try:
                    r = sector_report(tally, taxonomy, sectors, p, label, full, config)
                except (EmptySubset, DegenerateTotal) as exc:
                    n_sub = 0 if isinstance(exc, EmptySubset) else None
                    entries.append({"label": label, "status": exc.code, "n_subset": n_sub, "share_percent": None})
                    continue
                entries.append({"label": label, "status": "ok", "n_subset": r.n_subset,
                                "share_percent": r.share_percent, "report": r})
                percents[label] = r.decomposition.percents
                counts[label] = {g.group: g.n for g in r.decomposition.groups}
            correlations = []
            groups = p.group_ids
            for quantity, profiles in (("percent", percents), ("count", counts)):
                if len(groups) < 3:
                    continue
                table = rank_correlation_table(profiles, groups)
                keys = list(profiles)
                for i, a in enumerate(keys):
                    for b in keys[i + 1:]:
                        correlations.append((quantity, a, b, table[a, b]))
            parts.append({"full": full, "status": "ok", "sectors": entries, "correlations": correlations})
        sections.append({"name": name, "n_records": tally.n, "config": config.describe(), "partitions": parts})
    return sections


def cmd_sectors(args) -> int:
    taxonomy = _geo(args)
    sectors = _sectors(args)
    config = _config(args)
    labels = args.sector or ["MHTM", "KIS"]
    for label in labels:
        sectors.require(label)
    partitions = _partitions(args, taxonomy)
    tallies = _scan_all(args, taxonomy, config)
    sections = run_sectors(tallies, taxonomy, sectors, partitions, labels, config)
    _emit(fmt.sectors_csv(sections) if args.format == "csv" else fmt.sectors_json(sections), args.output)
    failed = 0
    for s in sections:
        for p in s["partitions"]:
            if p["status"] != "ok":
                failed += 1
                print(f"{p['status']}: dataset {s['name']!r}, partition {p['full'].partition!r}", file=sys.stderr)
            for e in p["sectors"]:
                if e["status"] != "ok":
                    failed += 1
                    print(f"{e['status']}: dataset {s['name']!r}, sector {e['label']!r}", file=sys.stderr)
    return 1 if failed else 0


def cmd_synth(args) -> int:
    try:
        card = tuple(int(x) for x in args.cardinalities.split(","))
    except ValueError:
        raise UsageError(f"--cardinalities expects G,T,O integers, got {args.cardinalities!r}") from None
    weights = ITALY_2015_SIZE_WEIGHTS[: card[2]] if args.size_weights == "italy2015" else None
    spec = SynthSpec(args.n, card, args.mode, args.strength, args.seed, args.exact, weights)
    n = write_csv(spec, args.output)
    print(f"wrote {n} records to {args.output}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="triplehelix", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def data_args(p):
        p.add_argument("--input", action="append", metavar="NAME=PATH",
                       help="firm CSV; repeatable, reported in the given order")
        p.add_argument("--geo-config", help="geo taxonomy CSV (default: built-in Italy)")
        p.add_argument("--geo-level", default="prefix:2", help="postal | prefix:<k> | region")
        p.add_argument("--nace-digits", default="2", choices=["2", "3", "4", "full"])
        p.add_argument("--id-col", default="id")
        p.add_argument("--geo-col", default="cap")
        p.add_argument("--size-col", default="size")
        p.add_argument("--nace-col", default="nace")
        p.add_argument("--size-mode", default="class", choices=["class", "employees"])
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--format", default="json", choices=["csv", "json"])
        p.add_argument("--output", default="-")

    p = sub.add_parser("validate", help="check input files")
    data_args(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("compute", help="synergy decomposition per dataset and partition")
    data_args(p)
    p.add_argument("--partition", action="append", help="partition name; repeatable (default: all)")
    p.add_argument("--plot-data", metavar="DIR", help="also write group,name,percent CSVs here")
    p.set_defaults(func=cmd_compute)

    p = sub.add_parser("sectors", help="sector subsets versus the full set")
    data_args(p)
    p.add_argument("--sector-config", help="sector CSV (default: built-in Eurostat/OECD lists)")
    p.add_argument("--partition", action="append")
    p.add_argument("--sector", action="append", help="sector label; repeatable (default: MHTM, KIS)")
    p.set_defaults(func=cmd_sectors)

    p = sub.add_parser("synth", help="write a synthetic firm population")
    p.add_argument("--mode", default="independent", choices=MODES)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--strength", type=float, default=0.0)
    p.add_argument("--cardinalities", default="2,2,2", metavar="G,T,O")
    p.add_argument("--exact", action="store_true")
    p.add_argument("--size-weights", choices=["italy2015"])
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_synth)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"FileNotFound: {exc.filename or exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2
    except SynergyError as exc:
        print(f"{exc.code}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
