"""Geographic and sector taxonomies.

A :class:`GeoTaxonomy` resolves postal codes to analysis units by longest
prefix, maps units to regions, and carries named :class:`Partition` objects
that group regions into macro-regions. A :class:`SectorTaxonomy` holds NACE
prefix sets (with exclusions) for technology-intensity classes.

Both are loaded from small CSV files; the package ships defaults for Italy
(20 NUTS2 regions) and for the Eurostat/OECD high-tech and knowledge-intensive
sector lists.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from importlib import resources
from typing import Mapping

from .errors import (
    ConfigError,
    DuplicatePrefix,
    PartitionOverlap,
    RegionNotCovered,
    UnknownPartition,
    UnknownRegion,
    UnknownSector,
    UnresolvableGeo,
)
from .ingest import NACE_PATTERN, _read_text

__all__ = [
    "Partition",
    "GeoTaxonomy",
    "SectorTaxonomy",
    "load_geo_config",
    "load_sector_config",
    "default_geo_taxonomy",
    "default_sector_taxonomy",
    "resolve_unit",
    "classify_sector",
]


@dataclass(frozen=True)
class Partition:
    name: str
    groups: Mapping[str, frozenset]

    def group_of(self) -> dict[str, str]:
        """Inverse mapping region -> group id."""
        return {r: g for g, regions in self.groups.items() for r in regions}

    @property
    def group_ids(self) -> list[str]:
        return sorted(self.groups)


@dataclass(frozen=True)
class GeoTaxonomy:
    prefix_map: Mapping[str, str]
    unit_to_region: Mapping[str, str]
    region_names: Mapping[str, str]
    partitions: Mapping[str, Partition] = field(default_factory=dict)

    def __post_init__(self):
        for unit in self.prefix_map.values():
            if unit not in self.unit_to_region:
                raise UnknownRegion(f"unit {unit!r} has no region")
        regions = set(self.region_names)
        for unit, region in self.unit_to_region.items():
            if region not in regions:
                raise UnknownRegion(f"unit {unit!r} maps to undefined region {region!r}")
        for p in self.partitions.values():
            _check_partition(p, regions)
        # longest prefix first
        object.__setattr__(
            self, "_lengths", tuple(sorted({len(p) for p in self.prefix_map}, reverse=True))
        )

    @property
    def regions(self) -> list[str]:
        return sorted(self.region_names)

    def match_unit(self, geo_code: str) -> str | None:
        pm = self.prefix_map
        for n in self._lengths:
            if n <= len(geo_code):
                unit = pm.get(geo_code[:n])
                if unit is not None:
                    return unit
        return None

    def partition(self, name: str) -> Partition:
        try:
            return self.partitions[name]
        except KeyError:
            raise UnknownPartition(
                f"unknown partition {name!r}; known: {', '.join(self.partitions)}"
            ) from None

    def with_partition(self, partition: Partition) -> "GeoTaxonomy":
        parts = dict(self.partitions)
        parts[partition.name] = partition
        return GeoTaxonomy(self.prefix_map, self.unit_to_region, self.region_names, parts)


def _check_partition(p: Partition, regions: set[str]) -> None:
    seen: dict[str, str] = {}
    for gid, members in p.groups.items():
        for r in members:
            if r not in regions:
                raise UnknownRegion(f"partition {p.name!r} group {gid!r}: unknown region {r!r}")
            if r in seen:
                raise PartitionOverlap(
                    f"partition {p.name!r}: region {r!r} in groups {seen[r]!r} and {gid!r}"
                )
            seen[r] = gid
    missing = regions - seen.keys()
    if missing:
        raise RegionNotCovered(f"partition {p.name!r} omits regions {sorted(missing)}")


def resolve_unit(geo_code: str, taxonomy: GeoTaxonomy, level: str = "unit") -> str:
    """Longest-prefix lookup of a geo code; ``level`` is ``"unit"`` or ``"region"``."""
    unit = taxonomy.match_unit(geo_code)
    if unit is None:
        raise UnresolvableGeo(f"no prefix matches geo code {geo_code!r}")
    if level == "unit":
        return unit
    if level == "region":
        return taxonomy.unit_to_region[unit]
    raise ValueError(f"level must be 'unit' or 'region', got {level!r}")


def _config_rows(source):
    for lineno, row in enumerate(csv.reader(io.StringIO(_read_text(source), newline="")), 1):
        if not row or not "".join(row).strip() or row[0].lstrip().startswith("#"):
            continue
        yield lineno, [c.strip() for c in row]


def load_geo_config(source) -> GeoTaxonomy:
    """Read a geo config CSV (bytes, binary file or path).

    Row kinds::

        prefix,<postal prefix>,<unit id>
        region,<unit id>,<region id>,<region name>
        partition,<partition name>,<group id>,<region id>
    """
    prefix_map: dict[str, str] = {}
    unit_to_region: dict[str, str] = {}
    region_names: dict[str, str] = {}
    groups: dict[str, dict[str, set]] = {}
    for lineno, row in _config_rows(source):
        kind = row[0]
        if kind == "prefix" and len(row) == 3 and row[1]:
            _, prefix, unit = row
            if prefix in prefix_map:
                raise DuplicatePrefix(f"line {lineno}: prefix {prefix!r} defined twice")
            prefix_map[prefix] = unit
        elif kind == "region" and len(row) in (3, 4):
            unit, region = row[1], row[2]
            name = row[3] if len(row) == 4 and row[3] else region
            if unit_to_region.get(unit, region) != region:
                raise ConfigError(f"line {lineno}: unit {unit!r} assigned to two regions")
            if region_names.get(region, name) != name:
                raise ConfigError(f"line {lineno}: region {region!r} has two names")
            unit_to_region[unit] = region
            region_names[region] = name
        elif kind == "partition" and len(row) == 4:
            _, pname, gid, region = row
            if region not in region_names:
                raise UnknownRegion(f"line {lineno}: partition {pname!r} names unknown region {region!r}")
            part = groups.setdefault(pname, {})
            for other, members in part.items():
                if other != gid and region in members:
                    raise PartitionOverlap(
                        f"line {lineno}: region {region!r} in groups {other!r} and {gid!r} of {pname!r}"
                    )
            part.setdefault(gid, set()).add(region)
        else:
            raise ConfigError(f"line {lineno}: unrecognized row {row!r}")
    partitions = {
        name: Partition(name, {g: frozenset(m) for g, m in part.items()})
        for name, part in groups.items()
    }
    return GeoTaxonomy(prefix_map, unit_to_region, region_names, partitions)


@dataclass(frozen=True)
class SectorTaxonomy:
    """NACE prefix sets per sector label.

    ``sets[label] = (includes, excludes)``; a code belongs to a label when it
    starts with some include prefix and with no exclude prefix.
    """

    sets: Mapping[str, tuple[tuple[str, ...], tuple[str, ...]]]

    def __post_init__(self):
        for label, (inc, exc) in self.sets.items():
            for p in inc + exc:
                if not NACE_PATTERN.match(p):
                    raise ConfigError(f"sector {label!r}: bad NACE prefix {p!r}")
            for e in exc:
                if not any(e != i and e.startswith(i) for i in inc):
                    raise ConfigError(
                        f"sector {label!r}: exclusion {e!r} is not inside an included prefix"
                    )

    @property
    def labels(self) -> list[str]:
        return list(self.sets)

    def require(self, label: str) -> None:
        if label not in self.sets:
            raise UnknownSector(f"unknown sector {label!r}; known: {', '.join(self.sets)}")

    def contains(self, label: str, nace_code: str) -> bool:
        self.require(label)
        inc, exc = self.sets[label]
        # normalized codes nest as strings: "30.12" lies under "30.1" and "30"
        return nace_code.startswith(inc) and not (exc and nace_code.startswith(exc))


def classify_sector(nace_code: str, sectors: SectorTaxonomy) -> frozenset:
    return frozenset(label for label in sectors.sets if sectors.contains(label, nace_code))


def load_sector_config(source) -> SectorTaxonomy:
    """Read rows ``sector,<label>,include|exclude,<nace prefix>``."""
    sets: dict[str, tuple[list, list]] = {}
    for lineno, row in _config_rows(source):
        if len(row) != 4 or row[0] != "sector" or row[2] not in ("include", "exclude"):
            raise ConfigError(f"line {lineno}: unrecognized row {row!r}")
        inc, exc = sets.setdefault(row[1], ([], []))
        (inc if row[2] == "include" else exc).append(row[3])
    return SectorTaxonomy({k: (tuple(i), tuple(e)) for k, (i, e) in sets.items()})


def _data_file(name):
    return resources.files("triplehelix").joinpath("data", name).read_bytes()


def default_geo_taxonomy() -> GeoTaxonomy:
    """Italy: two-digit CAP prefixes, 20 NUTS2 regions, and the partitions
    ``nuts2-20``, ``nuts1-5``, ``north-center-south``, ``north-south`` and
    ``national``."""
    return load_geo_config(_data_file("italy_geo.csv"))


def default_sector_taxonomy() -> SectorTaxonomy:
    """Labels ``HT_manufacturing``, ``MHT_manufacturing``, ``MHTM`` (their
    union), ``KIS`` and ``HT_KIS``."""
    return load_sector_config(_data_file("sectors.csv"))
