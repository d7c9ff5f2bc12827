"""Within/between-group decomposition of three-way synergy.

For a partition of firms into groups ``G``::

    T = T_0 + sum_G (n_G / N) * T_G

``T`` is the three-way mutual information of the whole set, ``T_G`` that of
group ``G`` alone (categories restricted to those observed in ``G``) and
``T_0`` the between-group residual: the synergy the higher-level system adds
beyond the weighted sum of its parts. ``T_0`` is always computed as that
residual.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Mapping, Sequence

from .errors import ConfigError, DegenerateTotal, EmptyDataset, SynergyError
from .infocore import ContingencyTensor, TensorConfig, mutual_info_3
from .taxonomy import GeoTaxonomy, Partition, SectorTaxonomy
from .tally import FirmTally

__all__ = [
    "GroupTerm",
    "SynergyDecomposition",
    "DatasetSection",
    "MultiLevelReport",
    "decompose_cells",
    "decompose",
    "decompose_tally",
    "decompose_by",
    "percent_contributions",
    "multi_level_report",
    "as_tally",
]


@dataclass(frozen=True)
class GroupTerm:
    group: str
    n: int
    T: float
    weighted: float
    percent: float | None = None


@dataclass(frozen=True)
class SynergyDecomposition:
    partition: str
    N: int
    total_T: float
    groups: tuple[GroupTerm, ...]
    T_0: float
    T_0_percent: float | None = None
    config: Mapping[str, str] = field(default_factory=dict)

    def group(self, gid: str) -> GroupTerm:
        for g in self.groups:
            if g.group == gid:
                return g
        raise KeyError(gid)

    @property
    def percents(self) -> dict[str, float | None]:
        return {g.group: g.percent for g in self.groups}

    @property
    def within_sum(self) -> float:
        return math.fsum(g.weighted for g in self.groups)


def _synergy(cells: Mapping[tuple, int]) -> float:
    if not cells:
        return 0.0
    return mutual_info_3(ContingencyTensor.from_counts(cells))


def decompose_cells(
    grouped: Mapping[str, Mapping[tuple, int]],
    group_ids: Sequence[str] | None = None,
    partition_name: str = "",
    config: Mapping[str, str] | None = None,
) -> SynergyDecomposition:
    """Decompose from per-group ``{(g, t, o): count}`` tables.

    ``group_ids`` fixes the reported groups (sorted); groups without firms get
    ``n = 0`` and ``T = 0``.
    """
    total_cells: dict = {}
    for cells in grouped.values():
        for k, c in cells.items():
            total_cells[k] = total_cells.get(k, 0) + c
    N = sum(total_cells.values())
    if N == 0:
        raise EmptyDataset("no firms to decompose")
    total_T = _synergy(total_cells)

    ids = sorted(set(group_ids) if group_ids is not None else grouped)
    extra = set(grouped) - set(ids)
    if extra:
        raise ConfigError(f"cells for undeclared groups {sorted(extra)}")
    terms = []
    for gid in ids:
        cells = grouped.get(gid, {})
        n = sum(cells.values())
        T = _synergy(cells)
        terms.append(GroupTerm(str(gid), n, T, (n / N) * T))
    T_0 = total_T - math.fsum(t.weighted for t in terms)
    return SynergyDecomposition(partition_name, N, total_T, tuple(terms), T_0, None, dict(config or {}))


def percent_contributions(d: SynergyDecomposition) -> SynergyDecomposition:
    """Express each weighted group term and ``T_0`` as a signed percentage of
    the total. A term whose sign opposes the total comes out negative."""
    if d.total_T == 0.0:
        raise DegenerateTotal(f"partition {d.partition!r}: total synergy is 0, percentages undefined")
    # 0.0 + x turns -0.0 into 0.0
    groups = tuple(replace(g, percent=0.0 + 100.0 * g.weighted / d.total_T) for g in d.groups)
    return replace(d, groups=groups, T_0_percent=0.0 + 100.0 * d.T_0 / d.total_T)


def as_tally(data, taxonomy: GeoTaxonomy, config: TensorConfig) -> FirmTally:
    if isinstance(data, FirmTally):
        if data.geo_level != config.geo_level:
            raise ConfigError(
                f"tally built at geo level {data.geo_level}, config asks for {config.geo_level}"
            )
        return data
    return FirmTally.from_records(data, taxonomy, config.geo_level)


def decompose_tally(
    tally: FirmTally,
    partition: Partition,
    config: TensorConfig,
    keep=None,
) -> SynergyDecomposition:
    """Decompose a tally over a partition of its regions.

    ``keep(key)`` restricts the firms considered (sector subsets); the
    partition's groups are still all reported.
    """
    group_of = partition.group_of()
    if keep is None:
        grouping = lambda k: group_of[k[0]]
    else:
        grouping = lambda k: group_of[k[0]] if keep(k) else None
    grouped = tally.grouped_cells(grouping, config.nace_digits)
    return decompose_cells(grouped, partition.group_ids, partition.name, config.describe())


def decompose(records, taxonomy: GeoTaxonomy, partition: Partition | str,
              config: TensorConfig | None = None) -> SynergyDecomposition:
    """Decompose the synergy of ``records`` (or a :class:`FirmTally`) over a
    territorial partition. Percentages are not filled in; see
    :func:`percent_contributions`."""
    config = config or TensorConfig()
    if isinstance(partition, str):
        partition = taxonomy.partition(partition)
    return decompose_tally(as_tally(records, taxonomy, config), partition, config)


def decompose_by(
    records,
    by: str,
    taxonomy: GeoTaxonomy,
    config: TensorConfig | None = None,
    partition: Partition | str | None = None,
    sectors: SectorTaxonomy | None = None,
    labels: Sequence[str] | None = None,
) -> SynergyDecomposition:
    """Decompose with groups induced by ``by``.

    * ``"geography"``: regions grouped by ``partition``; same as :func:`decompose`.
    * ``"size"``: one group per size class (``"1"`` .. ``"9"``).
    * ``"sector"``: each firm goes to the first of ``labels`` whose NACE set
      contains it, otherwise to ``"other"``.
    """
    config = config or TensorConfig()
    tally = as_tally(records, taxonomy, config)
    if by == "geography":
        if partition is None:
            raise ConfigError("grouping by geography needs a partition")
        return decompose(tally, taxonomy, partition, config)
    if by == "size":
        grouped = tally.grouped_cells(lambda k: str(k[3]), config.nace_digits)
        return decompose_cells(grouped, None, "size", config.describe())
    if by == "sector":
        if sectors is None:
            raise ConfigError("grouping by sector needs a sector taxonomy")
        labels = list(labels or sectors.labels)
        cache: dict = {}

        def sector_of(key):
            nace = key[2]
            s = cache.get(nace)
            if s is None:
                s = cache[nace] = next((l for l in labels if sectors.contains(l, nace)), "other")
            return s

        grouped = tally.grouped_cells(sector_of, config.nace_digits)
        return decompose_cells(grouped, labels + ["other"], "sector:" + "+".join(labels),
                               config.describe())
    raise ValueError(f"by must be geography, size or sector, got {by!r}")


@dataclass
class DatasetSection:
    name: str
    N: int
    rejected: int
    cardinalities: dict[str, int]
    total_T: float
    decompositions: list[SynergyDecomposition] = field(default_factory=list)
    errors: dict[str, str] = field(default_factory=dict)


@dataclass
class MultiLevelReport:
    config: dict[str, str]
    datasets: list[DatasetSection]

    def get(self, dataset: str, partition: str) -> SynergyDecomposition:
        for ds in self.datasets:
            if ds.name == dataset:
                for d in ds.decompositions:
                    if d.partition == partition:
                        return d
        raise KeyError((dataset, partition))


def multi_level_report(
    datasets: Mapping[str, object],
    partitions: Sequence[Partition | str],
    taxonomy: GeoTaxonomy,
    config: TensorConfig | None = None,
) -> MultiLevelReport:
    """One percentage-normalized decomposition per (dataset, partition) pair.

    ``datasets`` maps names to record sequences or tallies, kept in the given
    order. A pair whose total synergy is zero keeps its unnormalized
    decomposition and is listed in that section's ``errors``; other pairs are
    unaffected.
    """
    config = config or TensorConfig()
    if not datasets:
        raise ConfigError("no datasets given")
    if not partitions:
        raise ConfigError("no partitions requested")
    parts = [taxonomy.partition(p) if isinstance(p, str) else p for p in partitions]
    sections = []
    for name, data in datasets.items():
        tally = as_tally(data, taxonomy, config)
        whole = tally.tensor(config.nace_digits)
        if len(whole) == 0:
            raise EmptyDataset(f"dataset {name!r} has no firms")
        sec = DatasetSection(
            name,
            whole.total,
            tally.report.records_rejected,
            dict(zip(whole.labels, whole.shape)),
            mutual_info_3(whole),
        )
        for p in parts:
            d = decompose_tally(tally, p, config)
            try:
                d = percent_contributions(d)
            except SynergyError as exc:
                sec.errors[p.name] = exc.code
            sec.decompositions.append(d)
        sections.append(sec)
    return MultiLevelReport(config.describe(), sections)
