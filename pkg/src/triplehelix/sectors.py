"""Sector-restricted synergy and rank-order comparison of regional profiles."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from .decomp import SynergyDecomposition, as_tally, decompose_tally, percent_contributions
from .errors import ConstantVector, EmptySubset, LengthMismatch
from .infocore import TensorConfig
from .ingest import FirmRecord
from .taxonomy import GeoTaxonomy, Partition, SectorTaxonomy

__all__ = [
    "SectorReport",
    "RankCorrelation",
    "filter_by_sector",
    "sector_report",
    "spearman_rho",
    "average_ranks",
    "rank_correlation_table",
]


def filter_by_sector(records: Sequence[FirmRecord], sectors: SectorTaxonomy, label: str) -> list[FirmRecord]:
    sectors.require(label)
    cache: dict = {}
    out = []
    for rec in records:
        hit = cache.get(rec.nace_code)
        if hit is None:
            hit = cache[rec.nace_code] = sectors.contains(label, rec.nace_code)
        if hit:
            out.append(rec)
    return out


@dataclass(frozen=True)
class SectorReport:
    label: str
    n_subset: int
    n_total: int
    share_percent: float
    decomposition: SynergyDecomposition
    deltas: Mapping[str, float]


def sector_report(
    records,
    taxonomy: GeoTaxonomy,
    sectors: SectorTaxonomy,
    partition: Partition | str,
    label: str,
    full_decomposition: SynergyDecomposition | None = None,
    config: TensorConfig | None = None,
) -> SectorReport:
    """Decompose the ``label`` subset under the same configuration as the
    full set and report per-group percentage deltas (subset minus full)."""
    config = config or TensorConfig()
    if isinstance(partition, str):
        partition = taxonomy.partition(partition)
    tally = as_tally(records, taxonomy, config)
    if full_decomposition is None:
        full_decomposition = percent_contributions(decompose_tally(tally, partition, config))
    sectors.require(label)
    cache: dict = {}

    def keep(key):
        hit = cache.get(key[2])
        if hit is None:
            hit = cache[key[2]] = sectors.contains(label, key[2])
        return hit

    n_sub = sum(c for k, c in tally.counts.items() if keep(k))
    if n_sub == 0:
        raise EmptySubset(f"no firms in sector {label!r}")
    sub = percent_contributions(decompose_tally(tally, partition, config, keep=keep))
    full = full_decomposition.percents
    deltas = {g.group: g.percent - full[g.group] for g in sub.groups}
    deltas["T0"] = sub.T_0_percent - full_decomposition.T_0_percent
    n_total = full_decomposition.N
    return SectorReport(label, n_sub, n_total, 100.0 * n_sub / n_total, sub, deltas)


@dataclass(frozen=True)
class RankCorrelation:
    n: int
    rho: float
    p_value_approx: float


def average_ranks(x) -> np.ndarray:
    """1-based ranks with ties given their average rank."""
    return stats.rankdata(np.asarray(x, dtype=np.float64), method="average")


def spearman_rho(x, y) -> RankCorrelation:
    """Spearman's rank correlation with average ranks for ties.

    The p-value is two-tailed from ``t = rho * sqrt((n - 2) / (1 - rho**2))``
    with ``n - 2`` degrees of freedom; it is an approximation.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise LengthMismatch(f"vectors of length {x.size} and {y.size}")
    n = x.size
    if n < 3:
        raise LengthMismatch(f"need at least 3 pairs, got {n}")
    a = average_ranks(x)
    b = average_ranks(y)
    # mean rank is (n + 1) / 2 exactly, so centering is exact in binary floating point
    a -= (n + 1) / 2
    b -= (n + 1) / 2
    saa, sbb = math.fsum(a * a), math.fsum(b * b)
    if saa == 0.0 or sbb == 0.0:
        raise ConstantVector("all values tied; rank correlation undefined")
    rho = math.fsum(a * b) / math.sqrt(saa * sbb)
    rho = min(1.0, max(-1.0, rho))
    if abs(rho) == 1.0:
        p = 0.0
    else:
        t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
        p = float(2.0 * stats.t.sf(abs(t), n - 2))
    return RankCorrelation(n, rho, p)


def rank_correlation_table(
    profiles: Mapping[str, Mapping[str, float]],
    groups: Sequence[str] | None = None,
) -> dict[tuple[str, str], RankCorrelation | None]:
    """Pairwise :func:`spearman_rho` between named per-group profiles.

    ``profiles[name][group]`` is e.g. a percentage contribution or a firm
    count. Groups missing from a profile count as 0. Undefined pairs (a
    constant profile) map to ``None``.
    """
    names = list(profiles)
    if groups is None:
        groups = sorted({g for p in profiles.values() for g in p})
    vecs = {k: [profiles[k].get(g, 0.0) for g in groups] for k in names}
    out = {}
    for a in names:
        for b in names:
            try:
                out[a, b] = spearman_rho(vecs[a], vecs[b])
            except ConstantVector:
                out[a, b] = None
    return out
