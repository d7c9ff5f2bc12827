"""Synthetic firm populations and a from-definition reference oracle.

Random streams come from NumPy's PCG64 bit generator,
``numpy.random.Generator(numpy.random.PCG64(seed))``, consumed in a fixed
order (documented in :func:`generate_indices`), so a seed pins the exact
record sequence.

The oracle functions at the bottom deliberately share nothing with
:mod:`triplehelix.infocore`: they tally with plain dicts and evaluate every
``-p log2 p`` term in 40-digit arithmetic via :mod:`mpmath`.
"""
from __future__ import annotations

import os
from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyDataset, InvalidSpec
from .ingest import FirmRecord
from .taxonomy import GeoTaxonomy, Partition

__all__ = [
    "MODES",
    "ITALY_2015_SIZE_WEIGHTS",
    "DEFAULT_NACE_POOL",
    "SynthSpec",
    "default_geo_pool",
    "synthetic_taxonomy",
    "generate_indices",
    "generate",
    "write_csv",
    "oracle_terms",
    "oracle_synergy",
    "oracle_decomposition",
]

MODES = ("independent", "pairwise", "parity", "planted")

# firm counts per size class 1..9, Italy 2015 (Istat ASIA)
ITALY_2015_SIZE_WEIGHTS = (3473928, 493365, 201497, 99554, 45476, 13275, 6223, 3225, 1542)

# NACE Rev. 2 divisions outside agriculture, forestry and fishing
DEFAULT_NACE_POOL = tuple(
    f"{d:02d}"
    for d in [5, 6, 7, 8, 9, *range(10, 34), 35, 36, 37, 38, 39, 41, 42, 43, 45, 46, 47,
              49, 50, 51, 52, 53, 55, 56, *range(58, 67), 68, *range(69, 76), *range(77, 83),
              84, 85, 86, 87, 88, 90, 91, 92, 93, 94, 95, 96, 97, 98, 99]
)


@lru_cache(maxsize=1)
def default_geo_pool() -> tuple[str, ...]:
    """Five-digit postal codes, one per CAP prefix of the default Italy taxonomy."""
    from .taxonomy import default_geo_taxonomy

    return tuple(p + "100" for p in sorted(default_geo_taxonomy().prefix_map))


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of a synthetic population.

    ``cardinalities`` gives the number of geo, NACE and size categories.
    ``geo_pool`` / ``nace_pool`` supply the codes category ``i`` maps to
    (defaults: Italian postal codes, NACE divisions); size category ``i`` is
    size class ``i + 1``.

    Modes:

    * ``independent``: the three dimensions drawn independently and
      uniformly (size optionally by ``size_weights``). With ``exact`` and
      ``n_records`` divisible by the number of cells, every cell gets exactly
      the same count.
    * ``pairwise``: NACE copies geo (``t = g mod k_T``) with probability
      ``strength``; size independent.
    * ``parity``: binary dimensions with ``g xor t xor o = 0``, the four
      admissible triples in equal proportion.
    * ``planted``: each firm comes from the parity population (on category
      values 0/1) with probability ``strength``, else from the independent
      uniform one.
    """

    n_records: int
    cardinalities: tuple[int, int, int] = (2, 2, 2)
    mode: str = "independent"
    strength: float = 0.0
    seed: int = 0
    exact: bool = False
    size_weights: tuple[float, ...] | None = None
    geo_pool: tuple[str, ...] | None = None
    nace_pool: tuple[str, ...] | None = None

    def validate(self) -> None:
        if self.mode not in MODES:
            raise InvalidSpec(f"mode must be one of {MODES}, got {self.mode!r}")
        if not isinstance(self.n_records, (int, np.integer)) or self.n_records < 1:
            raise InvalidSpec(f"n_records must be a positive integer, got {self.n_records!r}")
        if not 0 <= self.seed < 2**64:
            raise InvalidSpec("seed must be a 64-bit unsigned integer")
        ks = tuple(self.cardinalities)
        if len(ks) != 3 or any(int(k) < 1 for k in ks):
            raise InvalidSpec(f"need three positive cardinalities, got {ks}")
        if self.mode == "parity" and ks != (2, 2, 2):
            raise InvalidSpec("parity mode needs cardinalities (2, 2, 2)")
        if self.mode in ("planted", "pairwise") and min(ks) < 2:
            raise InvalidSpec(f"{self.mode} mode needs cardinalities >= 2")
        if not 0.0 <= self.strength <= 1.0:
            raise InvalidSpec(f"strength must lie in [0, 1], got {self.strength}")
        if self.exact and (self.mode != "independent" or self.n_records % int(np.prod(ks))):
            raise InvalidSpec("exact construction needs independent mode and n divisible by the cell count")
        if self.size_weights is not None and len(self.size_weights) != ks[2]:
            raise InvalidSpec("size_weights must have one weight per size category")
        if ks[2] > 9:
            raise InvalidSpec("at most 9 size classes")
        geo = self.geo_pool if self.geo_pool is not None else default_geo_pool()
        nace = self.nace_pool if self.nace_pool is not None else DEFAULT_NACE_POOL
        if ks[0] > len(geo) or ks[1] > len(nace):
            raise InvalidSpec(f"cardinalities {ks} exceed code pools ({len(geo)}, {len(nace)})")


def synthetic_taxonomy(n_regions: int, units_per_region: int = 1,
                       group_counts: Sequence[int] = ()) -> tuple[GeoTaxonomy, tuple[str, ...]]:
    """A tiny taxonomy plus a matching geo pool.

    Unit ``u`` has postal prefix ``f"{u + 100}"`` and code ``prefix + "00"``;
    region ``r`` holds units ``r * units_per_region ...``. For each ``k`` in
    ``group_counts`` a partition ``groups-k`` assigns region ``r`` to group
    ``r mod k``; ``single`` (one group) and ``regions`` (one group per region)
    are always present.
    """
    prefix_map, unit_to_region, names = {}, {}, {}
    pool = []
    for r in range(n_regions):
        rid = f"R{r:02d}"
        names[rid] = f"Region {r}"
        for j in range(units_per_region):
            u = r * units_per_region + j
            prefix = f"{u + 100}"
            prefix_map[prefix] = f"U{u:03d}"
            unit_to_region[f"U{u:03d}"] = rid
            pool.append(prefix + "00")
    regions = sorted(names)
    parts = {
        "single": Partition("single", {"ALL": frozenset(regions)}),
        "regions": Partition("regions", {r: frozenset([r]) for r in regions}),
    }
    for k in group_counts:
        groups = {f"G{g:02d}": frozenset(r for i, r in enumerate(regions) if i % k == g) for g in range(k)}
        parts[f"groups-{k}"] = Partition(f"groups-{k}", {g: m for g, m in groups.items() if m})
    return GeoTaxonomy(prefix_map, unit_to_region, names, parts), tuple(pool)


def generate_indices(spec: SynthSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Category indices ``(g, t, o)`` for every synthetic firm.

    Draw order per mode (all from one PCG64 generator):

    * independent exact: ``permutation`` of the repeated cell index.
    * independent: ``integers(0, k_G, n)``, ``integers(0, k_T, n)``, then
      ``integers(0, k_O, n)`` or ``choice(k_O, n, p=weights)``.
    * pairwise: g, t, o as independent, then ``random(n)`` to pick copied t.
    * parity: ``permutation`` of ``n // 4`` copies of each triple, then
      ``integers(0, 4, n % 4)`` for the remainder.
    * planted: ``random(n)`` selects parity rows; the parity part uses
      ``integers(0, 2, m)`` twice, the rest is drawn as independent.
    """
    spec.validate()
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    n = int(spec.n_records)
    kg, kt, ko = (int(k) for k in spec.cardinalities)

    def independent(m):
        g = rng.integers(0, kg, m)
        t = rng.integers(0, kt, m)
        if spec.size_weights is None:
            o = rng.integers(0, ko, m)
        else:
            w = np.asarray(spec.size_weights, dtype=np.float64)
            o = rng.choice(ko, m, p=w / w.sum())
        return g, t, o

    if spec.mode == "independent":
        if spec.exact:
            cell = rng.permutation(np.repeat(np.arange(kg * kt * ko), n // (kg * kt * ko)))
            g, rest = np.divmod(cell, kt * ko)
            t, o = np.divmod(rest, ko)
            return g, t, o
        return independent(n)
    if spec.mode == "pairwise":
        g, t, o = independent(n)
        copy = rng.random(n) < spec.strength
        t = np.where(copy, g % kt, t)
        return g, t, o
    if spec.mode == "parity":
        triples = np.array([[0, 0, 0], [0, 1, 1], [1, 0, 1], [1, 1, 0]])
        idx = np.concatenate([rng.permutation(np.repeat(np.arange(4), n // 4)),
                              rng.integers(0, 4, n % 4)])
        sel = triples[idx]
        return sel[:, 0], sel[:, 1], sel[:, 2]
    # planted
    is_parity = rng.random(n) < spec.strength
    m = int(is_parity.sum())
    pg = rng.integers(0, 2, m)
    pt = rng.integers(0, 2, m)
    ig, it, io_ = independent(n - m)
    g = np.empty(n, dtype=np.int64)
    t = np.empty(n, dtype=np.int64)
    o = np.empty(n, dtype=np.int64)
    g[is_parity], t[is_parity], o[is_parity] = pg, pt, pg ^ pt
    g[~is_parity], t[~is_parity], o[~is_parity] = ig, it, io_
    return g, t, o


def _pools(spec):
    geo = spec.geo_pool if spec.geo_pool is not None else default_geo_pool()
    nace = spec.nace_pool if spec.nace_pool is not None else DEFAULT_NACE_POOL
    return geo, nace


def generate(spec: SynthSpec) -> list[FirmRecord]:
    g, t, o = generate_indices(spec)
    geo, nace = _pools(spec)
    return [
        FirmRecord(f"S{i:09d}", geo[a], c + 1, nace[b])
        for i, (a, b, c) in enumerate(zip(g.tolist(), t.tolist(), o.tolist()))
    ]


def write_csv(spec: SynthSpec, path, chunk: int = 200_000) -> int:
    """Write the population as ``id,cap,size,nace`` CSV; returns the row count.

    Rows are produced in chunks so memory stays bounded for census-size
    populations.
    """
    g, t, o = generate_indices(spec)
    geo, nace = _pools(spec)
    with open(os.fspath(path), "w", encoding="utf-8", newline="") as fh:
        fh.write("id,cap,size,nace\n")
        for s in range(0, len(g), chunk):
            gs, ts, os_ = g[s:s + chunk].tolist(), t[s:s + chunk].tolist(), o[s:s + chunk].tolist()
            fh.write("".join(
                f"S{s + i:09d},{geo[a]},{c + 1},{nace[b]}\n" for i, (a, b, c) in enumerate(zip(gs, ts, os_))
            ))
    return len(g)


# --------------------------------------------------------------------------
# reference oracle


def _oracle_categories(records: Iterable[FirmRecord], geo_level: str, nace_digits, taxonomy):
    rows = []
    for r in records:
        if geo_level == "postal":
            g = r.geo_code
        elif geo_level.startswith("prefix:"):
            g = r.geo_code[: int(geo_level[7:])]
        elif geo_level == "region":
            best = None
            for prefix, unit in taxonomy.prefix_map.items():
                if r.geo_code.startswith(prefix) and (best is None or len(prefix) > len(best[0])):
                    best = (prefix, unit)
            if best is None:
                raise KeyError(r.geo_code)
            g = taxonomy.unit_to_region[best[1]]
        else:
            raise ValueError(geo_level)
        code = r.nace_code
        width = {"2": 2, "3": 4, "4": 5, "full": len(code)}[str(nace_digits)]
        rows.append((g, code[:width], r.size_class))
    return rows


ORACLE_DPS = 40


def _H(counter, total):
    import mpmath

    h = mpmath.mpf(0)
    for key in sorted(counter):
        p = mpmath.mpf(counter[key]) / total
        h -= p * mpmath.log(p, 2)
    return h


def oracle_terms(rows: Sequence[tuple]) -> dict:
    """Seven entropies, three pairwise and the three-way mutual information
    of ``(g, t, o)`` category rows, as mpmath numbers."""
    import mpmath

    N = len(rows)
    if N == 0:
        raise EmptyDataset("oracle needs at least one record")
    names = {(0,): "G", (1,): "T", (2,): "O", (0, 1): "GT", (0, 2): "GO", (1, 2): "TO", (0, 1, 2): "GTO"}
    with mpmath.workdps(ORACLE_DPS):
        H = {}
        for dims, name in names.items():
            tally = Counter(tuple(row[d] for d in dims) for row in rows)
            H[name] = _H(tally, N)
        out = {f"H_{k}": v for k, v in H.items()}
        out["T_GT"] = H["G"] + H["T"] - H["GT"]
        out["T_GO"] = H["G"] + H["O"] - H["GO"]
        out["T_TO"] = H["T"] + H["O"] - H["TO"]
        out["T_GTO"] = H["G"] + H["T"] + H["O"] - H["GT"] - H["GO"] - H["TO"] + H["GTO"]
    return out


def oracle_synergy(records: Sequence[FirmRecord], geo_level: str = "prefix:2", nace_digits=2,
                   taxonomy: GeoTaxonomy | None = None) -> dict[str, float]:
    """Every information term of ``records``, computed the literal way."""
    rows = _oracle_categories(records, geo_level, nace_digits, taxonomy)
    return {k: float(v) for k, v in oracle_terms(rows).items()}


def oracle_decomposition(records: Sequence[FirmRecord], taxonomy: GeoTaxonomy, partition: Partition,
                         geo_level: str = "prefix:2", nace_digits=2) -> dict:
    """Group terms, residual and percentages in high precision.

    Returns ``{"N", "total", "groups": [(gid, n, T, weighted, percent)],
    "T0", "T0_percent"}`` with floats; percentages are ``None`` when the
    total is zero.
    """
    import mpmath

    with mpmath.workdps(ORACLE_DPS):
        return _oracle_decomposition(list(records), taxonomy, partition, geo_level, nace_digits)


def _oracle_decomposition(records, taxonomy, partition, geo_level, nace_digits):
    import mpmath

    region_of = []
    for r in records:
        best = max((p for p in taxonomy.prefix_map if r.geo_code.startswith(p)), key=len)
        region_of.append(taxonomy.unit_to_region[taxonomy.prefix_map[best]])
    group_of = {reg: gid for gid, regs in partition.groups.items() for reg in regs}
    rows = _oracle_categories(records, geo_level, nace_digits, taxonomy)
    N = len(rows)
    total = oracle_terms(rows)["T_GTO"]
    groups = []
    wsum = mpmath.mpf(0)
    for gid in sorted(partition.groups):
        sub = [row for reg, row in zip(region_of, rows) if group_of[reg] == gid]
        T = oracle_terms(sub)["T_GTO"] if sub else mpmath.mpf(0)
        w = mpmath.mpf(len(sub)) / N * T
        wsum += w
        groups.append([gid, len(sub), T, w])
    T0 = total - wsum
    pct = (lambda x: float(100 * x / total)) if total != 0 else (lambda x: None)
    return {
        "N": N,
        "total": float(total),
        "groups": [(g, n, float(T), float(w), pct(w)) for g, n, T, w in groups],
        "T0": float(T0),
        "T0_percent": pct(T0),
    }
