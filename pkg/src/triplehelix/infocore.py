"""Contingency tensors and plug-in information measures.

Entropies are computed from integer cell counts at evaluation time as
``-sum(p * log2(p))`` over the nonzero cells of a projection, with ``p``
the relative frequency. Terms are accumulated with :func:`math.fsum`
(correctly rounded), so the result does not depend on summation order and is
identical across runs, thread counts and permutations of the dimensions.

Three-way mutual information follows the signed co-information convention::

    T_xyz = H_x + H_y + H_z - H_xy - H_xz - H_yz + H_xyz

Negative values indicate synergy (redundancy) among the three dimensions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np

from .errors import EmptyDistribution, EmptyTensor, UnresolvableGeo
from .ingest import FirmRecord, normalize_nace

__all__ = [
    "DIMENSIONS",
    "Distribution",
    "ContingencyTensor",
    "GeoLevel",
    "TensorConfig",
    "build_tensor",
    "entropy",
    "entropy_of_counts",
    "mutual_info_2",
    "mutual_info_3",
    "information_terms",
    "to_millibits",
]

DIMENSIONS = ("G", "T", "O")
MI_EPS = 1e-12


def entropy_of_counts(counts) -> float:
    """Shannon entropy in bits of a vector of positive counts."""
    c = np.asarray(counts, dtype=np.float64)
    if c.size == 0:
        raise EmptyDistribution("no categories")
    p = c / c.sum()
    # 0.0 - x normalizes -0.0 for single-cell distributions
    return 0.0 - math.fsum((p * np.log2(p)).tolist())


@dataclass(frozen=True)
class Distribution:
    categories: tuple
    counts: np.ndarray

    def __post_init__(self):
        if len(self.categories) != len(self.counts):
            raise ValueError("categories and counts differ in length")
        if len(self.counts) and np.any(np.asarray(self.counts) <= 0):
            raise ValueError("counts must be positive; drop empty categories")

    @classmethod
    def from_counts(cls, counts: Mapping[Hashable, int]) -> "Distribution":
        items = sorted((k, v) for k, v in counts.items() if v)
        return cls(tuple(k for k, _ in items), np.array([v for _, v in items], dtype=np.int64))

    @classmethod
    def from_probabilities(cls, probs: Sequence[float]) -> "Distribution":
        """Convenience constructor; probabilities are stored as float weights."""
        p = np.asarray(probs, dtype=np.float64)
        keep = p > 0
        return cls(tuple(np.flatnonzero(keep).tolist()), p[keep])

    @property
    def probabilities(self) -> np.ndarray:
        c = np.asarray(self.counts, dtype=np.float64)
        return c / c.sum()


def entropy(d: Distribution) -> float:
    """Entropy of ``d`` in bits."""
    if len(d.counts) == 0:
        raise EmptyDistribution("distribution has no categories")
    return entropy_of_counts(d.counts)


class ContingencyTensor:
    """Sparse integer counts over (geo, technology, organization) cells.

    Cells are stored in COO form: ``coords`` is an ``(n_cells, 3)`` array of
    category indices into ``categories[d]`` (each sorted), ``counts`` holds the
    strictly positive cell counts. Rows are in lexicographic order.
    """

    __slots__ = ("labels", "categories", "coords", "counts", "_cache")

    def __init__(self, categories, coords, counts, labels=DIMENSIONS):
        self.labels = tuple(labels)
        self.categories = tuple(tuple(c) for c in categories)
        self.coords = np.asarray(coords, dtype=np.int64).reshape(-1, len(self.labels))
        self.counts = np.asarray(counts, dtype=np.int64)
        self._cache = {}

    @classmethod
    def from_counts(cls, cells: Mapping[tuple, int], labels=DIMENSIONS) -> "ContingencyTensor":
        ndim = len(labels)
        items = [(k, v) for k, v in cells.items() if v]
        if any(v < 0 for _, v in items):
            raise ValueError("negative cell count")
        cats = [sorted({k[d] for k, _ in items}) for d in range(ndim)]
        index = [{c: i for i, c in enumerate(cs)} for cs in cats]
        coords = np.array(
            [[index[d][k[d]] for d in range(ndim)] for k, _ in items], dtype=np.int64
        ).reshape(-1, ndim)
        counts = np.array([v for _, v in items], dtype=np.int64)
        if len(counts):
            order = np.lexsort(coords.T[::-1])
            coords, counts = coords[order], counts[order]
        return cls(cats, coords, counts, labels)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(len(c) for c in self.categories)

    def __len__(self):
        return len(self.counts)

    def __repr__(self):
        dims = ", ".join(f"{l}={n}" for l, n in zip(self.labels, self.shape))
        return f"<ContingencyTensor {dims} cells={len(self)} N={self.total}>"

    def cells(self) -> dict[tuple, int]:
        """Dense-key view ``{(g, t, o): count}``."""
        cats = self.categories
        return {
            tuple(cats[d][i] for d, i in enumerate(row)): int(c)
            for row, c in zip(self.coords.tolist(), self.counts.tolist())
        }

    def dim_index(self, dim) -> int:
        return self.labels.index(dim) if isinstance(dim, str) else int(dim)

    def marginal_counts(self, dims: Iterable) -> np.ndarray:
        """Positive counts of the projection onto ``dims``, in sorted cell order."""
        axes = tuple(sorted(self.dim_index(d) for d in dims))
        hit = self._cache.get(axes)
        if hit is not None:
            return hit
        if len(self.counts) == 0:
            raise EmptyTensor("tensor has no cells")
        if len(axes) == len(self.labels):
            out = self.counts
        else:
            key = np.zeros(len(self.counts), dtype=np.int64)
            for a in axes:
                key = key * len(self.categories[a]) + self.coords[:, a]
            order = np.argsort(key, kind="stable")
            key = key[order]
            starts = np.flatnonzero(np.r_[True, key[1:] != key[:-1]])
            out = np.add.reduceat(self.counts[order], starts)
        self._cache[axes] = out
        return out

    def distribution(self, dims: Iterable) -> Distribution:
        dims = tuple(sorted(self.dim_index(d) for d in dims))
        m = self.cells()
        agg: dict[tuple, int] = {}
        for k, v in m.items():
            kk = tuple(k[d] for d in dims)
            agg[kk] = agg.get(kk, 0) + v
        return Distribution.from_counts(agg)

    def entropy(self, dims: Iterable) -> float:
        return entropy_of_counts(self.marginal_counts(dims))

    def permuted(self, order: Sequence[int]) -> "ContingencyTensor":
        """Same counts with dimensions reordered (``order`` lists old axes)."""
        cats = [self.categories[a] for a in order]
        labels = [self.labels[a] for a in order]
        coords = self.coords[:, list(order)]
        if len(self.counts):
            idx = np.lexsort(coords.T[::-1])
            return ContingencyTensor(cats, coords[idx], self.counts[idx], labels)
        return ContingencyTensor(cats, coords, self.counts, labels)

    def scaled(self, factor: int) -> "ContingencyTensor":
        return ContingencyTensor(self.categories, self.coords, self.counts * int(factor), self.labels)


def mutual_info_2(t: ContingencyTensor, dims=("G", "T")) -> float:
    """Two-way mutual information ``H_x + H_y - H_xy`` in bits.

    Round-off can push the value a hair below zero; anything above
    ``-1e-12`` is clamped to 0.
    """
    x, y = (t.dim_index(d) for d in dims)
    if len(t) == 0:
        raise EmptyTensor("tensor has no cells")
    v = math.fsum([t.entropy([x]), t.entropy([y]), -t.entropy([x, y])])
    if -MI_EPS < v < 0.0:
        return 0.0
    return v


def mutual_info_3(t: ContingencyTensor) -> float:
    """Signed three-way mutual information in bits (never clamped)."""
    if len(t) == 0:
        raise EmptyTensor("tensor has no cells")
    h1 = [t.entropy([d]) for d in range(3)]
    h2 = [t.entropy(p) for p in combinations(range(3), 2)]
    h3 = t.entropy(range(3))
    return 0.0 + math.fsum(h1 + [-h for h in h2] + [h3])


def information_terms(t: ContingencyTensor) -> dict[str, float]:
    """All seven entropies plus the pairwise and three-way mutual information.

    Keys: ``H_G, H_T, H_O, H_GT, H_GO, H_TO, H_GTO, T_GT, T_GO, T_TO, T_GTO``.
    """
    lab = t.labels
    out = {}
    for r in (1, 2, 3):
        for dims in combinations(range(3), r):
            out["H_" + "".join(lab[d] for d in dims)] = t.entropy(dims)
    for a, b in combinations(range(3), 2):
        out[f"T_{lab[a]}{lab[b]}"] = mutual_info_2(t, (a, b))
    out["T_" + "".join(lab)] = mutual_info_3(t)
    return out


def to_millibits(bits: float) -> float:
    return bits * 1000.0


@dataclass(frozen=True)
class GeoLevel:
    """Granularity of the geographic dimension.

    ``kind`` is ``"postal"`` (full code), ``"prefix"`` (first ``k``
    characters) or ``"region"`` (resolved through the taxonomy).
    """

    kind: str = "prefix"
    k: int = 2

    @classmethod
    def parse(cls, text: str) -> "GeoLevel":
        text = text.strip()
        if text in ("postal", "region"):
            return cls(text, 0)
        if text.startswith("prefix:"):
            k = int(text.split(":", 1)[1])
            if k < 1:
                raise ValueError("prefix length must be >= 1")
            return cls("prefix", k)
        raise ValueError(f"geo level must be postal, prefix:<k> or region, got {text!r}")

    def __str__(self):
        return f"prefix:{self.k}" if self.kind == "prefix" else self.kind

    def category(self, geo_code: str, region: str | None = None) -> str:
        if self.kind == "postal":
            return geo_code
        if self.kind == "prefix":
            return geo_code[: self.k]
        if region is None:
            raise ValueError("region granularity needs a resolved region")
        return region


@dataclass(frozen=True)
class TensorConfig:
    geo_level: GeoLevel = GeoLevel()
    nace_digits: int | str = 2

    @classmethod
    def make(cls, geo_level="prefix:2", nace_digits=2) -> "TensorConfig":
        if isinstance(geo_level, str):
            geo_level = GeoLevel.parse(geo_level)
        if nace_digits != "full":
            nace_digits = int(nace_digits)
            if nace_digits not in (2, 3, 4):
                raise ValueError("nace_digits must be 2, 3, 4 or 'full'")
        return cls(geo_level, nace_digits)

    def describe(self) -> dict[str, str]:
        return {"geo_level": str(self.geo_level), "nace_digits": str(self.nace_digits)}


def build_tensor(
    records: Iterable[FirmRecord],
    geo_mapper: Callable[[str], Hashable] | None = None,
    nace_digits: int | str = 2,
) -> ContingencyTensor:
    """Tally records into a (geo, NACE, size) tensor.

    ``geo_mapper`` turns a record's geo code into its category (default:
    identity). A mapper raising :class:`UnresolvableGeo` is re-raised with
    the offending firm id attached.
    """
    geo_mapper = geo_mapper or (lambda g: g)
    cells: dict[tuple, int] = {}
    nace_cache: dict[str, str] = {}
    for rec in records:
        try:
            g = geo_mapper(rec.geo_code)
        except UnresolvableGeo as exc:
            raise UnresolvableGeo(f"firm {rec.firm_id!r}: {exc}") from exc
        t = nace_cache.get(rec.nace_code)
        if t is None:
            t = nace_cache[rec.nace_code] = normalize_nace(rec.nace_code, nace_digits)
        key = (g, t, rec.size_class)
        cells[key] = cells.get(key, 0) + 1
    return ContingencyTensor.from_counts(cells)
