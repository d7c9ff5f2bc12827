import math
import random

import pytest

from triplehelix.decomp import (
    decompose,
    decompose_by,
    decompose_cells,
    multi_level_report,
    percent_contributions,
)
from triplehelix.errors import ConfigError, DegenerateTotal, EmptyDataset, UnresolvableGeo
from triplehelix.infocore import TensorConfig
from triplehelix.synthgen import oracle_decomposition, oracle_synergy, synthetic_taxonomy
from triplehelix.taxonomy import Partition, default_geo_taxonomy, default_sector_taxonomy

from conftest import rec, synthetic_dataset

POSTAL = TensorConfig.make("postal")


def test_single_group_has_zero_residual():
    tax, recs = synthetic_dataset(1, 3000, 6, mode="planted", strength=0.6)
    d = percent_contributions(decompose(recs, tax, "single", POSTAL))
    (g,) = d.groups
    assert g.weighted == d.total_T
    assert d.T_0 == 0.0
    assert g.percent == 100.0 and d.T_0_percent == 0.0


def test_singleton_groups_carry_nothing():
    tax, pool = synthetic_taxonomy(12)
    recs = [rec(i, pool[i], 1 + i % 3, ["10", "20", "26"][i % 2]) for i in range(12)]
    d = decompose(recs, tax, "regions", POSTAL)
    assert all(g.n == 1 and g.T == 0.0 for g in d.groups)
    assert d.T_0 == d.total_T


def test_identity_against_oracle_small():
    rng = random.Random(2)
    tax, pool = synthetic_taxonomy(4, 3, group_counts=(2,))
    recs = [rec(i, rng.choice(pool), rng.randint(1, 4), rng.choice(["10", "20", "26", "62"]))
            for i in range(200)]
    d = decompose(recs, tax, "groups-2", POSTAL)
    o = oracle_decomposition(recs, tax, tax.partition("groups-2"), "postal")
    assert abs(d.total_T - o["total"]) < 1e-12
    for g, (gid, n, T, w, _) in zip(d.groups, o["groups"]):
        assert (g.group, g.n) == (gid, n)
        assert abs(g.T - T) < 1e-12
    lhs = o["total"] - o["T0"] - math.fsum(w for *_, w, _ in o["groups"])
    assert abs(lhs) < 1e-9
    assert abs(d.total_T - d.T_0 - d.within_sum) < 1e-9


def test_signed_percentages():
    # group A is strongly synergetic, group B carries positive T
    a = {(0, 0, 0): 5, (0, 1, 1): 5, (1, 0, 1): 5, (1, 1, 0): 5}
    b = {(0, 0, 0): 9, (1, 1, 1): 9, (0, 1, 1): 1, (1, 0, 0): 1, (0, 0, 1): 1}
    grouped = {"A": a, "B": {(g + 2, t, o): c for (g, t, o), c in b.items()}}
    d = percent_contributions(decompose_cells(grouped))
    A, B = d.group("A"), d.group("B")
    assert A.T < 0 < B.T
    assert (A.percent > 0) == (d.total_T < 0) and (B.percent < 0) == (d.total_T < 0)
    assert abs(math.fsum(d.percents.values()) + d.T_0_percent - 100) < 1e-9


def test_equal_groups_get_equal_percentages():
    cells = {(0, 0, 0): 3, (0, 1, 1): 2, (1, 0, 1): 4, (1, 1, 0): 1, (1, 1, 1): 2}
    grouped = {"A": cells, "B": {(g + 2, t, o): c for (g, t, o), c in cells.items()}}
    d = percent_contributions(decompose_cells(grouped))
    assert d.group("A").percent == d.group("B").percent


def test_degenerate_total():
    cells = {(g, t, o): 2 for g in range(2) for t in range(2) for o in range(2)}
    d = decompose_cells({"ALL": cells})
    assert d.total_T == 0.0
    with pytest.raises(DegenerateTotal):
        percent_contributions(d)
    with pytest.raises(ZeroDivisionError):
        percent_contributions(d)


def test_empty_groups_reported_and_removable():
    tax, pool = synthetic_taxonomy(4)
    rng = random.Random(12)
    recs = [rec(i, pool[i % 2], rng.randint(1, 4), rng.choice(["10", "20", "26"])) for i in range(60)]
    full = percent_contributions(decompose(recs, tax, "regions", POSTAL))
    assert [g.n for g in full.groups] == [30, 30, 0, 0]
    assert full.group("R03").T == 0.0
    merged = Partition("trimmed", {"R00": frozenset({"R00"}), "R01": frozenset({"R01", "R02", "R03"})})
    trimmed = percent_contributions(decompose(recs, tax.with_partition(merged), "trimmed", POSTAL))
    for g in trimmed.groups:
        ref = full.group(g.group)
        assert (g.n, g.T, g.weighted, g.percent) == (ref.n, ref.T, ref.weighted, ref.percent)
    assert (trimmed.T_0, trimmed.T_0_percent) == (full.T_0, full.T_0_percent)


def test_total_is_partition_independent():
    tax, recs = synthetic_dataset(4, 5000, 10, group_counts=(2, 3, 5), mode="planted", strength=0.3)
    totals = {decompose(recs, tax, p, POSTAL).total_T for p in tax.partitions}
    assert len(totals) == 1
    assert abs(totals.pop() - oracle_synergy(recs, "postal")["T_GTO"]) < 1e-12


def test_n_sum_and_ordering():
    tax, recs = synthetic_dataset(5, 2000, 7, group_counts=(3,))
    d = decompose(recs, tax, "groups-3", POSTAL)
    assert sum(g.n for g in d.groups) == d.N == 2000
    assert [g.group for g in d.groups] == sorted(g.group for g in d.groups)


def test_errors():
    tax, pool = synthetic_taxonomy(2)
    with pytest.raises(UnresolvableGeo):
        decompose([rec(1, "99999", 1, "10")], tax, "single", POSTAL)
    with pytest.raises(EmptyDataset):
        decompose([], tax, "single", POSTAL)
    with pytest.raises(ConfigError):
        decompose_cells({"X": {(0, 0, 0): 1}}, ["Y"])


def test_decompose_by_size_single_class():
    tax, pool = synthetic_taxonomy(3)
    rng = random.Random(8)
    recs = [rec(i, rng.choice(pool), 4, rng.choice(["10", "20"])) for i in range(100)]
    d = decompose_by(recs, "size", tax, POSTAL)
    assert [g.group for g in d.groups] == ["4"]
    assert d.T_0 == 0.0


def test_decompose_by_sector_identity_with_oracle():
    rng = random.Random(9)
    tax = default_geo_taxonomy()
    caps = ["20121", "00185", "10100", "80100", "50123"]
    nace = ["26.11", "28", "62.01", "72.1", "10.5", "47.1", "21"]
    recs = [rec(i, rng.choice(caps), rng.randint(1, 5), rng.choice(nace)) for i in range(800)]
    sectors = default_sector_taxonomy()
    d = decompose_by(recs, "sector", tax, TensorConfig(), sectors=sectors, labels=["MHTM", "KIS"])
    assert [g.group for g in d.groups] == ["KIS", "MHTM", "other"]
    total = oracle_synergy(recs)["T_GTO"]
    weighted = []
    for g in d.groups:
        members = [r for r in recs if
                   (g.group == "other" and not any(sectors.contains(l, r.nace_code) for l in ("MHTM", "KIS")))
                   or (g.group != "other" and sectors.contains(g.group, r.nace_code)
                       and (g.group == "MHTM" or not sectors.contains("MHTM", r.nace_code)))]
        assert len(members) == g.n
        weighted.append(len(members) / len(recs) * oracle_synergy(members)["T_GTO"])
    assert abs(d.total_T - total) < 1e-12
    assert abs(d.T_0 - (total - math.fsum(weighted))) < 1e-9


def test_decompose_by_geography_matches_decompose():
    tax, recs = synthetic_dataset(6, 1500, 5, group_counts=(2,))
    a = decompose_by(recs, "geography", tax, POSTAL, partition="groups-2")
    b = decompose(recs, tax, "groups-2", POSTAL)
    assert a == b


def test_multi_level_report_structure():
    tax, recs = synthetic_dataset(7, 3000, 6, group_counts=(2,), mode="planted", strength=0.4)
    _, recs2 = synthetic_dataset(8, 2000, 6, group_counts=(2,), mode="planted", strength=0.4)
    _, recs3 = synthetic_dataset(9, 1000, 6, group_counts=(2,), mode="planted", strength=0.4)
    rep = multi_level_report({"2008": recs, "2011": recs2, "2015": recs3}, ["regions", "groups-2"], tax, POSTAL)
    assert [s.name for s in rep.datasets] == ["2008", "2011", "2015"]
    sec = rep.datasets[0]
    assert [d.partition for d in sec.decompositions] == ["regions", "groups-2"]
    assert rep.get("2008", "regions").total_T == rep.get("2008", "groups-2").total_T == sec.total_T
    assert sec.N == 3000 and sec.errors == {}
    with pytest.raises(ConfigError):
        multi_level_report({"a": recs}, [], tax, POSTAL)
    with pytest.raises(ConfigError):
        multi_level_report({}, ["regions"], tax, POSTAL)


def test_multi_level_report_isolates_degenerate_pairs():
    tax, recs = synthetic_dataset(3, 500, 2, mode="planted", strength=0.5)
    _, pool = synthetic_taxonomy(2, 2)
    indep = [rec(i, pool[2 * g], o + 1, f"{10 + t}")
             for i, (g, t, o) in enumerate((g, t, o) for g in range(2) for t in range(2) for o in range(2))]
    rep = multi_level_report({"flat": indep, "ok": recs}, ["single", "regions"], tax, POSTAL)
    assert rep.datasets[0].errors == {"single": "DegenerateTotal", "regions": "DegenerateTotal"}
    assert rep.datasets[1].errors == {}
    assert rep.get("ok", "regions").T_0_percent is not None
