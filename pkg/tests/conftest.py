from pathlib import Path

import pytest

from triplehelix.ingest import FirmRecord
from triplehelix.synthgen import SynthSpec, generate, synthetic_taxonomy

GOLDEN = Path(__file__).parent / "fixtures" / "golden"


def rec(fid, geo, size, nace):
    return FirmRecord(str(fid), geo, size, nace)


def cells_records(cells, geo_prefix="1"):
    """Records realising a ``{(g, t, o): count}`` table of small integers.

    ``g`` becomes postal code ``f"{geo_prefix}{g}000"``, ``t`` NACE division
    ``10 + t`` and ``o`` size class ``o + 1``.
    """
    out = []
    for (g, t, o), c in sorted(cells.items()):
        for _ in range(c):
            out.append(rec(len(out), f"{geo_prefix}{g}000", o + 1, f"{10 + t}"))
    return out


def synthetic_dataset(seed, n, n_regions, group_counts=(), cardinalities=None, units_per_region=2,
                      mode="independent", strength=0.0):
    tax, pool = synthetic_taxonomy(n_regions, units_per_region, group_counts)
    k_geo = len(pool)
    card = cardinalities or (k_geo, 6, 5)
    spec = SynthSpec(n, card, mode, strength, seed, geo_pool=pool)
    return tax, generate(spec)


@pytest.fixture(scope="session")
def golden():
    return GOLDEN


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
