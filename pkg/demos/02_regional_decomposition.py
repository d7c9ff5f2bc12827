"""How much of a national synergy sits inside regions, and how much between them.

A synthetic population spread over Italian postal codes is decomposed over
three territorial partitions shipped with the package. Each group's synergy
is weighted by its share of firms; what remains of the national value is the
between-group term T0.

The planted generator puts its parity-coupled firms on the first two codes
of each dimension, which here are Rome-area postal codes, so Lazio carries
most of the synergy and smaller regions contribute little. Regions with a
single postal prefix (Valle d'Aosta, Molise) have a constant geography and
therefore no synergy of their own.
"""
from triplehelix import SynthSpec, decompose, default_geo_taxonomy, generate, percent_contributions, to_millibits
from triplehelix.synthgen import ITALY_2015_SIZE_WEIGHTS

tax = default_geo_taxonomy()
firms = generate(SynthSpec(300_000, (93, 60, 9), "planted", 0.4, seed=2015, size_weights=ITALY_2015_SIZE_WEIGHTS))

for name in ("nuts2-20", "north-center-south", "north-south"):
    d = percent_contributions(decompose(firms, tax, name))
    print(f"\n{name}: national T = {to_millibits(d.total_T):.3f} mbit over {d.N} firms")
    print(f"  {'group':<8}{'firms':>8}{'T_G (mbit)':>14}{'% of T':>10}")
    for g in d.groups:
        label = tax.region_names.get(g.group, g.group)
        print(f"  {label[:8]:<8}{g.n:>8}{to_millibits(g.T):>14.3f}{g.percent:>10.2f}")
    print(f"  {'T0':<8}{'':>8}{to_millibits(d.T_0):>14.3f}{d.T_0_percent:>10.2f}")
