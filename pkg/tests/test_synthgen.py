import itertools
from collections import Counter

import numpy as np
import pytest

from triplehelix.errors import EmptyDataset, InvalidSpec
from triplehelix.infocore import ContingencyTensor, build_tensor, information_terms, mutual_info_3
from triplehelix.ingest import parse_firms
from triplehelix.synthgen import (
    ITALY_2015_SIZE_WEIGHTS,
    SynthSpec,
    generate,
    generate_indices,
    oracle_synergy,
    oracle_terms,
    write_csv,
)


def index_tensor(spec):
    g, t, o = generate_indices(spec)
    return ContingencyTensor.from_counts(Counter(zip(g.tolist(), t.tolist(), o.tolist())))


def test_parity_counts_are_exact():
    t = index_tensor(SynthSpec(4000, mode="parity", seed=1))
    assert t.cells() == {(0, 0, 0): 1000, (0, 1, 1): 1000, (1, 0, 1): 1000, (1, 1, 0): 1000}
    assert mutual_info_3(t) == -1.0


def test_parity_remainder_still_satisfies_xor():
    g, t, o = generate_indices(SynthSpec(4003, mode="parity", seed=2))
    assert not (g ^ t ^ o).any()


def test_exact_independent_cells_equal():
    t = index_tensor(SynthSpec(2 * 3 * 4 * 50, (2, 3, 4), exact=True, seed=3))
    assert set(t.cells().values()) == {50} and len(t) == 24
    terms = information_terms(t)
    assert all(abs(terms[k]) < 1e-12 for k in ("T_GT", "T_GO", "T_TO", "T_GTO"))


def test_same_seed_same_records():
    spec = SynthSpec(5000, (20, 30, 9), "planted", 0.3, seed=99)
    assert generate(spec) == generate(spec)
    assert generate(spec) != generate(SynthSpec(5000, (20, 30, 9), "planted", 0.3, seed=100))


def test_size_weights_shift_the_marginal():
    spec = SynthSpec(50000, (3, 3, 9), seed=4, size_weights=ITALY_2015_SIZE_WEIGHTS)
    _, _, o = generate_indices(spec)
    share = np.bincount(o, minlength=9) / 50000
    w = np.asarray(ITALY_2015_SIZE_WEIGHTS) / sum(ITALY_2015_SIZE_WEIGHTS)
    assert np.abs(share - w).max() < 0.01
    assert share[0] > 0.5


def test_pairwise_coupling_raises_mi():
    from triplehelix.infocore import mutual_info_2

    weak = index_tensor(SynthSpec(20000, (4, 4, 3), "pairwise", 0.1, seed=5))
    strong = index_tensor(SynthSpec(20000, (4, 4, 3), "pairwise", 0.9, seed=5))
    assert mutual_info_2(strong) > mutual_info_2(weak) > 0.0


@pytest.mark.parametrize("kwargs", [
    dict(n_records=0),
    dict(n_records=10, mode="bogus"),
    dict(n_records=10, mode="parity", cardinalities=(2, 3, 2)),
    dict(n_records=10, strength=1.5),
    dict(n_records=10, exact=True),
    dict(n_records=10, cardinalities=(2, 2, 10)),
    dict(n_records=10, seed=-1),
    dict(n_records=10, cardinalities=(10**6, 2, 2)),
    dict(n_records=10, size_weights=(1.0,)),
])
def test_invalid_specs(kwargs):
    with pytest.raises(InvalidSpec):
        generate(SynthSpec(**kwargs))


def test_csv_round_trip(tmp_path):
    spec = SynthSpec(3000, (10, 8, 5), "planted", 0.5, seed=6)
    path = tmp_path / "s.csv"
    assert write_csv(spec, path, chunk=700) == 3000
    records, report = parse_firms(path)
    assert report.clean and records == generate(spec)
    other = tmp_path / "t.csv"
    write_csv(spec, other)
    assert path.read_bytes() == other.read_bytes()


def test_planted_strength_is_monotone():
    strengths = (0.0, 0.25, 0.5, 0.75, 1.0)
    for card in ((2, 2, 2), (5, 6, 4)):
        means = []
        for s in strengths:
            vals = [abs(mutual_info_3(index_tensor(SynthSpec(100_000, card, "planted", s, seed))))
                    for seed in range(5)]
            means.append(sum(vals) / 5)
        assert means == sorted(means), (card, means)
        assert means[-1] > 0.99


def test_oracle_reference_values():
    parity = generate(SynthSpec(400, mode="parity", seed=0))
    assert oracle_synergy(parity, "postal")["T_GTO"] == -1.0
    flat = generate(SynthSpec(160, (2, 2, 2), exact=True, seed=0))
    terms = oracle_synergy(flat, "postal")
    assert all(abs(terms[k]) < 1e-15 for k in ("T_GT", "T_GO", "T_TO", "T_GTO"))
    with pytest.raises(EmptyDataset):
        oracle_terms([])


def test_oracle_matches_pipeline_on_random_specs():
    rng = np.random.default_rng(1234)
    for _ in range(25):
        card = tuple(int(k) for k in rng.integers(2, 8, 3))
        mode = ["independent", "pairwise", "planted"][int(rng.integers(3))]
        spec = SynthSpec(int(rng.integers(50, 3000)), card, mode, float(rng.random()), int(rng.integers(2**63)))
        recs = generate(spec)
        ours = information_terms(build_tensor(recs))
        theirs = oracle_synergy(recs, "postal")
        for k in theirs:
            assert abs(ours[k] - theirs[k]) < 1e-12, (spec, k)


def test_index_draws_cover_all_exact_cells():
    g, t, o = generate_indices(SynthSpec(8 * 7, (2, 2, 2), exact=True, seed=8))
    assert sorted(Counter(zip(g.tolist(), t.tolist(), o.tolist())).values()) == [7] * 8
    assert set(zip(g.tolist(), t.tolist(), o.tolist())) == set(itertools.product(range(2), repeat=3))
