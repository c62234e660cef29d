import random
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from algodist.distribution import (
    SampleSpec, TupleDistribution, aggregate, all_tuples, estimate_K, estimate_m,
    extract_tuples, load_distribution, machine_experiment, machine_experiments, merge, rank,
    save_distribution, uniform_distribution,
)
from algodist.errors import EmptyDistributionError, FormatError
from algodist.machines import complement

ILLUSTRATION = ["01010", "11111", "11111", "01"]
bitstrings = st.text(alphabet="01", max_size=40)


def test_extract_tuples():
    assert Counter(extract_tuples("01010", 3)) == Counter({"010": 2, "101": 1})
    assert extract_tuples("01", 3) == []
    assert len(extract_tuples("0110101", 1)) == 7


@given(bitstrings, st.integers(1, 6))
def test_aggregate_matches_extract(s, k):
    d = aggregate([s], k)
    assert d.as_dict() == dict(Counter(extract_tuples(s, k)))


def test_aggregate_illustration():
    d = aggregate(ILLUSTRATION, 3)
    assert d.as_dict() == {"111": 6, "010": 2, "101": 1}
    assert d.total == 9


def test_aggregate_empty():
    assert aggregate([], 4).total == 0


@settings(max_examples=50)
@given(st.lists(bitstrings, max_size=12), st.integers(1, 5), st.randoms())
def test_aggregate_split_merge(streams, k, rnd):
    cut = rnd.randint(0, len(streams))
    whole = aggregate(streams, k)
    parts = merge([aggregate(streams[:cut], k), aggregate(streams[cut:], k)])
    assert whole == parts
    assert merge([aggregate(streams[cut:], k), aggregate(streams[:cut], k)]) == whole


def test_rank_illustration():
    r = rank(aggregate(ILLUSTRATION, 3))
    assert list(r) == [("111", Fraction(2, 3)), ("010", Fraction(2, 9)), ("101", Fraction(1, 9))]


def test_rank_ties_lexicographic():
    r = rank(TupleDistribution.from_counts({"11": 1, "00": 1}))
    assert list(r) == [("00", Fraction(1, 2)), ("11", Fraction(1, 2))]


def test_rank_empty():
    with pytest.raises(EmptyDistributionError):
        rank(aggregate([], 3))


@given(st.dictionaries(st.sampled_from(all_tuples(3)), st.integers(1, 50), min_size=1), st.integers(1, 9))
def test_rank_scale_invariant(counts, c):
    a = rank(TupleDistribution.from_counts(counts, 3))
    b = rank(TupleDistribution.from_counts({s: v * c for s, v in counts.items()}, 3))
    assert a == b
    probs = [p for _, p in a]
    assert probs == sorted(probs, reverse=True)
    for (s1, p1), (s2, p2) in zip(a, list(a)[1:]):
        if p1 == p2:
            assert s1 < s2


def test_uniform():
    u = uniform_distribution(4)
    assert len(u) == 16 and all(p == Fraction(1, 16) for _, p in rank(u))
    assert rank(u).tuples() == all_tuples(4)
    assert {s: estimate_m(uniform_distribution(1), s) for s in "01"} == {"0": Fraction(1, 2), "1": Fraction(1, 2)}


def test_estimates():
    d = aggregate(ILLUSTRATION, 3)
    assert estimate_m(d, "111") == Fraction(2, 3)
    assert estimate_m(d, "000") is None
    assert estimate_K(d, "000") is None
    assert sum(estimate_m(d, s) for s in d.as_dict()) == 1
    half = TupleDistribution.from_counts({"0": 1, "1": 1})
    assert estimate_K(half, "0") == 1.0
    quarter = TupleDistribution.from_counts({"00": 1, "01": 3})
    assert estimate_K(quarter, "00") == 2.0
    with pytest.raises(EmptyDistributionError):
        estimate_m(aggregate([], 3), "000")


@given(st.dictionaries(st.sampled_from(all_tuples(4)), st.integers(1, 100), min_size=2))
def test_K_reverses_rank(counts):
    d = TupleDistribution.from_counts(counts, 4)
    ks = [estimate_K(d, s) for s, _ in rank(d)]
    assert ks == sorted(ks)


def test_machine_experiment_structure():
    d = machine_experiment(SampleSpec("TM", sample_size=2000, seed=5), 4)
    assert d.total > 0 and d.k == 4
    assert d.metadata["source"]["seed"] == 5


def test_seeded_replay():
    spec = SampleSpec("TS", sample_size=500, seed=42)
    assert machine_experiment(spec, 5) == machine_experiment(spec, 5)
    assert np.array_equal(spec.indices(), spec.indices())
    other = SampleSpec("TS", sample_size=500, seed=43)
    assert not np.array_equal(spec.indices(), other.indices())


def test_sample_without_replacement():
    idx = SampleSpec("CA", sample_size=2000, seed=0).indices()
    assert len(set(idx.tolist())) == 2000 and idx.max() < 65536


def test_sample_size_guard():
    with pytest.raises(ValueError):
        SampleSpec("TS", sample_size=50626)


def test_multi_k_matches_single_k():
    spec = SampleSpec("CA", sample_size=300, seed=9)
    multi = machine_experiments(spec, [4, 6])
    assert multi[6] == machine_experiment(spec, 6)


def _assert_complement_symmetric(d):
    dense = d.dense()
    for code in range(1 << d.k):
        assert dense[code] == dense[(1 << d.k) - 1 - code]


def _assert_reversal_symmetric(d):
    counts = d.as_dict()
    for s, c in counts.items():
        assert counts.get(s[::-1], 0) == c


def test_tm2_exhaustive_symmetries():
    for k in (4, 5):
        d = machine_experiment(SampleSpec("TM", mode="exhaustive", n_states=2), k)
        _assert_complement_symmetric(d)
        _assert_reversal_symmetric(d)


def test_tag_exhaustive_complement_symmetry():
    d = machine_experiment(SampleSpec("TS", mode="exhaustive", steps=30), 4)
    _assert_complement_symmetric(d)


def test_ca_exhaustive_complement_symmetry():
    d = machine_experiment(SampleSpec("CA", mode="exhaustive", steps=20), 5)
    _assert_complement_symmetric(d)


def test_serialization_roundtrip(tmp_path):
    d = machine_experiment(SampleSpec("TS", sample_size=100, seed=1), 6)
    env = save_distribution(d, tmp_path / "ts.k6")
    back = load_distribution(env)
    assert back == d and back.metadata == d.metadata
    assert load_distribution(tmp_path / "ts.k6.csv") == d
    first = (tmp_path / "ts.k6.csv").read_bytes()
    save_distribution(back, tmp_path / "ts.k6")
    assert (tmp_path / "ts.k6.csv").read_bytes() == first


def test_serialization_detects_tampering(tmp_path):
    d = aggregate(ILLUSTRATION, 3)
    save_distribution(d, tmp_path / "x")
    p = tmp_path / "x.csv"
    p.write_text(p.read_text().replace("111,6", "111,7"))
    with pytest.raises(FormatError):
        load_distribution(tmp_path / "x.json")


def test_complement_helper():
    assert complement("0110") == "1001"


def test_invariants_of_type():
    with pytest.raises(ValueError):
        TupleDistribution(3, np.array([1, 1]), np.array([1, 2]))
    d = TupleDistribution.from_counts({"000": 3, "111": 1})
    assert d.probabilities().sum() == pytest.approx(1.0)
    assert "000" in d and "010" not in d
    rnd = random.Random(0)
    dense = [rnd.randrange(4) for _ in range(32)]
    assert TupleDistribution.from_dense(dense, 5).dense().tolist() == dense
