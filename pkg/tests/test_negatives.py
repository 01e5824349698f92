import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import all_dinuc_arrangements, dinuc_counts
from g4attn.errors import SamplingExhausted
from g4attn.negatives import (DISHUFFLE, PQ, RANDOM, IntervalSet, NegativeSpec,
                              build_negative_set, dinucleotide_shuffle, sample_random)
from g4attn.seq import DnaRecord


@pytest.mark.parametrize("s", ["AATT", "ACGT"])
def test_forced_arrangements(s):
    # enumeration shows the dinucleotide multiset admits only the input itself
    assert all_dinuc_arrangements(s) == {s}
    for seed in range(20):
        assert dinucleotide_shuffle(s, seed) == s


def test_short_input_unchanged():
    assert dinucleotide_shuffle("", 1) == ""
    assert dinucleotide_shuffle("G", 1) == "G"


@settings(max_examples=300)
@given(st.text(alphabet="ACGT", min_size=2, max_size=300), st.integers(0, 2**63 - 1))
def test_shuffle_preserves_dinucleotides(s, seed):
    t = dinucleotide_shuffle(s, seed)
    assert dinuc_counts(t) == dinuc_counts(s)
    assert (t[0], t[-1], len(t)) == (s[0], s[-1], len(s))


def test_shuffle_handles_n():
    s = "ACGNNTTAGNCA"
    t = dinucleotide_shuffle(s, 3)
    assert dinuc_counts(t) == dinuc_counts(s)


def test_shuffle_deterministic():
    s = "ACGTTGCAAGGCTTAGGGATC" * 3
    assert dinucleotide_shuffle(s, 42) == dinucleotide_shuffle(s, 42)


def test_shuffle_non_degenerate():
    outs = {dinucleotide_shuffle("AAGAAG", seed) for seed in range(100)}
    assert len(outs) >= 2
    assert outs <= all_dinuc_arrangements("AAGAAG")


def test_shuffle_roughly_uniform():
    # uniform over labelled Euler paths is uniform over distinct strings
    s = "AACAGATA"
    support = all_dinuc_arrangements(s)
    counts = {t: 0 for t in support}
    n = 4000
    for seed in range(n):
        counts[dinucleotide_shuffle(s, seed)] += 1
    expected = n / len(support)
    chi2 = sum((c - expected) ** 2 / expected for c in counts.values())
    # generous bound: df = len(support) - 1
    assert chi2 < 3 * len(support) + 30


def test_interval_set():
    ex = IntervalSet([("chr1", 10, 20), ("chr1", 0, 100), ("chr2", 5, 6)])
    assert ex.intersects("chr1", 50, 60)
    assert ex.intersects("chr2", 5, 6)
    assert not ex.intersects("chr2", 6, 10)
    assert not ex.intersects("chr3", 0, 10)
    assert not ex.intersects("chr1", 100, 120)


def test_sample_random_single_candidate():
    g = [DnaRecord.from_bases("chrA", "ACGT")]
    r = sample_random(g, 4, NegativeSpec(RANDOM, seed=1))
    assert (r.chrom, r.start, r.end, r.bases) == ("chrA", 0, 4, "ACGT")


def test_sample_random_deterministic_and_seed_sensitive():
    rng = np.random.default_rng(0)
    g = [DnaRecord.from_bases(f"c{i}", "".join(rng.choice(list("ACGT"), 5000)))
         for i in range(3)]
    a = sample_random(g, 124, NegativeSpec(RANDOM, seed=9))
    assert a == sample_random(g, 124, NegativeSpec(RANDOM, seed=9))
    others = {sample_random(g, 124, NegativeSpec(RANDOM, seed=s)).start for s in range(10)}
    assert len(others) > 1


def test_sample_random_exhausted():
    g = [DnaRecord.from_bases("chrA", "ACGT" * 10)]
    spec = NegativeSpec(RANDOM, seed=1, exclusion=IntervalSet([("chrA", 0, 40)]))
    with pytest.raises(SamplingExhausted):
        sample_random(g, 10, spec)
    with pytest.raises(SamplingExhausted):
        sample_random(g, 41, NegativeSpec(RANDOM))


def test_sample_random_rejects_n_rich_windows():
    g = [DnaRecord.from_bases("chrA", "N" * 50 + "ACGT" * 5)]
    for seed in range(20):
        r = sample_random(g, 20, NegativeSpec(RANDOM, seed=seed))
        assert r.bases.count("N") < 2


def test_random_negatives_avoid_exclusion():
    rng = np.random.default_rng(1)
    g = [DnaRecord.from_bases("chr1", "".join(rng.choice(list("ACGT"), 3000)))]
    excl = [("chr1", s, s + 124) for s in range(0, 3000, 400)]
    spec = NegativeSpec(RANDOM, seed=5, exclusion=IntervalSet(excl))
    pos = [DnaRecord.from_bases(f"p{i}", "A" * 124) for i in range(50)]
    for r in build_negative_set(pos, g, spec):
        assert len(r) == 124
        assert all(not (r.start < e and s < r.end) for _, s, e in excl)


def test_dishuffle_cardinality():
    pos = [DnaRecord.from_bases(f"p{i}", s) for i, s in
           enumerate(["ACGTTGCA", "GGGAGGGAGGGAGGG", "ATATATCG"])]
    neg = build_negative_set(pos, None, NegativeSpec(DISHUFFLE, seed=3))
    assert len(neg) == 3
    for p, n in zip(pos, neg):
        assert len(n) == len(p)
        assert dinuc_counts(n.bases) == dinuc_counts(p.bases)


def test_empty_positives():
    assert build_negative_set([], None, NegativeSpec(DISHUFFLE)) == []


def test_pq_negatives_exclude_positives_and_sample_without_replacement():
    # 31 nt units; 16 nt spacers are too long for a PQ loop to bridge
    unit = "T" * 8 + "GGGAGGGAGGGAGGG" + "T" * 8
    g = [DnaRecord.from_bases("chr1", unit * 20)]
    excl = IntervalSet([("chr1", 0, 50)])  # covers the first two hits
    pos = [DnaRecord.from_bases(f"p{i}", "A" * 20) for i in range(5)]
    neg = build_negative_set(pos, g, NegativeSpec(PQ, seed=2, exclusion=excl))
    assert len(neg) == 5
    assert len({(n.start, n.end) for n in neg}) == 5
    assert all(n.start >= 50 for n in neg)
    assert all(n.bases == "GGGAGGGAGGGAGGG" for n in neg)


def test_pq_shortfall_uses_all(caplog):
    g = [DnaRecord.from_bases("chr1", "TTGGGAGGGAGGGAGGGTT")]
    pos = [DnaRecord.from_bases(f"p{i}", "A" * 20) for i in range(3)]
    neg = build_negative_set(pos, g, NegativeSpec(PQ, seed=2))
    assert len(neg) == 1
    assert "shortfall 2" in caplog.text


def test_generators_deterministic():
    rng = np.random.default_rng(2)
    g = [DnaRecord.from_bases("chr1", "".join(rng.choice(list("ACGG"), 4000)))]
    pos = [DnaRecord.from_bases(f"p{i}", "".join(rng.choice(list("ACGT"), 60)))
           for i in range(8)]
    for kind in (RANDOM, DISHUFFLE, PQ):
        a = build_negative_set(pos, g, NegativeSpec(kind, seed=77))
        b = build_negative_set(pos, g, NegativeSpec(kind, seed=77))
        assert a == b


def test_bad_kind():
    with pytest.raises(ValueError):
        NegativeSpec("trinuc")
