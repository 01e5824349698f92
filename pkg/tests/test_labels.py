import io

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import per_base_mean
from g4attn.errors import ParseError
from g4attn.labels import (LabeledExample, SignalTrack, label_top_fraction, mean_signal,
                           parse_bedgraph, read_labels_tsv, split_by_chromosome,
                           write_labels_tsv)
from g4attn.pqs import PqsHit


def bg(text):
    return parse_bedgraph(io.StringIO(text))


def hit(start, end, chrom="chr1"):
    return PqsHit(chrom, start, end, "+", "Standard", 12)


def test_parse_single():
    t = bg("chr1 0 10 2.0\n")
    assert t.intervals("chr1") == [(0, 10, 2.0)]


def test_parse_skips_track_line():
    t = bg("track type=bedGraph\nchr1 0 5 1.5\n")
    assert len(t) == 1


@pytest.mark.parametrize("text, line", [
    ("chr1 5 3 1.0\n", 1),
    ("chr1 0 5 1.0\nchr1 4 8 1.0\n", 2),
    ("track x\nchr1 0 5 abc\n", 2),
    ("chr1 0 5\n", 1),
])
def test_parse_errors(text, line):
    with pytest.raises(ParseError) as exc:
        bg(text)
    assert exc.value.line == line


def test_mean_signal_hand_case():
    t = bg("chr1\t0\t10\t2.0\nchr1\t10\t20\t4.0\n")
    assert mean_signal(hit(5, 15), t) == 3.0


def test_mean_signal_uncovered_is_zero():
    t = bg("chr1 0 10 2.0\n")
    assert mean_signal(hit(50, 60), t) == 0.0
    assert mean_signal(hit(0, 10, chrom="chr2"), t) == 0.0


def test_mean_signal_partial_coverage_counts_gaps_as_zero():
    t = bg("chr1 0 10 2.0\n")
    assert mean_signal(hit(5, 25), t) == pytest.approx(0.5)


def test_mean_signal_constant():
    t = bg("chr1 0 100 7.25\n")
    assert mean_signal(hit(20, 30), t) == 7.25


@given(st.data())
def test_mean_signal_matches_per_base_loop(data):
    cuts = sorted(set(data.draw(st.lists(st.integers(0, 400), min_size=2, max_size=20))))
    ivs = []
    for s, e in zip(cuts, cuts[1:]):
        if data.draw(st.booleans()):
            ivs.append((s, e, data.draw(st.floats(0, 100, allow_nan=False))))
    track = SignalTrack({"chr1": ivs})
    start = data.draw(st.integers(0, 450))
    end = start + data.draw(st.integers(1, 200))
    expected = per_base_mean(start, end, ivs)
    assert mean_signal(hit(start, end), track) == pytest.approx(expected, rel=1e-12, abs=1e-300)


def ex(score, chrom="chr1"):
    return LabeledExample(chrom, 0, 10, "+", float(score))


def test_top_five_percent_of_hundred():
    out = label_top_fraction([ex(s) for s in range(1, 101)], 0.05)
    assert [e.score for e in out if e.label] == [96, 97, 98, 99, 100]


def test_all_zero_scores_are_negative():
    assert all(e.label == 0 for e in label_top_fraction([ex(0)] * 30, 0.05))


def test_singleton_positive():
    (e,) = label_top_fraction([ex(7)], 0.05)
    assert e.label == 1


def test_label_errors():
    with pytest.raises(ValueError):
        label_top_fraction([], 0.05)
    with pytest.raises(ValueError):
        label_top_fraction([ex(1)], 1.0)


@given(st.lists(st.floats(0, 1e6, allow_nan=False), min_size=1, max_size=300, unique=True),
       st.floats(0.001, 0.999))
def test_positive_fraction_bound(scores, fraction):
    out = label_top_fraction([ex(s) for s in scores], fraction)
    n = len(out)
    assert sum(e.label for e in out) / n <= fraction + 1 / n + 1e-12
    thr = min((e.score for e in out if e.label), default=np.inf)
    assert all(e.score < thr or e.score == 0 for e in out if not e.label)


@given(st.lists(st.floats(0, 100, allow_nan=False), min_size=2, max_size=100, unique=True),
       st.integers(0, 99), st.floats(0, 50))
def test_raising_a_score_is_monotone(scores, which, bump):
    which %= len(scores)
    before = label_top_fraction([ex(s) for s in scores], 0.1)
    raised = list(scores)
    raised[which] += bump
    after = label_top_fraction([ex(s) for s in raised], 0.1)
    assert after[which].label >= before[which].label
    # with distinct scores the recomputed threshold moves by at most one rank
    flipped = sum(1 for i, (b, a) in enumerate(zip(before, after))
                  if i != which and b.label == 1 and a.label == 0)
    assert flipped <= 1


def test_split_default_test_chromosomes():
    train, test = split_by_chromosome([ex(1, "chr1"), ex(1, "chr2")])
    assert [e.chrom for e in test] == ["chr1"]
    assert [e.chrom for e in train] == ["chr2"]
    assert test[0].split == "test" and train[0].split == "train"


def test_split_empty_test_set():
    train, test = split_by_chromosome([ex(1, "chr1"), ex(1, "chr3")], test_chroms=[])
    assert len(train) == 2 and test == []


def test_split_all_test():
    train, test = split_by_chromosome([ex(1, "chr3")] * 4)
    assert train == [] and len(test) == 4


def test_split_unknown_chromosome_warns(caplog):
    train, test = split_by_chromosome([ex(1, "chrUn_gl000220"), ex(1, "chr5")])
    assert [e.chrom for e in train] == ["chrUn_gl000220"]
    assert "routed to train" in caplog.text


@given(st.lists(st.sampled_from(["chr1", "chr2", "chr3", "chrX", "chrM"]), max_size=50))
def test_split_is_partition(chroms):
    items = [LabeledExample(c, i, i + 1) for i, c in enumerate(chroms)]
    train, test = split_by_chromosome(items)
    assert sorted(e.start for e in train + test) == list(range(len(items)))


def test_labels_tsv_roundtrip():
    items = [LabeledExample("chr1", 5, 20, "-", 0.1 + 0.2, 1, "test"),
             LabeledExample("chr2", 0, 9, "+", 0.0, 0, "train")]
    buf = io.StringIO()
    write_labels_tsv(items, buf)
    assert buf.getvalue().splitlines()[0].split("\t") == [
        "chrom", "start", "end", "strand", "score", "label", "split"]
    assert read_labels_tsv(io.StringIO(buf.getvalue())) == items
