"""bedGraph signal scoring, top-fraction labeling and chromosome splits."""

from __future__ import annotations

import csv
import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, replace
from typing import IO, Iterable, Sequence

import numpy as np

from g4attn.errors import ParseError

log = logging.getLogger(__name__)

TRAIN = "train"
TEST = "test"
DEFAULT_TEST_CHROMS = frozenset({"chr1", "chr3", "chr5", "chr7", "chr9"})
DEFAULT_TRAIN_CHROMS = frozenset(
    ["chr2", "chr4", "chr6", "chr8"] + [f"chr{i}" for i in range(10, 23)] + ["chrX", "chrY"]
)
LABEL_COLUMNS = ("chrom", "start", "end", "strand", "score", "label", "split")


class SignalTrack:
    """Sorted, non-overlapping (start, end, value) intervals per chromosome."""

    def __init__(self, intervals: dict[str, list[tuple[int, int, float]]]):
        self.starts = {}
        self.ends = {}
        self.values = {}
        for chrom, ivs in intervals.items():
            ivs = sorted(ivs)
            for (s0, e0, _), (s1, _, _) in zip(ivs, ivs[1:]):
                if s1 < e0:
                    raise ValueError(f"{chrom}: overlapping intervals at {s1}")
            self.starts[chrom] = np.array([iv[0] for iv in ivs], dtype=np.int64)
            self.ends[chrom] = np.array([iv[1] for iv in ivs], dtype=np.int64)
            self.values[chrom] = np.array([iv[2] for iv in ivs], dtype=np.float64)

    def __len__(self):
        return sum(len(v) for v in self.starts.values())

    def intervals(self, chrom: str) -> list[tuple[int, int, float]]:
        return list(zip(self.starts.get(chrom, []), self.ends.get(chrom, []),
                        self.values.get(chrom, [])))


def parse_bedgraph(stream: IO[str]) -> SignalTrack:
    intervals = defaultdict(list)
    last_end = {}
    for lineno, line in enumerate(stream, start=1):
        if isinstance(line, bytes):
            line = line.decode("ascii")
        stripped = line.strip()
        if not stripped or stripped.startswith(("#", "track", "browser")):
            continue
        f = stripped.split()
        if len(f) < 4:
            raise ParseError(f"expected 4 columns, got {len(f)}", lineno)
        try:
            start, end = int(f[1]), int(f[2])
        except ValueError:
            raise ParseError("non-integer coordinate", lineno) from None
        try:
            value = float(f[3])
        except ValueError:
            raise ParseError(f"non-numeric value {f[3]!r}", lineno) from None
        if not math.isfinite(value):
            raise ParseError(f"non-finite value {f[3]!r}", lineno)
        if end <= start:
            raise ParseError(f"end {end} <= start {start}", lineno)
        chrom = f[0]
        # bedGraph is sorted per chromosome, so overlap shows up against the
        # previous line of that chromosome
        if chrom in last_end and start < last_end[chrom]:
            raise ParseError(f"interval overlaps or is unsorted relative to the previous "
                             f"{chrom} interval", lineno)
        last_end[chrom] = end
        intervals[chrom].append((start, end, value))
    return SignalTrack(intervals)


def mean_signal(hit, track: SignalTrack) -> float:
    """Per-base mean of the signal over ``[hit.start, hit.end)``; uncovered
    bases count as zero."""
    starts = track.starts.get(hit.chrom)
    if starts is None or hit.end <= hit.start:
        return 0.0
    ends = track.ends[hit.chrom]
    lo = int(np.searchsorted(ends, hit.start, side="right"))
    hi = int(np.searchsorted(starts, hit.end, side="left"))
    if hi <= lo:
        return 0.0
    overlap = (np.minimum(ends[lo:hi], hit.end) - np.maximum(starts[lo:hi], hit.start))
    return float(np.dot(overlap, track.values[hit.chrom][lo:hi])) / (hit.end - hit.start)


@dataclass(frozen=True)
class LabeledExample:
    chrom: str
    start: int
    end: int
    strand: str = "+"
    score: float = 0.0
    label: int = 0
    split: str = TRAIN
    id: str = ""
    bases: str | None = None


def label_top_fraction(examples: Sequence[LabeledExample], fraction: float = 0.05
                       ) -> list[LabeledExample]:
    """Label the top ``fraction`` of scores positive.

    The threshold is the ceil(fraction * n)-th largest score; ties at the
    threshold are all positive, and a zero score is never positive.
    """
    if not 0 < fraction < 1:
        raise ValueError("fraction must lie in (0, 1)")
    if not examples:
        raise ValueError("cannot label an empty set")
    scores = np.sort(np.array([e.score for e in examples], dtype=np.float64))[::-1]
    # tolerance keeps e.g. 0.05 * 100 from rounding up to 6
    k = max(1, math.ceil(fraction * len(scores) - 1e-9))
    threshold = scores[k - 1]
    return [replace(e, label=int(e.score >= threshold and e.score > 0)) for e in examples]


def split_by_chromosome(examples: Iterable[LabeledExample],
                        test_chroms: Iterable[str] = DEFAULT_TEST_CHROMS
                        ) -> tuple[list[LabeledExample], list[LabeledExample]]:
    test_chroms = frozenset(test_chroms)
    known = DEFAULT_TRAIN_CHROMS | DEFAULT_TEST_CHROMS | test_chroms
    train, test = [], []
    unknown = Counter()
    for e in examples:
        if e.chrom in test_chroms:
            test.append(replace(e, split=TEST))
        else:
            if e.chrom not in known:
                unknown[e.chrom] += 1
            train.append(replace(e, split=TRAIN))
    if unknown:
        log.warning("%d examples on %d unlisted chromosomes routed to train: %s",
                    sum(unknown.values()), len(unknown),
                    ", ".join(f"{c}={n}" for c, n in sorted(unknown.items())))
    return train, test


def score_hits(hits, track: SignalTrack) -> list[LabeledExample]:
    return [LabeledExample(h.chrom, h.start, h.end, h.strand, mean_signal(h, track),
                           id=getattr(h, "name", ""))
            for h in hits]


def write_labels_tsv(examples: Iterable[LabeledExample], stream: IO[str],
                     with_id: bool = False) -> None:
    """Write the label columns; ``with_id`` adds an ``id`` column naming the
    FASTA record that holds each sequence."""
    w = csv.writer(stream, delimiter="\t", lineterminator="\n")
    w.writerow(LABEL_COLUMNS + (("id",) if with_id else ()))
    for e in examples:
        row = [e.chrom, e.start, e.end, e.strand, repr(float(e.score)), e.label, e.split]
        w.writerow(row + [e.id] if with_id else row)


def read_labels_tsv(stream: IO[str]) -> list[LabeledExample]:
    reader = csv.DictReader(stream, delimiter="\t")
    missing = set(LABEL_COLUMNS) - set(reader.fieldnames or ())
    if missing:
        raise ParseError(f"label TSV lacks columns {sorted(missing)}", 1)
    out = []
    for lineno, row in enumerate(reader, start=2):
        try:
            out.append(LabeledExample(row["chrom"], int(row["start"]), int(row["end"]),
                                      row["strand"], float(row["score"]), int(row["label"]),
                                      row["split"], row.get("id") or ""))
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
    return out
