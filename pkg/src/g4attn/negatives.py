"""Negative example generators: random genomic windows, dinucleotide shuffles
and PQ-motif negatives."""

from __future__ import annotations

import bisect
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from g4attn.errors import SamplingExhausted
from g4attn.pqs import scan_pq
from g4attn.seq import DnaRecord, reverse_complement

log = logging.getLogger(__name__)

RANDOM = "random"
DISHUFFLE = "dishuffle"
PQ = "pq"
KINDS = (RANDOM, DISHUFFLE, PQ)

MAX_DRAWS = 10_000
MAX_N_FRACTION = 0.1


class IntervalSet:
    """Per-chromosome half-open intervals with overlap queries."""

    def __init__(self, intervals: Iterable[tuple[str, int, int]] = ()):
        by_chrom = defaultdict(list)
        for chrom, start, end in intervals:
            by_chrom[chrom].append((start, end))
        self._starts = {}
        self._max_end = {}
        for chrom, ivs in by_chrom.items():
            ivs.sort()
            self._starts[chrom] = [s for s, _ in ivs]
            # running max of ends lets one bisect answer "anything overlapping?"
            self._max_end[chrom] = list(np.maximum.accumulate([e for _, e in ivs]))

    def intersects(self, chrom: str, start: int, end: int) -> bool:
        starts = self._starts.get(chrom)
        if not starts:
            return False
        i = bisect.bisect_left(starts, end)
        return i > 0 and self._max_end[chrom][i - 1] > start

    def __len__(self):
        return sum(len(v) for v in self._starts.values())


@dataclass
class NegativeSpec:
    kind: str
    seed: int = 123
    exclusion: IntervalSet = field(default_factory=IntervalSet)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown negative kind {self.kind!r}; expected one of {KINDS}")


def _rng(seed: int, index: int = 0) -> np.random.Generator:
    # one independent stream per example index
    return np.random.default_rng([seed & 0xFFFFFFFFFFFFFFFF, index])


def sample_random(genome: Sequence[DnaRecord], length: int, spec: NegativeSpec,
                  index: int = 0) -> DnaRecord:
    """A uniformly placed window of ``length`` bases that avoids the exclusion
    set and is less than 10% N."""
    records = [r for r in genome if len(r) >= length]
    if not records or length <= 0:
        raise SamplingExhausted(f"no genome record can hold a {length} nt window")
    sizes = np.array([len(r) - length + 1 for r in records], dtype=np.int64)
    cum = np.cumsum(sizes)
    rng = _rng(spec.seed, index)
    for _ in range(MAX_DRAWS):
        k = int(rng.integers(cum[-1]))
        j = int(np.searchsorted(cum, k, side="right"))
        r = records[j]
        offset = k - (int(cum[j - 1]) if j else 0)
        start = r.start + offset
        end = start + length
        if spec.exclusion.intersects(r.chrom, start, end):
            continue
        bases = r.bases[offset:offset + length]
        if bases.count("N") >= MAX_N_FRACTION * length:
            continue
        return DnaRecord(f"{r.chrom}:{start}-{end}", r.chrom, start, end, "+", bases)
    raise SamplingExhausted(f"no valid {length} nt window after {MAX_DRAWS} draws")


def dinucleotide_shuffle(bases: str, seed: int) -> str:
    """Random string with exactly the same overlapping dinucleotide counts.

    Altschul-Erickson: pick a random spanning arborescence of last exit edges
    rooted at the final base (Wilson's loop-erased walk), shuffle the other
    exits of every vertex, then walk the resulting Eulerian path.
    """
    if len(bases) < 2:
        return bases
    rng = np.random.default_rng(seed & 0xFFFFFFFFFFFFFFFF)
    succ = defaultdict(list)
    for a, b in zip(bases, bases[1:]):
        succ[a].append(b)
    root = bases[-1]

    in_tree = {root}
    last_exit = {}
    for v in sorted(succ):
        u = v
        while u not in in_tree:
            last_exit[u] = int(rng.integers(len(succ[u])))
            u = succ[u][last_exit[u]]
        u = v
        while u not in in_tree:
            in_tree.add(u)
            u = succ[u][last_exit[u]]

    order = {}
    for u in sorted(succ):
        edges = succ[u]
        if u in last_exit:
            keep = edges[last_exit[u]]
            rest = edges[:last_exit[u]] + edges[last_exit[u] + 1:]
            order[u] = [rest[i] for i in rng.permutation(len(rest))] + [keep]
        else:
            order[u] = [edges[i] for i in rng.permutation(len(edges))]

    pointer = dict.fromkeys(order, 0)
    out = [bases[0]]
    for _ in range(len(bases) - 1):
        u = out[-1]
        out.append(order[u][pointer[u]])
        pointer[u] += 1
    return "".join(out)


def build_negative_set(positives: Sequence[DnaRecord], genome: Sequence[DnaRecord] | None,
                       spec: NegativeSpec) -> list[DnaRecord]:
    """One negative per positive, generated according to ``spec.kind``."""
    if not positives:
        return []
    if spec.kind == DISHUFFLE:
        return [
            DnaRecord.from_bases(f"{p.id}_dishuffle",
                                 dinucleotide_shuffle(p.bases, int(_rng(spec.seed, i).integers(2**63))),
                                 chrom=p.chrom, start=p.start, strand=p.strand)
            for i, p in enumerate(positives)
        ]
    if genome is None:
        raise ValueError(f"{spec.kind} negatives need a genome")
    if spec.kind == RANDOM:
        return [sample_random(genome, len(p), spec, index=i) for i, p in enumerate(positives)]

    candidates = []
    for r in genome:
        for strand_record in (r, reverse_complement(r)):
            candidates.extend(h for h in scan_pq(strand_record)
                              if not spec.exclusion.intersects(h.chrom, h.start, h.end))
    candidates.sort(key=lambda h: (h.chrom, h.start, h.end, h.strand))
    if len(candidates) < len(positives):
        log.warning("PQ negatives: only %d candidates for %d positives (shortfall %d)",
                    len(candidates), len(positives), len(positives) - len(candidates))
        chosen = candidates
    else:
        idx = _rng(spec.seed).choice(len(candidates), size=len(positives), replace=False)
        chosen = [candidates[i] for i in idx]
    return [DnaRecord(h.name, h.chrom, h.start, h.end, h.strand, h.bases) for h in chosen]
