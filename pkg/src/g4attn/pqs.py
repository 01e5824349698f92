"""Putative quadruplex (PQS) mining with regular expressions on both strands."""

from __future__ import annotations

import bisect
import re
from dataclasses import dataclass
from itertools import groupby
from typing import IO, Iterable, Sequence

from g4attn.errors import ContractError, ParseError
from g4attn.seq import DnaRecord, reverse_complement

STANDARD = "Standard"
BULGED = "Bulged"
IRREGULAR = "Irregular"
PQ = "PQ"

# loops: L = any base, N = non-G base
PATTERNS = {
    STANDARD: re.compile(r"(?:G{3,}[ACGT]{1,12}){3,}G{3,}"),
    BULGED: re.compile(r"(?:G[ACT]?G[ACT]?G[ACGT]{1,3}){3,}G[ACT]?G[ACT]?G"),
    IRREGULAR: re.compile(r"(?:G{1,2}[ACT]{1,2}){7,}G{1,2}"),
    PQ: re.compile(r"(?:G{3,}[ACGT]{1,12}){3}G{3,}"),
}
CLASS_PRIORITY = {STANDARD: 0, BULGED: 1, IRREGULAR: 2, PQ: 3}
MINING_CLASSES = (STANDARD, BULGED, IRREGULAR)
DEFAULT_MIN_G = 12


@dataclass(frozen=True)
class PqsHit:
    chrom: str
    start: int
    end: int
    strand: str
    pattern_class: str
    g_count: int
    bases: str = ""

    def __len__(self):
        return self.end - self.start

    @property
    def name(self) -> str:
        return f"{self.chrom}:{self.start}-{self.end}({self.strand})"


def scan(r: DnaRecord, pattern_class: str, min_g: int = 0) -> list[PqsHit]:
    """Non-overlapping leftmost matches of one pattern on ``r.bases``.

    Coordinates are mapped back to the + strand reference when ``r`` is a
    reverse-complemented record.
    """
    hits = []
    for m in PATTERNS[pattern_class].finditer(r.bases):
        bases = m.group()
        g = bases.count("G")
        if g < min_g:
            continue
        s, e = m.span()
        if r.strand == "+":
            start, end = r.start + s, r.start + e
        else:
            start, end = r.end - e, r.end - s
        hits.append(PqsHit(r.chrom, start, end, r.strand, pattern_class, g, bases))
    return hits


def scan_standard(r: DnaRecord, min_g: int = DEFAULT_MIN_G) -> list[PqsHit]:
    return scan(r, STANDARD, min_g)


def scan_bulged(r: DnaRecord, min_g: int = DEFAULT_MIN_G) -> list[PqsHit]:
    return scan(r, BULGED, min_g)


def scan_irregular(r: DnaRecord, min_g: int = DEFAULT_MIN_G) -> list[PqsHit]:
    return scan(r, IRREGULAR, min_g)


def scan_pq(r: DnaRecord) -> list[PqsHit]:
    return scan(r, PQ, 0)


SCANNERS = {
    STANDARD: scan_standard,
    BULGED: scan_bulged,
    IRREGULAR: scan_irregular,
    PQ: scan_pq,
}


def _sort_key(h: PqsHit):
    return (h.chrom, h.strand, h.start, -len(h))


def sort_hits(hits: Iterable[PqsHit]) -> list[PqsHit]:
    return sorted(hits, key=lambda h: (*_sort_key(h), CLASS_PRIORITY[h.pattern_class]))


def dedupe_hits(hits: Sequence[PqsHit]) -> list[PqsHit]:
    """Drop redundant and nested hits, keeping the longest of each cluster.

    Two hits on the same chrom/strand conflict unless at least one nucleotide
    separates them. Survivors are chosen greedily by (length desc, start asc,
    class priority) so the result is independent of cluster shape.
    """
    keys = [_sort_key(h) for h in hits]
    if any(a > b for a, b in zip(keys, keys[1:])):
        raise ContractError("dedupe_hits needs hits sorted by (chrom, strand, start, -length)")

    out = []
    for _, group in groupby(hits, key=lambda h: (h.chrom, h.strand)):
        ranked = sorted(group, key=lambda h: (-len(h), h.start, CLASS_PRIORITY[h.pattern_class]))
        starts: list[int] = []
        ends: list[int] = []
        kept = []
        for h in ranked:
            i = bisect.bisect_right(starts, h.end)
            # accepted intervals are disjoint and sorted: of those starting at
            # or before h.end, the last one reaches furthest right
            if i > 0 and ends[i - 1] >= h.start:
                continue
            starts.insert(i, h.start)
            ends.insert(i, h.end)
            kept.insert(i, h)
        out.extend(kept)
    return out


def mine_genome(records: Iterable[DnaRecord], patterns: Sequence[str] = MINING_CLASSES,
                min_g: int = DEFAULT_MIN_G) -> list[PqsHit]:
    """Scan every record on both strands and return non-redundant hits.

    Output is ordered by (chrom, start, end, strand).
    """
    hits = []
    for r in records:
        for strand_record in (r, reverse_complement(r)):
            for cls in patterns:
                hits.extend(scan(strand_record, cls, min_g if cls != PQ else 0))
    kept = dedupe_hits(sort_hits(hits))
    return sorted(kept, key=lambda h: (h.chrom, h.start, h.end, h.strand))


def write_hits_bed(hits: Iterable[PqsHit], stream: IO[str]) -> None:
    """BED6 plus pattern_class and g_count columns."""
    for h in hits:
        stream.write(f"{h.chrom}\t{h.start}\t{h.end}\t{h.name}\t0\t{h.strand}"
                     f"\t{h.pattern_class}\t{h.g_count}\n")


def read_hits_bed(stream: IO[str]) -> list[PqsHit]:
    hits = []
    for lineno, line in enumerate(stream, start=1):
        if not line.strip() or line.startswith(("#", "track", "browser")):
            continue
        f = line.rstrip("\n").split("\t")
        if len(f) < 6:
            raise ParseError(f"expected at least 6 BED columns, got {len(f)}", lineno)
        try:
            start, end = int(f[1]), int(f[2])
            g_count = int(f[7]) if len(f) > 7 else 0
        except ValueError:
            raise ParseError("non-integer coordinate", lineno) from None
        if end <= start:
            raise ParseError("end <= start", lineno)
        if f[5] not in ("+", "-"):
            raise ParseError(f"bad strand {f[5]!r}", lineno)
        cls = f[6] if len(f) > 6 else STANDARD
        hits.append(PqsHit(f[0], start, end, f[5], cls, g_count))
    return hits
