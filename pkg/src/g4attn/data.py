"""Training-set files (labels TSV + sequences) and the synthetic corpus."""

from __future__ import annotations

import csv
import os
from pathlib import Path

import numpy as np

from g4attn.errors import DataError, ParseError
from g4attn.labels import TEST, TRAIN, LabeledExample
from g4attn.negatives import dinucleotide_shuffle
from g4attn.seq import DnaRecord, read_fasta, reverse_complement_bases, write_fasta

MIN_MOTIF = 15  # GGGxGGGxGGGxGGG


def sibling_fasta(tsv) -> Path | None:
    stem = Path(tsv).with_suffix("")
    for ext in (".fa", ".fasta", ".fna"):
        if stem.with_suffix(ext).exists():
            return stem.with_suffix(ext)
    return None


def load_dataset(tsv, fasta=None, genome=None) -> list[LabeledExample]:
    """Read a labeled dataset.

    Sequences come from, in order of preference: a ``sequence`` column, the
    ``id`` column looked up in ``fasta`` (default: a FASTA file next to the
    TSV with the same stem), or chrom/start/end/strand cut out of ``genome``.
    """
    with open(tsv, newline="") as fh:
        reader = csv.DictReader(fh, delimiter="\t")
        cols = set(reader.fieldnames or ())
        rows = list(reader)
    if "label" not in cols:
        raise ParseError(f"{tsv}: no 'label' column", 1)

    fa = fasta or sibling_fasta(tsv)
    by_id = by_chrom = None
    if "sequence" not in cols:
        if "id" in cols and fa:
            by_id = {r.id: r for r in read_fasta(fa)}
        if {"chrom", "start", "end"} <= cols and genome is not None:
            records = read_fasta(genome) if isinstance(genome, (str, os.PathLike)) else genome
            by_chrom = {r.chrom: r for r in records}
        if by_id is None and by_chrom is None:
            raise DataError(f"{tsv}: no way to find sequences (need a sequence column, an "
                            "id column with a FASTA file, or coordinates with a genome)")

    out = []
    for lineno, row in enumerate(rows, start=2):
        try:
            label = int(row["label"])
        except ValueError:
            raise ParseError(f"bad label {row['label']!r}", lineno) from None
        if label not in (0, 1):
            raise ParseError(f"label must be 0/1, got {label}", lineno)
        rid = row.get("id") or ""
        strand = row.get("strand") or "+"
        chrom = row.get("chrom") or rid
        try:
            start = int(row["start"]) if row.get("start") else 0
            end = int(row["end"]) if row.get("end") else None
        except ValueError:
            raise ParseError("non-integer coordinate", lineno) from None
        if "sequence" in cols:
            bases = row["sequence"].upper()
        elif by_id is not None and rid in by_id:
            bases = by_id[rid].bases
        elif by_chrom is not None:
            rec = by_chrom.get(chrom)
            if rec is None or end is None or end > len(rec) or start >= end:
                raise ParseError(f"{chrom}:{start}-{end} is not inside the genome", lineno)
            bases = rec.bases[start:end]
            if strand == "-":
                bases = reverse_complement_bases(bases)
        else:
            raise ParseError(f"id {rid!r} not found in FASTA", lineno)
        out.append(LabeledExample(chrom, start, start + len(bases), strand,
                                  float(row.get("score") or 0.0), label,
                                  row.get("split") or TRAIN, rid or chrom, bases))
    return out


def select_split(examples, split: str):
    if split == "all":
        return list(examples)
    return [e for e in examples if e.split == split]


def _motif(rng, room: int) -> str:
    tract_max = 5 if room >= 41 else 3
    loop_max = min(7, (room - 12) // 3) if tract_max == 3 else 7
    tracts = ["G" * int(rng.integers(3, tract_max + 1)) for _ in range(4)]
    loops = ["".join(rng.choice(list("ACT"), size=int(rng.integers(1, loop_max + 1))))
             for _ in range(3)]
    return "".join(t + l for t, l in zip(tracts, loops + [""]))


def synth_corpus(n_pos: int, n_neg: int, length: int, seed: int, test_fraction: float = 0.2
                 ) -> tuple[list[DnaRecord], list[dict]]:
    """Random backgrounds with one implanted canonical G4 motif (positives)
    and dinucleotide shuffles of those positives (negatives).

    Returns FASTA records and the matching label rows (id, label, split,
    source). The split is stratified by class.
    """
    if n_pos < 1 or n_neg < 1 or length < 1:
        raise DataError("n_pos, n_neg and length must be positive")
    if length < MIN_MOTIF:
        raise DataError(f"length {length} cannot host a {MIN_MOTIF} nt G4 motif")
    records, rows = [], []
    for i in range(n_pos):
        rng = np.random.default_rng([seed, 1, i])
        bg = rng.choice(list("ACGT"), size=length)
        motif = _motif(rng, length)
        off = int(rng.integers(0, length - len(motif) + 1))
        bases = "".join(bg[:off]) + motif + "".join(bg[off + len(motif):])
        records.append(DnaRecord.from_bases(f"pos_{i:05d}", bases))
        rows.append({"id": records[-1].id, "label": 1, "source": records[-1].id})
    for j in range(n_neg):
        src = records[j % n_pos]
        shuffle_seed = int(np.random.default_rng([seed, 2, j]).integers(2**63))
        rec = DnaRecord.from_bases(f"neg_{j:05d}", dinucleotide_shuffle(src.bases, shuffle_seed))
        records.append(rec)
        rows.append({"id": rec.id, "label": 0, "source": src.id})

    rng = np.random.default_rng([seed, 3])
    for label, n in ((1, n_pos), (0, n_neg)):
        idx = [k for k, r in enumerate(rows) if r["label"] == label]
        test = set(rng.permutation(idx)[: int(round(test_fraction * n))].tolist())
        for k in idx:
            rows[k]["split"] = TEST if k in test else TRAIN
    return records, rows


def write_dataset(records, rows, prefix) -> tuple[str, str]:
    fa, tsv = f"{prefix}.fa", f"{prefix}.tsv"
    os.makedirs(os.path.dirname(os.path.abspath(fa)), exist_ok=True)
    with open(fa, "w") as fh:
        write_fasta(records, fh)
    with open(tsv, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["id", "label", "split", "source"], delimiter="\t",
                           lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    return fa, tsv
