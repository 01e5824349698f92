"""DNA records, FASTA/BED I/O, strand operations and one-hot encoding."""

from __future__ import annotations

import io
from dataclasses import dataclass, replace
from typing import IO, Iterable, Iterator

import numpy as np

from g4attn.errors import EncodingError, ParseError

ALPHABET = "ACGTN"
# channel order of the one-hot code
CHANNELS = "ATCG"

_COMPLEMENT = str.maketrans("ACGTN", "TGCAN")
# every byte that is not A/C/G/T (either case) becomes N
_NORMALIZE = bytes(
    ord(chr(b).upper()) if chr(b).upper() in "ACGT" else ord("N") for b in range(256)
)
_CHANNEL_INDEX = np.full(256, -1, dtype=np.int64)
for _i, _c in enumerate(CHANNELS):
    _CHANNEL_INDEX[ord(_c)] = _i
_CHANNEL_INDEX[ord("N")] = 4


@dataclass(frozen=True)
class DnaRecord:
    id: str
    chrom: str
    start: int
    end: int
    strand: str
    bases: str

    def __post_init__(self):
        if self.end - self.start != len(self.bases):
            raise ValueError(
                f"record {self.id}: interval [{self.start},{self.end}) does not "
                f"match {len(self.bases)} bases"
            )
        if self.strand not in ("+", "-"):
            raise ValueError(f"record {self.id}: bad strand {self.strand!r}")
        if self.bases.strip(ALPHABET):
            raise ValueError(f"record {self.id}: bases must be normalized")

    def __len__(self):
        return len(self.bases)

    @classmethod
    def from_bases(cls, id: str, bases: str, chrom: str | None = None, start: int = 0,
                   strand: str = "+") -> DnaRecord:
        bases = normalize(bases)
        return cls(id, chrom if chrom is not None else id, start, start + len(bases),
                   strand, bases)


def normalize(bases: str) -> str:
    """Uppercase and map any non-ACGT symbol to N."""
    return bases.encode("latin-1", "replace").translate(_NORMALIZE).decode("ascii")


def reverse_complement_bases(bases: str) -> str:
    return bases.translate(_COMPLEMENT)[::-1]


def reverse_complement(r: DnaRecord) -> DnaRecord:
    return replace(r, bases=reverse_complement_bases(r.bases),
                   strand="-" if r.strand == "+" else "+")


def _lines(stream) -> Iterator[bytes]:
    if isinstance(stream, (bytes, bytearray)):
        stream = io.BytesIO(stream)
    for raw in stream:
        if isinstance(raw, str):
            raw = raw.encode("utf-8")
        yield raw


def parse_fasta(stream: IO[bytes] | bytes | Iterable[bytes]) -> Iterator[DnaRecord]:
    """Stream DnaRecords out of FASTA input.

    Both id and chrom are the header token up to the first whitespace; any
    description after it is dropped.
    """
    header = None
    header_line = 0
    chunks: list[str] = []

    def finish():
        if not chunks:
            raise ParseError(f"record {header!r} has an empty body", header_line)
        chrom = header.split()[0] if header.split() else ""
        if not chrom:
            raise ParseError("empty FASTA header", header_line)
        bases = normalize("".join(chunks))
        return DnaRecord(chrom, chrom, 0, len(bases), "+", bases)

    for lineno, raw in enumerate(_lines(stream), start=1):
        try:
            line = raw.decode("ascii").strip()
        except UnicodeDecodeError:
            raise ParseError("non-ASCII bytes", lineno) from None
        if not line:
            continue
        if line.startswith(">"):
            if header is not None:
                yield finish()
            header, header_line, chunks = line[1:].strip(), lineno, []
        elif header is None:
            raise ParseError("sequence data before first '>' header", lineno)
        else:
            chunks.append(line)
    if header is not None:
        yield finish()


def read_fasta(path) -> list[DnaRecord]:
    with open(path, "rb") as fh:
        return list(parse_fasta(fh))


def write_fasta(records: Iterable[DnaRecord], stream: IO[str], width: int = 60) -> None:
    for r in records:
        stream.write(f">{r.id}\n")
        for i in range(0, len(r.bases), width):
            stream.write(r.bases[i:i + width] + "\n")


def bed6_line(r: DnaRecord, score: float | int = 0) -> str:
    return f"{r.chrom}\t{r.start}\t{r.end}\t{r.id}\t{score}\t{r.strand}"


def parse_region(name: str) -> tuple[str, int, int] | None:
    """Parse a ``chrom:start-end`` style record name, or return None."""
    chrom, sep, span = name.rpartition(":")
    if not sep or not chrom:
        return None
    start, dash, end = span.partition("-")
    if not dash or not start.isdigit():
        return None
    end = end.split("(")[0]
    if not end.isdigit():
        return None
    return chrom, int(start), int(end)


def fit_window(bases: str, target_length: int) -> tuple[str, int]:
    """Center ``bases`` in a window of ``target_length``.

    Returns the retained bases and the left zero-padding. Over-long input is
    trimmed symmetrically, the odd base coming off the right end.
    """
    n = len(bases)
    if n >= target_length:
        left = (n - target_length) // 2
        return bases[left:left + target_length], 0
    return bases, (target_length - n) // 2


def encode_one_hot(bases: str, target_length: int) -> np.ndarray:
    """One-hot encode into a ``target_length x 4`` float64 matrix (A, T, C, G).

    N and padding rows are all-zero.
    """
    if target_length <= 0:
        raise ValueError("target_length must be positive")
    kept, pad = fit_window(bases.upper(), target_length)
    try:
        raw = kept.encode("latin-1")
    except UnicodeEncodeError:
        raise EncodingError("non-nucleotide symbol in sequence") from None
    idx = _CHANNEL_INDEX[np.frombuffer(raw, dtype=np.uint8)]
    if (idx < 0).any():
        bad = kept[int(np.argmax(idx < 0))]
        raise EncodingError(f"cannot encode symbol {bad!r}")
    out = np.zeros((target_length, 5))
    out[pad + np.arange(len(kept)), idx] = 1.0
    return out[:, :4].copy()


def encode_batch(seqs: Iterable[str], target_length: int) -> np.ndarray:
    return np.stack([encode_one_hot(s, target_length) for s in seqs])
