"""``g4attn`` command line: one executable, one subcommand per pipeline stage.

Exit codes: 0 success, 1 usage error, 2 data error (bad or missing input,
failed gradient check). Every output file gets a ``<output>.manifest.json``
recording the subcommand, resolved options, input digests, seed and version.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
import time
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from g4attn import __version__
from g4attn.errors import DataError, G4AttnError

log = logging.getLogger("g4attn")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2
DEFAULT_SEED = 123


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for data errors here
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# ---- manifests -------------------------------------------------------------

def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(output, subcommand: str, config: dict, inputs, seed: int) -> Path:
    path = Path(f"{output}.manifest.json")
    manifest = {
        "subcommand": subcommand,
        "config": config,
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "seed": seed,
        "version": __version__,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _config_of(args) -> dict:
    skip = {"func", "seed", "log_level", "command"}
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items())
            if k not in skip}


# ---- subcommands -----------------------------------------------------------

def cmd_mine(args) -> tuple[list, list]:
    from g4attn.pqs import MINING_CLASSES, PATTERNS, mine_genome, write_hits_bed
    from g4attn.seq import read_fasta

    patterns = args.patterns.split(",") if args.patterns else list(MINING_CLASSES)
    bad = [p for p in patterns if p not in PATTERNS]
    if bad:
        raise UsageError(f"unknown pattern class(es) {bad}; choose from {sorted(PATTERNS)}")
    hits = mine_genome(read_fasta(args.fasta), patterns, args.min_g)
    with open(args.out, "w") as fh:
        write_hits_bed(hits, fh)
    log.info("mined %d hits", len(hits))
    return [args.fasta], [args.out]


def _read_positives(path, genome):
    """Positive records from a FASTA, a BED of hits, or a labels TSV
    (label-1 rows only)."""
    from g4attn.data import load_dataset
    from g4attn.pqs import read_hits_bed
    from g4attn.seq import DnaRecord, read_fasta, reverse_complement_bases

    suffix = Path(path).suffix.lower()
    if suffix in (".tsv", ".txt"):
        return [DnaRecord(e.id or f"{e.chrom}:{e.start}-{e.end}({e.strand})", e.chrom, e.start,
                          e.end, e.strand, e.bases)
                for e in load_dataset(path, genome=genome) if e.label == 1]
    if suffix == ".bed":
        if genome is None:
            raise DataError("BED positives need --genome to recover their sequences")
        chroms = {r.chrom: r for r in genome}
        out = []
        with open(path) as fh:
            for h in read_hits_bed(fh):
                if h.chrom not in chroms or h.end > len(chroms[h.chrom]):
                    raise DataError(f"{h.name} is not inside the genome")
                b = chroms[h.chrom].bases[h.start:h.end]
                out.append(DnaRecord(h.name, h.chrom, h.start, h.end, h.strand,
                                     reverse_complement_bases(b) if h.strand == "-" else b))
        return out
    return read_fasta(path)


def _read_bed_intervals(path):
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip() or line.startswith(("#", "track", "browser")):
                continue
            cols = line.split()
            try:
                out.append((cols[0], int(cols[1]), int(cols[2])))
            except (IndexError, ValueError):
                raise DataError(f"{path}: line {lineno}: not a BED interval") from None
    return out


def cmd_negatives(args) -> tuple[list, list]:
    from g4attn.labels import LabeledExample, split_by_chromosome, write_labels_tsv
    from g4attn.negatives import DISHUFFLE, IntervalSet, NegativeSpec, build_negative_set
    from g4attn.seq import read_fasta, write_fasta

    inputs = [args.positives]
    genome = None
    if args.genome:
        genome = read_fasta(args.genome)
        inputs.append(args.genome)
    elif args.kind != DISHUFFLE:
        raise UsageError(f"--kind {args.kind} needs --genome")
    positives = _read_positives(args.positives, genome)
    excluded = [(p.chrom, p.start, p.end) for p in positives]
    for bed in args.exclude or ():
        excluded += _read_bed_intervals(bed)
        inputs.append(bed)
    spec = NegativeSpec(args.kind, seed=args.seed, exclusion=IntervalSet(excluded))
    negatives = build_negative_set(positives, genome, spec)
    with open(args.out, "w") as fh:
        write_fasta(negatives, fh)
    tsv = Path(args.out).with_suffix(".tsv")
    train, test = split_by_chromosome(
        LabeledExample(r.chrom, r.start, r.end, r.strand, 0.0, 0, id=r.id) for r in negatives)
    with open(tsv, "w") as fh:
        write_labels_tsv(train + test, fh, with_id=True)
    log.info("wrote %d %s negatives", len(negatives), args.kind)
    return inputs, [args.out, tsv]


def cmd_label(args) -> tuple[list, list]:
    from g4attn.labels import label_top_fraction, parse_bedgraph, score_hits, write_labels_tsv
    from g4attn.pqs import read_hits_bed

    with open(args.hits) as fh:
        hits = read_hits_bed(fh)
    with open(args.signal) as fh:
        track = parse_bedgraph(fh)
    if not hits:
        raise DataError(f"{args.hits}: no hits to label")
    labeled = label_top_fraction(score_hits(hits, track), args.fraction)
    if args.positives_only:
        labeled = [e for e in labeled if e.label == 1]
    with open(args.out, "w") as fh:
        write_labels_tsv(labeled, fh)
    log.info("%d of %d hits labeled positive", sum(e.label for e in labeled), len(hits))
    return [args.hits, args.signal], [args.out]


def cmd_split(args) -> tuple[list, list]:
    from g4attn.labels import DEFAULT_TEST_CHROMS, read_labels_tsv, split_by_chromosome, \
        write_labels_tsv

    with open(args.labels) as fh:
        header = fh.readline().rstrip("\n").split("\t")
        fh.seek(0)
        examples = read_labels_tsv(fh)
    chroms = args.test_chroms.split(",") if args.test_chroms is not None else DEFAULT_TEST_CHROMS
    train, test = split_by_chromosome(examples, [c for c in chroms if c])
    with open(args.out, "w") as fh:
        write_labels_tsv(train + test, fh, with_id="id" in header)
    log.info("split: %d train, %d test", len(train), len(test))
    return [args.labels], [args.out]


def _load_data(args):
    from g4attn.data import load_dataset, sibling_fasta
    from g4attn.seq import read_fasta

    genome = read_fasta(args.genome) if args.genome else None
    examples, inputs = [], []
    for tsv in args.data:
        examples += load_dataset(tsv, fasta=args.fasta, genome=genome)
        inputs.append(tsv)
        fa = args.fasta or sibling_fasta(tsv)
        if fa and str(fa) not in map(str, inputs):
            inputs.append(fa)
    if args.genome:
        inputs.append(args.genome)
    return examples, inputs


def cmd_train(args) -> tuple[list, list]:
    from g4attn.data import select_split
    from g4attn.nn import save_checkpoint
    from g4attn.train import TrainConfig, thread_limit, train

    config = TrainConfig.from_file(args.config) if args.config else TrainConfig()
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    args.seed = config.seed
    examples, inputs = _load_data(args)
    data = select_split(examples, args.split)
    if not data:
        raise DataError(f"no examples in split {args.split!r}")
    log.info("training %s on %d examples", config.variant, len(data))
    with thread_limit():
        params, tlog = train(data, config)
    save_checkpoint(params, args.out, {"train_config": asdict(config),
                                       "epoch_loss": tlog.epoch_loss})
    if args.config:
        inputs.insert(0, args.config)
    args.train_config = asdict(config)
    return inputs, [args.out]


def _encode(examples, length):
    from g4attn.seq import encode_batch

    return encode_batch([e.bases for e in examples], length)


def cmd_eval(args) -> tuple[list, list]:
    from g4attn.data import select_split
    from g4attn.metrics import evaluate, plot_curves_svg, write_curves_csv, write_report_csv
    from g4attn.nn import load_checkpoint
    from g4attn.train import thread_limit

    params, _ = load_checkpoint(args.model)
    examples, inputs = _load_data(args)
    data = select_split(examples, args.split)
    if not data:
        raise DataError(f"no examples in split {args.split!r}")
    X = _encode(data, params.config.input_length)
    y = np.array([e.label for e in data])
    with thread_limit():
        report, _ = evaluate(params, X, y)
    write_report_csv(report, args.report)
    outputs = [args.report]
    if args.curves:
        write_curves_csv(report, args.curves)
        outputs.append(args.curves)
    if args.plot:
        plot_curves_svg(report, args.plot, title=Path(args.model).name)
        outputs.append(args.plot)
    log.info("ROC AUC %.4f, PR AUC %.4f on %d examples", report.roc.area, report.pr.area,
             len(data))
    return [args.model] + inputs, outputs


def cmd_predict(args) -> tuple[list, list]:
    from g4attn.nn import load_checkpoint, predict
    from g4attn.seq import encode_batch, read_fasta
    from g4attn.train import thread_limit

    params, _ = load_checkpoint(args.model)
    records = read_fasta(args.fasta)
    X = encode_batch([r.bases for r in records], params.config.input_length)
    with thread_limit():
        scores = predict(X, params) if records else np.zeros(0)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, delimiter="\t", lineterminator="\n")
        w.writerow(["id", "score"])
        for r, s in zip(records, scores):
            w.writerow([r.id, repr(float(s))])
    return [args.model, args.fasta], [args.out]


def cmd_gradcheck(args) -> tuple[list, list]:
    from g4attn.nn import ModelConfig, gradient_check, init_params
    from g4attn.seq import encode_batch

    cfg = ModelConfig(args.kernel_size, args.n_filters, args.lstm_units, args.dense_units,
                      args.variant, args.length)
    rng = np.random.default_rng([args.seed, 0])
    seqs = ["".join(rng.choice(list("ACGT"), size=args.length)) for _ in range(args.batch)]
    report = gradient_check(init_params(cfg, args.seed), encode_batch(seqs, args.length),
                            tolerance=args.tolerance, upstream=rng.normal(size=args.batch))
    lines = report.lines() + [f"{'result':<16} {'PASS' if report.passed else 'FAIL'}"]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    if not report.passed:
        raise DataError(f"gradient check failed for {', '.join(report.failures)}")
    return [], [args.out] if args.out else []


def cmd_synth(args) -> tuple[list, list]:
    from g4attn.data import synth_corpus, write_dataset

    records, rows = synth_corpus(args.n_pos, args.n_neg, args.length, args.seed,
                                 args.test_fraction)
    fa, tsv = write_dataset(records, rows, args.out)
    log.info("wrote %d records to %s", len(records), fa)
    return [], [fa, tsv]


# ---- parser ----------------------------------------------------------------

def _seed(p, default=DEFAULT_SEED, help_text="random seed"):
    p.add_argument("--seed", type=int, default=default, help=f"{help_text} (default {default})")


def _data_args(p, split_default):
    p.add_argument("--data", action="append", required=True, metavar="TSV",
                   help="labels TSV; repeat to combine files")
    p.add_argument("--fasta", help="FASTA holding the records named in the TSV id column "
                                   "(default: FASTA with the TSV's stem)")
    p.add_argument("--genome", help="genome FASTA for TSVs that give coordinates only")
    p.add_argument("--split", default=split_default, choices=["train", "test", "all"],
                   help=f"which rows to use (default {split_default})")


def build_parser() -> argparse.ArgumentParser:
    from g4attn.labels import DEFAULT_TEST_CHROMS
    from g4attn.negatives import KINDS
    from g4attn.nn import FULL, VARIANTS

    parser = _Parser(prog="g4attn", description="G-quadruplex mining, labeling and "
                     "attention-model training.")
    parser.add_argument("--version", action="version", version=f"g4attn {__version__}")
    parser.add_argument("--log-level", default="INFO",
                        choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("mine", help="scan a genome for putative quadruplexes")
    p.add_argument("--fasta", required=True, help="genome FASTA")
    p.add_argument("--out", required=True, help="output BED6+2")
    p.add_argument("--patterns", help="comma-separated classes (default Standard,Bulged,"
                                      "Irregular)")
    p.add_argument("--min-g", type=int, default=12, help="minimum G count (default 12)")
    _seed(p, help_text="recorded in the manifest; mining is deterministic")
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("negatives", help="generate one negative per positive")
    p.add_argument("--positives", required=True, help="FASTA, BED of hits, or labels TSV")
    p.add_argument("--kind", required=True, choices=KINDS)
    p.add_argument("--genome", help="genome FASTA (needed for random and pq)")
    p.add_argument("--exclude", action="append", metavar="BED",
                   help="extra intervals negatives must avoid")
    p.add_argument("--out", required=True,
                   help="output FASTA; a labels TSV with the same stem is written next to it")
    _seed(p)
    p.set_defaults(func=cmd_negatives)

    p = sub.add_parser("label", help="score hits against a signal track and label them")
    p.add_argument("--hits", required=True, help="BED6+2 from mine")
    p.add_argument("--signal", required=True, help="bedGraph signal")
    p.add_argument("--fraction", type=float, default=0.05,
                   help="top fraction labeled positive (default 0.05)")
    p.add_argument("--positives-only", action="store_true", help="write only label-1 rows")
    p.add_argument("--out", required=True, help="output labels TSV")
    _seed(p, help_text="recorded in the manifest; labeling is deterministic")
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("split", help="assign train/test by chromosome")
    p.add_argument("--labels", required=True, help="labels TSV")
    p.add_argument("--test-chroms", help="comma-separated test chromosomes (default "
                                         f"{','.join(sorted(DEFAULT_TEST_CHROMS))})")
    p.add_argument("--out", required=True, help="output labels TSV")
    _seed(p, help_text="recorded in the manifest; the split is deterministic")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train a model")
    p.add_argument("--config", help="key=value training config")
    _data_args(p, "train")
    p.add_argument("--out", required=True, help="output checkpoint")
    _seed(p, default=None, help_text="overrides the config seed")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("--model", required=True, help="checkpoint from train")
    _data_args(p, "test")
    p.add_argument("--report", required=True, help="output metrics CSV")
    p.add_argument("--curves", help="output CSV of ROC and PR curve points")
    p.add_argument("--plot", help="output SVG of both curves")
    _seed(p, help_text="recorded in the manifest; evaluation is deterministic")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("predict", help="score the sequences of a FASTA file")
    p.add_argument("--model", required=True, help="checkpoint from train")
    p.add_argument("--fasta", required=True)
    p.add_argument("--out", required=True, help="output TSV (id, score)")
    _seed(p, help_text="recorded in the manifest; prediction is deterministic")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("gradcheck", help="compare backprop with finite differences")
    p.add_argument("--variant", default=FULL, choices=VARIANTS)
    p.add_argument("--length", type=int, default=32)
    p.add_argument("--kernel-size", type=int, default=3)
    p.add_argument("--n-filters", type=int, default=4)
    p.add_argument("--lstm-units", type=int, default=4)
    p.add_argument("--dense-units", type=int, default=8)
    p.add_argument("--batch", type=int, default=1, help="random sequences per check")
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--out", help="also write the report here")
    _seed(p, help_text="seeds the parameters and test sequences")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("synth", help="write a synthetic labeled corpus")
    p.add_argument("--n-pos", type=int, default=1000)
    p.add_argument("--n-neg", type=int, default=1000)
    p.add_argument("--length", type=int, default=124)
    p.add_argument("--test-fraction", type=float, default=0.2)
    p.add_argument("--out", required=True, help="output prefix (writes PREFIX.fa, PREFIX.tsv)")
    _seed(p)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    logging.basicConfig(level=args.log_level, stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        inputs, outputs = args.func(args)
    except UsageError as exc:
        print(f"g4attn {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, G4AttnError, ValueError, OSError) as exc:
        log.error("%s: %s", args.command, exc)
        return EXIT_DATA
    for path in outputs:
        write_manifest(path, args.command, _config_of(args), inputs, args.seed)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
