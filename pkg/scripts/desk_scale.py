#!/usr/bin/env python3
"""Desk-scale learning run: train on the synthetic corpus and report
held-out ROC/PR AUC and wall time.

    python scripts/desk_scale.py                      # acceptance setting
    python scripts/desk_scale.py --lstm-units 128     # default model width
    python scripts/desk_scale.py --batch-size 64      # more optimizer steps
    python scripts/desk_scale.py --motif-ceiling      # scanner-only reference

Results are appended as JSON lines to --log (default results/desk_scale.jsonl).
"""

import argparse
import json
import os
import sys
import time

import numpy as np

from g4attn.data import synth_corpus
from g4attn.metrics import pr_auc, roc_auc
from g4attn.nn import VARIANTS, predict
from g4attn.pqs import scan_standard
from g4attn.seq import DnaRecord, encode_batch
from g4attn.train import TrainConfig, fit, thread_limit


def motif_ceiling(records, y, test):
    """AUC of a classifier that only asks 'is there a Standard match?'. Shuffled
    negatives that still contain a match cap any motif-based score."""
    has = np.array([bool(scan_standard(DnaRecord.from_bases("x", r.bases)))
                    for r in records], dtype=float)
    neg_with_motif = float(has[(y == 0)].mean())
    return {"motif_roc": roc_auc(has[test], y[test])[1], "motif_pr": pr_auc(has[test], y[test])[1],
            "negatives_with_standard_match": neg_with_motif}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--n-pos", type=int, default=1000)
    ap.add_argument("--n-neg", type=int, default=1000)
    ap.add_argument("--length", type=int, default=124)
    ap.add_argument("--seed", type=int, default=123)
    ap.add_argument("--variant", default="full", choices=VARIANTS)
    ap.add_argument("--kernel-size", type=int, default=11)
    ap.add_argument("--n-filters", type=int, default=64)
    ap.add_argument("--lstm-units", type=int, default=64)
    ap.add_argument("--dense-units", type=int, default=64)
    ap.add_argument("--batch-size", type=int, default=1024)
    ap.add_argument("--epochs", type=int, default=10)
    ap.add_argument("--learning-rate", type=float, default=0.001)
    ap.add_argument("--class-weighting", action="store_true")
    ap.add_argument("--motif-ceiling", action="store_true")
    ap.add_argument("--log", default="results/desk_scale.jsonl")
    args = ap.parse_args(argv)

    t0 = time.perf_counter()
    records, rows = synth_corpus(args.n_pos, args.n_neg, args.length, args.seed)
    X = encode_batch([r.bases for r in records], args.length)
    y = np.array([r["label"] for r in rows])
    test = np.array([r["split"] == "test" for r in rows])
    result = {k: v for k, v in vars(args).items() if k != "log"}
    if args.motif_ceiling:
        result.update(motif_ceiling(records, y, test))
    else:
        cfg = TrainConfig(learning_rate=args.learning_rate, epochs=args.epochs,
                          batch_size=min(args.batch_size, int((~test).sum())), seed=args.seed,
                          input_length=args.length, class_weighting=args.class_weighting,
                          variant=args.variant, kernel_size=args.kernel_size,
                          n_filters=args.n_filters, lstm_units=args.lstm_units,
                          dense_units=args.dense_units)
        with thread_limit():
            params, tlog = fit(X[~test], y[~test], cfg)
            s = predict(X[test], params)
        result.update(roc_auc=roc_auc(s, y[test])[1], pr_auc=pr_auc(s, y[test])[1],
                      epoch_loss=tlog.epoch_loss, steps=len(tlog.step_loss))
    result["seconds"] = round(time.perf_counter() - t0, 1)
    print(json.dumps(result))
    os.makedirs(os.path.dirname(os.path.abspath(args.log)), exist_ok=True)
    with open(args.log, "a") as fh:
        fh.write(json.dumps(result) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
