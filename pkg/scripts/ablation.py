#!/usr/bin/env python3
"""Ablation ladder on an imbalanced synthetic corpus: train every variant on
the same split and seed and report held-out PR/ROC AUC.

    python scripts/ablation.py                       # 100 positives, 1900 negatives
    python scripts/ablation.py --variants cnn,full   # subset of the ladder

Writes a CSV (variant, roc_auc, pr_auc, seconds) to --out
(default results/ablation.csv).
"""

import argparse
import csv
import os
import sys
import time

import numpy as np

from g4attn.data import synth_corpus
from g4attn.metrics import pr_auc, roc_auc
from g4attn.nn import VARIANTS, predict
from g4attn.seq import encode_batch
from g4attn.train import TrainConfig, fit, thread_limit


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--n-pos", type=int, default=100)
    ap.add_argument("--n-neg", type=int, default=1900)
    ap.add_argument("--length", type=int, default=124)
    ap.add_argument("--seed", type=int, default=123)
    ap.add_argument("--variants", default=",".join(VARIANTS))
    ap.add_argument("--kernel-size", type=int, default=11)
    ap.add_argument("--n-filters", type=int, default=64)
    ap.add_argument("--lstm-units", type=int, default=64)
    ap.add_argument("--dense-units", type=int, default=64)
    ap.add_argument("--class-weighting", action="store_true")
    ap.add_argument("--out", default="results/ablation.csv")
    args = ap.parse_args(argv)

    records, rows = synth_corpus(args.n_pos, args.n_neg, args.length, args.seed)
    X = encode_batch([r.bases for r in records], args.length)
    y = np.array([r["label"] for r in rows])
    test = np.array([r["split"] == "test" for r in rows])
    out = []
    for variant in args.variants.split(","):
        t0 = time.perf_counter()
        cfg = TrainConfig(batch_size=min(1024, int((~test).sum())), seed=args.seed,
                          input_length=args.length, class_weighting=args.class_weighting,
                          variant=variant, kernel_size=args.kernel_size,
                          n_filters=args.n_filters, lstm_units=args.lstm_units,
                          dense_units=args.dense_units)
        with thread_limit():
            params, _ = fit(X[~test], y[~test], cfg)
            s = predict(X[test], params)
        row = {"variant": variant, "roc_auc": roc_auc(s, y[test])[1],
               "pr_auc": pr_auc(s, y[test])[1], "seconds": round(time.perf_counter() - t0, 1)}
        print(row, flush=True)
        out.append(row)
    os.makedirs(os.path.dirname(os.path.abspath(args.out)), exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(out[0]), lineterminator="\n")
        w.writeheader()
        w.writerows(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
