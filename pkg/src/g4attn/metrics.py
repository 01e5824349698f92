"""ROC and precision-recall curves, evaluation reports and their files."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from g4attn.errors import UndefinedMetric

ROC = "ROC"
PR = "PR"


@dataclass
class EvalCurve:
    kind: str
    points: np.ndarray  # (k, 2): (FPR, TPR) for ROC, (recall, precision) for PR
    thresholds: np.ndarray  # score threshold of each point; +inf for the origin
    area: float

    def recompute_area(self) -> float:
        x, y = self.points[:, 0], self.points[:, 1]
        if self.kind == ROC:
            return float(np.sum(np.diff(x) * (y[1:] + y[:-1]) / 2))
        return float(np.sum(np.diff(x) * y[1:]))


def _cumulative_counts(scores, labels):
    """TP/FP counts after each distinct threshold, scanning scores downwards."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape:
        raise ValueError("scores and labels differ in length")
    if not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be 0 or 1")
    order = np.argsort(-scores, kind="mergesort")
    s, l = scores[order], labels[order].astype(np.int64)
    # last index of each group of tied scores
    ends = np.r_[np.nonzero(np.diff(s))[0], len(s) - 1] if len(s) else np.zeros(0, int)
    tp = np.cumsum(l)[ends]
    fp = (ends + 1) - tp
    return s[ends], tp, fp


def roc_auc(scores, labels) -> tuple[EvalCurve, float]:
    """ROC curve and its trapezoidal area (equal to the Mann-Whitney
    statistic with ties counted as one half)."""
    thr, tp, fp = _cumulative_counts(scores, labels)
    P = int(tp[-1]) if len(tp) else 0
    N = int(fp[-1]) if len(fp) else 0
    if P == 0 or N == 0:
        raise UndefinedMetric("ROC AUC needs both classes")
    tp = np.r_[0, tp]
    fp = np.r_[0, fp]
    # integer numerator keeps the area exact until the final division
    num = int(np.sum(np.diff(fp) * (tp[1:] + tp[:-1])))
    area = num / (2 * P * N)
    pts = np.column_stack([fp / N, tp / P])
    return EvalCurve(ROC, pts, np.r_[np.inf, thr], area), area


def pr_auc(scores, labels) -> tuple[EvalCurve, float]:
    """Precision-recall curve with step-wise area sum((R_k - R_{k-1}) * P_k)."""
    thr, tp, fp = _cumulative_counts(scores, labels)
    P = int(tp[-1]) if len(tp) else 0
    if P == 0:
        raise UndefinedMetric("PR AUC needs at least one positive")
    recall = tp / P
    precision = tp / (tp + fp)
    area = float(np.sum(np.diff(np.r_[0.0, recall]) * precision))
    pts = np.column_stack([np.r_[0.0, recall], np.r_[1.0, precision]])
    return EvalCurve(PR, pts, np.r_[np.inf, thr], area), area


@dataclass
class EvalReport:
    roc: EvalCurve
    pr: EvalCurve
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def summary(self) -> dict[str, float]:
        return {"roc_auc": self.roc.area, "pr_auc": self.pr.area, "n": self.n,
                "tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}


def report_from_scores(scores, labels, threshold: float = 0.5) -> EvalReport:
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    roc, _ = roc_auc(scores, labels)
    pr, _ = pr_auc(scores, labels)
    pred = scores >= threshold
    pos = labels == 1
    return EvalReport(roc, pr, int(np.sum(pred & pos)), int(np.sum(pred & ~pos)),
                      int(np.sum(~pred & ~pos)), int(np.sum(~pred & pos)))


def evaluate(model, X, y) -> tuple[EvalReport, np.ndarray]:
    """Score every example with ``model`` and build the report."""
    from g4attn.nn import predict

    scores = predict(X, model)
    return report_from_scores(scores, y), scores


def write_report_csv(report: EvalReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["metric", "value"])
        for k, v in report.summary().items():
            w.writerow([k, repr(v) if isinstance(v, float) else v])


def read_report_csv(path) -> dict[str, float]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    out = {}
    for k, v in rows[1:]:
        out[k] = float(v) if k.endswith("auc") else int(v)
    return out


def write_curves_csv(report: EvalReport, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["curve", "threshold", "x", "y"])
        for curve in (report.roc, report.pr):
            for t, (x, y) in zip(curve.thresholds, curve.points):
                w.writerow([curve.kind, repr(float(t)), repr(float(x)), repr(float(y))])


def read_curves_csv(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = {}
    for kind in (ROC, PR):
        out[kind] = np.array([[float(r["x"]), float(r["y"])] for r in rows if r["curve"] == kind])
    return out


def plot_curves_svg(report: EvalReport, path, title: str = "") -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "g4attn"

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 4))
    ax1.plot(report.roc.points[:, 0], report.roc.points[:, 1], lw=1.5)
    ax1.plot([0, 1], [0, 1], ls="--", c="grey", lw=0.8)
    ax1.set(xlabel="False positive rate", ylabel="True positive rate",
            title=f"ROC (AUC = {report.roc.area:.3f})")
    ax2.step(report.pr.points[:, 0], report.pr.points[:, 1], where="pre", lw=1.5)
    ax2.set(xlabel="Recall", ylabel="Precision", ylim=(0, 1.02),
            title=f"PR (AUPRC = {report.pr.area:.3f})")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    # no date in metadata so reruns write identical files
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
