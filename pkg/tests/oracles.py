"""Independent reference implementations used by the test-suite.

Nothing here imports the code under test.
"""

import itertools
import math
import sys
from collections import Counter
from dataclasses import dataclass

import numpy as np

INF = math.inf
ANY = frozenset("ACGT")
NON_G = frozenset("ACT")
G = frozenset("G")


@dataclass(frozen=True)
class Run:
    chars: frozenset
    lo: int
    hi: float


@dataclass(frozen=True)
class Group:
    body: tuple
    lo: int
    hi: float


# the four motif grammars, written out element by element
GRAMMARS = {
    "Standard": (Group((Run(G, 3, INF), Run(ANY, 1, 12)), 3, INF), Run(G, 3, INF)),
    "Bulged": (
        Group((Run(G, 1, 1), Run(NON_G, 0, 1), Run(G, 1, 1), Run(NON_G, 0, 1),
               Run(G, 1, 1), Run(ANY, 1, 3)), 3, INF),
        Run(G, 1, 1), Run(NON_G, 0, 1), Run(G, 1, 1), Run(NON_G, 0, 1), Run(G, 1, 1),
    ),
    "Irregular": (Group((Run(G, 1, 2), Run(NON_G, 1, 2)), 7, INF), Run(G, 1, 2)),
    "PQ": (Group((Run(G, 3, INF), Run(ANY, 1, 12)), 3, 3), Run(G, 3, INF)),
}


class BacktrackMatcher:
    """Greedy-first backtracking interpreter over a two-level grammar.

    Greedy quantifiers try the longest run first; a repeated group tries one
    more iteration before handing over to what follows it. Failed
    (group-count, position) states are memoised, which prunes but never
    reorders the search.
    """

    def __init__(self, grammar, s):
        self.grammar = grammar
        self.s = s
        self.memo = {}

    def _run_len(self, run, pos):
        n = 0
        s = self.s
        while n < run.hi and pos + n < len(s) and s[pos + n] in run.chars:
            n += 1
        return n

    def _seq(self, elems, i, pos, k):
        if i == len(elems):
            return k(pos)
        e = elems[i]
        if isinstance(e, Run):
            n = self._run_len(e, pos)
            for j in range(n, e.lo - 1, -1):
                r = self._seq(elems, i + 1, pos + j, k)
                if r is not None:
                    return r
            return None
        return self._rep(elems, i, e, 0, pos, k)

    def _rep(self, elems, i, grp, count, pos, k):
        ckey = count if grp.hi != INF else min(count, grp.lo)
        key = (i, ckey, pos)
        if key in self.memo:
            return self.memo[key]
        result = None
        if count < grp.hi:
            result = self._seq(
                grp.body, 0, pos,
                lambda p: self._rep(elems, i, grp, count + 1, p, k) if p != pos else None)
        if result is None and count >= grp.lo:
            result = self._seq(elems, i + 1, pos, k)
        self.memo[key] = result
        return result

    def match_at(self, pos):
        # top-level continuation is "accept", so memo entries are valid for
        # every start position
        return self._seq(self.grammar, 0, pos, lambda p: p)


def naive_scan(s, pattern_class, min_g=0):
    """Leftmost non-overlapping match spans, trying every start position."""
    old = sys.getrecursionlimit()
    sys.setrecursionlimit(max(old, 20000))
    try:
        m = BacktrackMatcher(GRAMMARS[pattern_class], s)
        out = []
        pos = 0
        while pos <= len(s):
            for start in range(pos, len(s) + 1):
                end = m.match_at(start)
                if end is not None:
                    if s[start:end].count("G") >= min_g:
                        out.append((start, end))
                    pos = end if end > start else end + 1
                    break
            else:
                break
        return out
    finally:
        sys.setrecursionlimit(old)


def dinuc_counts(s):
    return Counter(s[i:i + 2] for i in range(len(s) - 1))


def all_dinuc_arrangements(s):
    """Every distinct string with the same first base and dinucleotide multiset."""
    target = dinuc_counts(s)
    out = set()
    for p in set(itertools.permutations(s)):
        t = "".join(p)
        if t[0] == s[0] and dinuc_counts(t) == target:
            out.add(t)
    return out


def pairwise_auc(scores, labels):
    pos = [x for x, y in zip(scores, labels) if y == 1]
    neg = [x for x, y in zip(scores, labels) if y == 0]
    total = 0.0
    for p in pos:
        for n in neg:
            total += 1.0 if p > n else 0.5 if p == n else 0.0
    return total / (len(pos) * len(neg))


def every_threshold_ap(scores, labels):
    """Step-wise PR area, recomputing the confusion counts at each threshold."""
    n_pos = sum(labels)
    area = 0.0
    prev_recall = 0.0
    for thr in sorted(set(scores), reverse=True):
        tp = sum(1 for x, y in zip(scores, labels) if x >= thr and y == 1)
        fp = sum(1 for x, y in zip(scores, labels) if x >= thr and y == 0)
        recall = tp / n_pos
        precision = tp / (tp + fp)
        area += (recall - prev_recall) * precision
        prev_recall = recall
    return area


def per_base_mean(start, end, intervals):
    """Mean signal over [start, end) by walking every base."""
    total = 0.0
    for pos in range(start, end):
        for s, e, v in intervals:
            if s <= pos < e:
                total += v
                break
    return total / (end - start)


def pairwise_auc_np(scores, labels):
    """pairwise_auc over the full pos x neg comparison matrix."""
    s, y = np.asarray(scores, dtype=np.float64), np.asarray(labels)
    pos, neg = s[y == 1], s[y == 0]
    wins = (pos[:, None] > neg[None, :]).sum() + 0.5 * (pos[:, None] == neg[None, :]).sum()
    return float(wins) / (len(pos) * len(neg))


def every_threshold_ap_np(scores, labels):
    """every_threshold_ap with the confusion counts of all thresholds taken
    from one (threshold x example) comparison matrix."""
    s, y = np.asarray(scores, dtype=np.float64), np.asarray(labels)
    thr = np.unique(s)[::-1]
    above = s[None, :] >= thr[:, None]
    tp = (above & (y == 1)).sum(axis=1)
    fp = (above & (y == 0)).sum(axis=1)
    area = 0.0
    prev_recall = 0.0
    for t, f in zip(tp, fp):
        recall = t / y.sum()
        area += (recall - prev_recall) * (t / (t + f))
        prev_recall = recall
    return area
