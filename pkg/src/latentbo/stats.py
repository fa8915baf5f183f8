"""One-sided Wilcoxon signed-rank test (alternative: a tends below b).

Exact p-values for up to 20 nonzero differences by dynamic programming over
the distribution of the positive-rank sum under random signs; normal
approximation with tie correction beyond that. Zero differences are dropped
(the standard reduced-sample treatment).
"""

from __future__ import annotations

import math

import numpy as np
from scipy.stats import norm, rankdata

EXACT_LIMIT = 20


def _positive_rank_sum_distribution(doubled_ranks: list[int]) -> list[int]:
    """Counts of sign assignments per achievable doubled positive-rank sum."""
    total = sum(doubled_ranks)
    counts = [0] * (total + 1)
    counts[0] = 1
    for r in doubled_ranks:
        nxt = counts.copy()  # keeping the minus sign leaves the sum unchanged
        for s in range(total - r + 1):
            if counts[s]:
                nxt[s + r] += counts[s]
        counts = nxt
    return counts


def wilcoxon_one_sided(a, b) -> float:
    """P-value for the alternative that paired values in `a` sit below `b`.

    Small positive-rank sums of d = a - b favor the alternative, so the
    p-value is the left tail P(W+ <= observed).
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired samples must be equal-length 1-d sequences")
    if a.shape[0] < 5:
        raise ValueError("need at least 5 pairs")
    d = a - b
    d = d[d != 0.0]
    n = d.shape[0]
    if n == 0:
        raise ValueError("all differences are zero; the test is undefined")

    ranks = rankdata(np.abs(d))  # average ranks for tied magnitudes
    w_plus = float(ranks[d > 0].sum())

    if n <= EXACT_LIMIT:
        doubled = [int(round(2.0 * r)) for r in ranks]
        counts = _positive_rank_sum_distribution(doubled)
        cutoff = int(round(2.0 * w_plus))
        favorable = sum(counts[: cutoff + 1])
        return favorable / float(2**n)

    mu = n * (n + 1) / 4.0
    var = n * (n + 1) * (2 * n + 1) / 24.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    var -= float(((tie_counts**3 - tie_counts) / 48.0).sum())
    if var <= 0:
        raise ValueError("zero variance after tie correction; the test is undefined")
    z = (w_plus + 0.5 - mu) / math.sqrt(var)
    return float(norm.cdf(z))
