# File Summary: Wilcoxon signed-rank test and quartile summaries.

"""
Paired-comparison statistics.

The signed-rank test drops zero differences, gives tied magnitudes their
average rank and uses the exact null distribution (subset sums of 1..n)
when n ≤ 25 and there are no ties. Otherwise it uses the normal
approximation with tie and continuity corrections.
"""

import math
from typing import Tuple

import numpy as np
from scipy.stats import norm, rankdata

from .errors import DegenerateTestError, InvalidArgumentError
from .models.schema import Alternative, WilcoxonResult

EXACT_MAX_N = 25


def _exact_counts(n: int) -> np.ndarray:
    """counts[w] = number of sign assignments of ranks 1..n with W+ = w."""
    top = n * (n + 1) // 2
    counts = np.zeros(top + 1, dtype=np.int64)
    counts[0] = 1
    for rank in range(1, n + 1):
        counts[rank:] = counts[rank:] + counts[:-rank]
    return counts


def _exact_tails(w: float, n: int) -> Tuple[float, float]:
    counts = _exact_counts(n)
    w = int(round(w))
    total = float(2**n)
    greater = int(counts[w:].sum()) / total
    less = int(counts[: w + 1].sum()) / total
    return greater, less


def _normal_tails(w: float, n: int, ranks: np.ndarray) -> Tuple[float, float]:
    mean = n * (n + 1) / 4.0
    _, tie_sizes = np.unique(ranks, return_counts=True)
    variance = n * (n + 1) * (2 * n + 1) / 24.0 - float(np.sum(tie_sizes**3 - tie_sizes)) / 48.0
    sd = math.sqrt(variance)
    greater = float(norm.sf((w - mean - 0.5) / sd))
    less = float(norm.cdf((w - mean + 0.5) / sd))
    return greater, less


def wilcoxon_signed_rank(a, b, alternative: Alternative = Alternative.GREATER) -> WilcoxonResult:
    """Signed-rank test of the paired differences a − b.

    "greater" tests whether the differences are located above zero.

    Args:
        a: first sample
        b: second sample, paired with a
        alternative: greater, less or two-sided

    Returns:
        WilcoxonResult with W+ (rank sum of positive differences).
    """
    try:
        alternative = Alternative(alternative)
    except ValueError as e:
        raise InvalidArgumentError(f"Invalid input: {e}")
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    if a.shape != b.shape:
        raise InvalidArgumentError(f"samples differ in length: {a.shape[0]} vs {b.shape[0]}")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise InvalidArgumentError("samples contain non-finite values")

    d = a - b
    d = d[d != 0]
    n = d.shape[0]
    if n == 0:
        raise DegenerateTestError("all paired differences are zero")

    ranks = rankdata(np.abs(d), method="average")
    statistic = float(ranks[d > 0].sum())
    has_ties = np.unique(ranks).shape[0] < n
    if n <= EXACT_MAX_N and not has_ties:
        greater, less = _exact_tails(statistic, n)
        method = "exact"
    else:
        greater, less = _normal_tails(statistic, n, ranks)
        method = "normal_approx"

    if alternative == Alternative.GREATER:
        p = greater
    elif alternative == Alternative.LESS:
        p = less
    else:
        p = min(1.0, 2.0 * min(greater, less))
    return WilcoxonResult(
        statistic=statistic,
        p_value=min(1.0, max(0.0, p)),
        n_effective=n,
        alternative=alternative,
        method=method,
    )


def quartiles(v) -> Tuple[float, float, float]:
    """(q1, median, q3) with linear interpolation between order statistics."""
    v = np.asarray(v, dtype=float).reshape(-1)
    if v.size == 0:
        raise InvalidArgumentError("quartiles of an empty vector")
    q1, q2, q3 = np.quantile(v, [0.25, 0.5, 0.75], method="linear")
    return float(q1), float(q2), float(q3)
