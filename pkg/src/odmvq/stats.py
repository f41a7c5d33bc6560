"""Similarity tests between methods: an F test on one index, a chi-square test across several.

Index statistics arrive as (mean, mean absolute deviation, count) triples.
The F test converts the mean deviation to a standard deviation with the
normal-distribution factor ``sqrt(pi/2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import special

__all__ = [
    "StatsError",
    "IndexSample",
    "SimilarityResult",
    "MD_TO_SD",
    "f_cdf",
    "f_sf",
    "chi2_cdf",
    "chi2_sf",
    "f_test",
    "chi2_statistic",
    "chi2_similarity",
    "summarize",
]

MD_TO_SD = math.sqrt(math.pi / 2.0)


class StatsError(ValueError):
    pass


@dataclass(frozen=True)
class IndexSample:
    mean: float
    mean_deviation: float
    count: int = 1

    def __post_init__(self):
        if self.mean_deviation < 0:
            raise StatsError("mean deviation must be non-negative")
        if self.count < 1:
            raise StatsError("count must be positive")


@dataclass(frozen=True)
class SimilarityResult:
    statistic: float
    p_value: float
    degrees_of_freedom: int | tuple


def summarize(values: Sequence[float]) -> IndexSample:
    """Mean and mean absolute deviation about the mean."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise StatsError("cannot summarize an empty sample")
    mean = float(v.mean())
    return IndexSample(mean, float(np.abs(v - mean).mean()), int(v.size))


def f_cdf(x: float, d1: float, d2: float) -> float:
    if x <= 0:
        return 0.0
    return float(special.betainc(d1 / 2.0, d2 / 2.0, d1 * x / (d1 * x + d2)))


def f_sf(x: float, d1: float, d2: float) -> float:
    if x <= 0:
        return 1.0
    return float(special.betainc(d2 / 2.0, d1 / 2.0, d2 / (d1 * x + d2)))


def chi2_cdf(x: float, k: float) -> float:
    if x <= 0:
        return 0.0
    return float(special.gammainc(k / 2.0, x / 2.0))


def chi2_sf(x: float, k: float) -> float:
    if x <= 0:
        return 1.0
    return float(special.gammaincc(k / 2.0, x / 2.0))


def f_test(a: IndexSample, b: IndexSample, md_factor: float = MD_TO_SD) -> SimilarityResult:
    """Two-sided variance-ratio test; the p-value is read as the degree of similarity."""
    var_a = (md_factor * a.mean_deviation) ** 2
    var_b = (md_factor * b.mean_deviation) ** 2
    if var_a <= 0 or var_b <= 0:
        raise StatsError("F test needs positive variances on both sides")
    d1 = max(a.count - 1, 1)
    d2 = max(b.count - 1, 1)
    ratio = var_a / var_b
    if ratio == 1.0 and d1 == d2:
        # symmetric case: the CDF at 1 is exactly one half
        return SimilarityResult(1.0, 1.0, (d1, d2))
    p = 2.0 * min(f_cdf(ratio, d1, d2), f_sf(ratio, d1, d2))
    return SimilarityResult(ratio, min(1.0, p), (d1, d2))


def chi2_statistic(observed: Sequence[float], expected: Sequence[float]) -> SimilarityResult:
    """Pearson statistic over raw cells with ``len - 1`` degrees of freedom."""
    o = np.asarray(observed, dtype=np.float64)
    e = np.asarray(expected, dtype=np.float64)
    if o.shape != e.shape or o.ndim != 1 or o.size < 2:
        raise StatsError("need two equal-length sequences of at least two cells")
    if np.any(e == 0):
        raise StatsError("expected cell is zero")
    stat = float(np.sum((o - e) ** 2 / e))
    dof = o.size - 1
    return SimilarityResult(stat, chi2_sf(stat, dof), dof)


def _cells(samples: Sequence[IndexSample]) -> list:
    cells = []
    for s in samples:
        cells.extend([s.mean, s.mean_deviation])
    return cells


def chi2_similarity(observed: Sequence[IndexSample], expected: Sequence[IndexSample]) -> SimilarityResult:
    """Chi-square similarity over interleaved (mean, deviation) cells of several indices."""
    if len(observed) != len(expected):
        raise StatsError("observed and expected must list the same indices")
    return chi2_statistic(_cells(observed), _cells(expected))
