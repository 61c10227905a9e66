from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

Z95 = 1.959963984540054


@dataclass
class EstimateWithCI:
    estimate: float
    ci_low: float
    ci_high: float
    n: int

    def to_dict(self) -> dict:
        return asdict(self)


def wilson(successes: int, n: int, z: float = Z95) -> EstimateWithCI:
    """Proportion with a Wilson score interval."""
    if n == 0:
        return EstimateWithCI(float("nan"), 0.0, 1.0, 0)
    p = successes / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    lo, hi = max(0.0, centre - half), min(1.0, centre + half)
    # guard the rounding at p = 0 or 1
    return EstimateWithCI(p, min(lo, p), max(hi, p), n)


def mean_ci(total: float, total_sq: float, n: int, z: float = Z95) -> EstimateWithCI:
    """Mean with a normal interval, from running sums."""
    if n == 0:
        return EstimateWithCI(float("nan"), float("nan"), float("nan"), 0)
    m = total / n
    var = max(total_sq / n - m * m, 0.0) * n / max(n - 1, 1)
    half = z * math.sqrt(var / n)
    return EstimateWithCI(m, m - half, m + half, n)


def binomial_se(p: float, n: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 0.0) / n) if n else float("nan")


def one_sided_greater(k1: int, n1: int, k2: int, n2: int) -> float:
    """p-value of Fisher's exact test for proportion 1 > proportion 2."""
    table = [[k1, n1 - k1], [k2, n2 - k2]]
    return float(stats.fisher_exact(table, alternative="greater").pvalue)


def chi_square_pvalue(observed, expected_probs) -> float:
    observed = np.asarray(observed, dtype=float)
    probs = np.asarray(expected_probs, dtype=float)
    keep = probs > 0
    if np.any(observed[~keep] > 0):
        return 0.0
    exp = probs[keep] * observed.sum()
    if keep.sum() < 2:
        return 1.0
    return float(stats.chisquare(observed[keep], exp).pvalue)
