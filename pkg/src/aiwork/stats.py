"""Weighted statistics used throughout the aggregation and scoring stages.

All routines accept case weights (nonnegative reals). With equal weights
they reduce exactly to their unweighted counterparts, which the test suite
pins to 1e-12.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats as _scipy_stats


def weighted_mean(x, weights=None) -> float:
    x = np.asarray(x, dtype=float)
    if weights is None:
        return float(x.mean())
    w = np.asarray(weights, dtype=float)
    return float(np.sum(w * x) / np.sum(w))


def weighted_pearson(x, y, weights=None) -> float:
    """Weighted Pearson correlation.

    r = sum(w (x-mx)(y-my)) / sqrt(sum(w (x-mx)^2) sum(w (y-my)^2))
    with weighted means mx, my. Equal weights give the plain Pearson r.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("x and y must have the same shape")
    if x.size < 2:
        raise ValueError("need at least two observations")
    if weights is None:
        w = np.ones_like(x)
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != x.shape:
            raise ValueError("weights must match x and y")
        if np.any(w < 0):
            raise ValueError("weights must be nonnegative")
    # Constant inputs have no defined correlation; report 0 before float
    # residue in the weighted mean can manufacture one.
    if np.all(x == x[0]) or np.all(y == y[0]):
        return 0.0
    dx = x - weighted_mean(x, w)
    dy = y - weighted_mean(y, w)
    cov = np.sum(w * dx * dy)
    vx = np.sum(w * dx * dx)
    vy = np.sum(w * dy * dy)
    denom = np.sqrt(vx) * np.sqrt(vy)
    if denom == 0.0:
        return 0.0
    # |r| <= 1 mathematically; float underflow in the variances can push
    # the ratio marginally past it.
    return float(min(1.0, max(-1.0, cov / denom)))


@dataclass(frozen=True)
class TTestResult:
    statistic: float
    df: float
    pvalue: float
    mean_a: float
    mean_b: float


def weighted_ttest(x_a, w_a, x_b, w_b) -> TTestResult:
    """Two-sample unequal-variance (Welch) t-test with frequency weights.

    The sum of weights in each group acts as the effective sample size:
    n_g = sum(w), weighted variance uses ddof=1, and

        t = (m_a - m_b) / sqrt(s_a^2/n_a + s_b^2/n_b)

    with Welch-Satterthwaite degrees of freedom. Constant scores in both
    groups yield t = 0 (difference of 0 over an arbitrary denominator is
    reported as 0 with pvalue 1).
    """
    x_a = np.asarray(x_a, dtype=float)
    x_b = np.asarray(x_b, dtype=float)
    w_a = np.ones_like(x_a) if w_a is None else np.asarray(w_a, dtype=float)
    w_b = np.ones_like(x_b) if w_b is None else np.asarray(w_b, dtype=float)
    n_a = float(np.sum(w_a))
    n_b = float(np.sum(w_b))
    if n_a <= 1 or n_b <= 1:
        raise ValueError("each group needs weight mass > 1")
    m_a = weighted_mean(x_a, w_a)
    m_b = weighted_mean(x_b, w_b)
    var_a = float(np.sum(w_a * (x_a - m_a) ** 2) / (n_a - 1.0))
    var_b = float(np.sum(w_b * (x_b - m_b) ** 2) / (n_b - 1.0))
    se2_a = var_a / n_a
    se2_b = var_b / n_b
    se2 = se2_a + se2_b
    if se2 == 0.0:
        return TTestResult(0.0, n_a + n_b - 2.0, 1.0, m_a, m_b)
    t = (m_a - m_b) / np.sqrt(se2)
    df = se2**2 / (se2_a**2 / (n_a - 1.0) + se2_b**2 / (n_b - 1.0))
    p = 2.0 * float(_scipy_stats.t.sf(abs(t), df))
    return TTestResult(float(t), float(df), p, m_a, m_b)


def bootstrap_share_ci(
    outcomes, n_resamples: int = 1000, confidence: float = 0.95, seed: int = 0
) -> tuple[float, float]:
    """Percentile bootstrap confidence interval for a binary share.

    `outcomes` is a sequence of 0/1 values; resampling is reproducible
    from `seed`.
    """
    outcomes = np.asarray(outcomes, dtype=float)
    if outcomes.size == 0:
        raise ValueError("cannot bootstrap an empty sample")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, outcomes.size, size=(n_resamples, outcomes.size))
    shares = outcomes[idx].mean(axis=1)
    alpha = (1.0 - confidence) / 2.0
    lo, hi = np.quantile(shares, [alpha, 1.0 - alpha])
    return float(lo), float(hi)


def average_ranks(values) -> np.ndarray:
    """Ranks 1..n with ties sharing their average rank."""
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=float)
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        ranks[order[i : j + 1]] = avg
        i = j + 1
    return ranks


def percentile_ranks(values) -> np.ndarray:
    """Average-rank percentiles spread over [0, 100].

    percentile = 100 * (rank - 1) / (n - 1); a single observation sits
    at 50.
    """
    values = np.asarray(values, dtype=float)
    n = values.size
    if n == 0:
        return np.empty(0)
    if n == 1:
        return np.array([50.0])
    return 100.0 * (average_ranks(values) - 1.0) / (n - 1.0)


def spearman(x, y) -> float:
    """Rank correlation via average ranks and Pearson."""
    return weighted_pearson(average_ranks(x), average_ranks(y))


def weighted_quantile(values, weights, q: float) -> float:
    """Step-function weighted quantile: the smallest value whose
    cumulative weight fraction reaches q."""
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if values.size == 0:
        raise ValueError("empty sample")
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    order = np.argsort(values, kind="stable")
    cum = np.cumsum(weights[order])
    total = cum[-1]
    if total <= 0:
        raise ValueError("total weight must be positive")
    idx = int(np.searchsorted(cum / total, q, side="left"))
    idx = min(idx, values.size - 1)
    return float(values[order][idx])
