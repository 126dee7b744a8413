"""Evaluation statistics: Mann-Whitney AUC, bootstrap confidence intervals,
permutation tests, Spearman correlation and Bonferroni-corrected Welch
t-tests.  All resampling is driven by an explicit seed."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

import numpy as np
from scipy import stats as sps

from ._seeding import rng_for
from .errors import DataError

_TIE_EPS = 1e-12


class ZeroVarianceError(DataError):
    """Correlation undefined because one input has constant ranks."""


def _binary(labels) -> np.ndarray:
    y = np.asarray(labels)
    if not set(np.unique(y).tolist()) <= {0, 1}:
        raise DataError("labels must be 0/1")
    return y.astype(np.int64)


def _rank_auc(ranks: np.ndarray, y: np.ndarray) -> float:
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise DataError("AUC needs both classes")
    u = float(ranks[y == 1].sum()) - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * n_neg)


def auc(scores, labels) -> float:
    """Probability a positive outscores a negative, ties counted one half."""
    s = np.asarray(scores, dtype=np.float64)
    y = _binary(labels)
    if s.shape != y.shape:
        raise DataError(f"scores {s.shape} and labels {y.shape} differ in shape")
    return _rank_auc(sps.rankdata(s), y)


@dataclass(frozen=True)
class AucWithCi:
    auc: float
    ci_lo: float
    ci_hi: float
    p_vs_chance: float
    n_boot: int
    n_perm: int

    def stars(self) -> str:
        if self.p_vs_chance <= 0.001:
            return "**"
        if self.p_vs_chance < 0.05:
            return "*"
        return ""

    def format(self, digits: int = 3, brackets: str = "[]") -> str:
        lo, hi = brackets
        return (f"{self.auc:.{digits}f} {lo}{self.ci_lo:.{digits}f}, "
                f"{self.ci_hi:.{digits}f}{hi}{self.stars()}")


def nearest_rank(sorted_values: np.ndarray, pct: float) -> float:
    n = sorted_values.size
    rank = max(1, math.ceil(pct / 100.0 * n - 1e-9))
    return float(sorted_values[min(rank, n) - 1])


def bootstrap_aucs(scores, labels, n_boot: int = 1000, rng_seed: int = 0) -> np.ndarray:
    s = np.asarray(scores, dtype=np.float64)
    y = _binary(labels)
    auc(s, y)
    rng = rng_for(rng_seed, "bootstrap_ci")
    n = s.size
    idx = rng.integers(0, n, size=(n_boot, n))
    for i in range(n_boot):
        # redraw single-class resamples
        while y[idx[i]].min() == y[idx[i]].max():
            idx[i] = rng.integers(0, n, size=n)
    ys = y[idx]
    ranks = sps.rankdata(s[idx], axis=1)
    n_pos = ys.sum(axis=1)
    u = (ranks * ys).sum(axis=1) - n_pos * (n_pos + 1) / 2.0
    return u / (n_pos * (n - n_pos))


def bootstrap_ci(scores, labels, n_boot: int = 1000, rng_seed: int = 0,
                 level: float = 0.95) -> tuple[float, float]:
    """Nearest-rank percentile interval of resampled AUCs."""
    values = np.sort(bootstrap_aucs(scores, labels, n_boot, rng_seed))
    tail = (1.0 - level) / 2.0 * 100.0
    return nearest_rank(values, tail), nearest_rank(values, 100.0 - tail)


def perm_test_vs_chance(scores, labels, n_perm: int = 1000, rng_seed: int = 0,
                        exact: bool = False) -> float:
    """One-sided permutation p-value for AUC > 0.5 with the plus-one convention.

    ``exact`` enumerates every distinct label assignment instead of sampling.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = _binary(labels)
    ranks = sps.rankdata(s)
    observed = _rank_auc(ranks, y)
    n, n_pos = y.size, int(y.sum())
    if exact:
        perms = np.zeros((math.comb(n, n_pos), n), dtype=np.int64)
        for row, pos in enumerate(itertools.combinations(range(n), n_pos)):
            perms[row, list(pos)] = 1
    else:
        if n_perm < 1:
            raise DataError("n_perm must be >= 1")
        perms = rng_for(rng_seed, "perm_vs_chance").permuted(np.tile(y, (n_perm, 1)), axis=1)
    u = perms @ ranks - n_pos * (n_pos + 1) / 2.0
    null = u / (n_pos * (n - n_pos))
    hits = int(np.count_nonzero(null >= observed - _TIE_EPS))
    return (1 + hits) / (1 + perms.shape[0])


def auc_with_ci(scores, labels, n_boot: int = 1000, n_perm: int = 1000,
                rng_seed: int = 0) -> AucWithCi:
    a = auc(scores, labels)
    lo, hi = bootstrap_ci(scores, labels, n_boot, rng_seed)
    # percentile intervals can exclude the point estimate on skewed data
    lo, hi = min(lo, a), max(hi, a)
    p = perm_test_vs_chance(scores, labels, n_perm, rng_seed)
    return AucWithCi(a, lo, hi, p, n_boot, n_perm)


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    a = a - a.mean()
    b = b - b.mean()
    den = math.sqrt(float(a @ a) * float(b @ b))
    if den == 0.0:
        raise ZeroVarianceError("undefined (zero variance)")
    return float(a @ b) / den


def spearman(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DataError("spearman needs two equal-length vectors")
    if x.size < 3:
        raise DataError("spearman needs at least 3 observations")
    return _pearson(sps.rankdata(x), sps.rankdata(y))


class CorrelationComparison(NamedTuple):
    rho_1: float
    rho_2: float
    delta: float
    p: float


def perm_compare_correlations(pred, q1, q2, n_perm: int = 1000,
                              rng_seed: int = 0) -> CorrelationComparison:
    """Two-sided test of rho(pred, q1) == rho(pred, q2).

    The null swaps each subject's two scores with probability one half.
    """
    pred = np.asarray(pred, dtype=np.float64)
    q1 = np.asarray(q1, dtype=np.float64)
    q2 = np.asarray(q2, dtype=np.float64)
    if not pred.shape == q1.shape == q2.shape:
        raise DataError("pred, q1 and q2 must be aligned vectors")
    r1, r2 = spearman(pred, q1), spearman(pred, q2)
    observed = r1 - r2
    rng = rng_for(rng_seed, "compare_correlations")
    hits = 0
    for _ in range(n_perm):
        swap = rng.random(pred.size) < 0.5
        a = np.where(swap, q2, q1)
        b = np.where(swap, q1, q2)
        try:
            delta = spearman(pred, a) - spearman(pred, b)
        except ZeroVarianceError:
            delta = 0.0
        if abs(delta) >= abs(observed) - _TIE_EPS:
            hits += 1
    return CorrelationComparison(r1, r2, observed, (1 + hits) / (1 + n_perm))


@dataclass(frozen=True)
class TTestResult:
    pair: tuple
    t: float
    p_raw: float
    p_adj: float
    significant: bool


def ttest_bonferroni(groups: Mapping | Sequence, comparisons: Sequence[tuple],
                     alpha: float = 0.05) -> list[TTestResult]:
    """Welch two-sample t-tests with Bonferroni adjustment over ``comparisons``."""
    out = []
    m = len(comparisons)
    for a_key, b_key in comparisons:
        a = np.asarray(groups[a_key], dtype=np.float64)
        b = np.asarray(groups[b_key], dtype=np.float64)
        if a.size < 2 or b.size < 2:
            raise DataError(f"t-test {a_key} vs {b_key}: each group needs >= 2 values")
        if a.var() == 0 and b.var() == 0:
            # constant groups: identical means carry no evidence, distinct means are separated exactly
            diff = float(a.mean() - b.mean())
            t, p = (0.0, 1.0) if diff == 0 else (math.copysign(math.inf, diff), 0.0)
        else:
            res = sps.ttest_ind(a, b, equal_var=False)
            t, p = float(res.statistic), float(res.pvalue)
        p_adj = min(1.0, p * m)
        out.append(TTestResult((a_key, b_key), t, p, p_adj, p_adj < alpha))
    return out
