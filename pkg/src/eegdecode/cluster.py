"""Sign-flip cluster permutation test for AUC time series.

Each run (one AUC trace, e.g. one seed) is centred at chance and the null
distribution comes from flipping whole runs' signs and averaging.  The
cluster statistic is the summed centred mean over contiguous timepoints
whose pointwise p passes the cluster-forming threshold; family-wise error
is controlled with the maximum cluster mass of each null draw.  The test
is one-sided (above chance).
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from ._seeding import rng_for
from .errors import ConfigError, DataError

_TIE_EPS = 1e-12
MAX_ENUMERATE_RUNS = 20


@dataclass(frozen=True)
class ClusterConfig:
    n_perm: int = 1000
    alpha: float = 0.05
    cluster_threshold_p: float = 0.01
    min_cluster_ms: float = 40.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_perm < 100:
            raise ConfigError(f"n_perm must be >= 100, got {self.n_perm}")
        if not (0 < self.alpha < 1 and 0 < self.cluster_threshold_p < 1):
            raise ConfigError("alpha and cluster_threshold_p must lie in (0, 1)")
        if self.min_cluster_ms < 0:
            raise ConfigError("min_cluster_ms must be >= 0")


@dataclass(frozen=True)
class Cluster:
    start_index: int
    stop_index: int  # exclusive
    start_ms: float
    end_ms: float
    mass: float
    p_cluster: float

    def to_dict(self) -> dict:
        return {"start_ms": self.start_ms, "end_ms": self.end_ms, "mass": self.mass,
                "p_cluster": self.p_cluster, "start_index": self.start_index,
                "stop_index": self.stop_index}


@dataclass(frozen=True, eq=False)
class ClusterResult:
    times_ms: np.ndarray
    observed: np.ndarray
    pointwise_p: np.ndarray
    clusters: list[Cluster]
    significant: list[int]
    n_perm: int
    exact: bool = False
    null_max_mass: np.ndarray = field(default=None, repr=False)

    def significant_mask(self) -> np.ndarray:
        mask = np.zeros(self.times_ms.size, dtype=bool)
        for k in self.significant:
            c = self.clusters[k]
            mask[c.start_index:c.stop_index] = True
        return mask

    def largest_significant(self) -> Cluster | None:
        if not self.significant:
            return None
        return max((self.clusters[k] for k in self.significant),
                   key=lambda c: (c.stop_index - c.start_index, c.mass))

    def to_dict(self) -> dict:
        return {
            "n_perm": self.n_perm,
            "exact": self.exact,
            "clusters": [c.to_dict() for c in self.clusters],
            "significant": list(self.significant),
        }


def _time_axis(n_times: int, times_ms) -> tuple[np.ndarray, float]:
    if times_ms is None:
        # MVPA default grid: 10 ms steps
        return np.arange(n_times) * 10.0, 10.0
    times = np.asarray(times_ms, dtype=np.float64)
    if times.shape != (n_times,):
        raise DataError(f"times_ms has shape {times.shape}, expected ({n_times},)")
    step = float(np.median(np.diff(times))) if n_times > 1 else 10.0
    return times, step


def min_cluster_len(min_cluster_ms: float, step_ms: float) -> int:
    """Fewest timepoints whose duration strictly exceeds ``min_cluster_ms``."""
    return int(math.floor(min_cluster_ms / step_ms + 1e-9)) + 1


def _pvalues(values: np.ndarray, null_sorted: np.ndarray) -> np.ndarray:
    """(1 + #{null >= v}) / (1 + n_null) per timepoint; ``values`` is (k, T)."""
    n_null, n_times = null_sorted.shape
    out = np.empty(values.shape)
    for t in range(n_times):
        below = np.searchsorted(null_sorted[:, t], values[:, t] - _TIE_EPS, side="left")
        out[:, t] = (1 + n_null - below) / (1 + n_null)
    return out


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    padded = np.concatenate([[0], mask.astype(np.int8), [0]])
    edges = np.diff(padded)
    return list(zip(np.flatnonzero(edges == 1).tolist(), np.flatnonzero(edges == -1).tolist()))


def _prepare(auc_per_seed) -> np.ndarray:
    x = np.asarray(auc_per_seed, dtype=np.float64)
    if x.ndim != 2:
        raise DataError(f"expected a (runs, timepoints) matrix, got shape {x.shape}")
    if x.shape[0] < 1 or x.shape[1] < 1:
        raise DataError("need at least one run and one timepoint")
    if not np.isfinite(x).all():
        raise DataError("AUC series contains non-finite values")
    centred = x - 0.5
    # canonical run order makes the result independent of input ordering
    order = np.lexsort(centred.T[::-1])
    return np.ascontiguousarray(centred[order])


def _run_test(centred: np.ndarray, signs: np.ndarray, cfg: ClusterConfig,
              times_ms, exact: bool) -> ClusterResult:
    n_runs, n_times = centred.shape
    times, step = _time_axis(n_times, times_ms)
    observed = (np.ones((1, n_runs)) @ centred)[0] / n_runs
    null = (signs @ centred) / n_runs
    null_sorted = np.sort(null, axis=0)
    p_obs = _pvalues(observed[None, :], null_sorted)[0]
    p_null = _pvalues(null, null_sorted)
    min_len = min_cluster_len(cfg.min_cluster_ms, step)
    null_max = kernels.max_cluster_mass(null, p_null <= cfg.cluster_threshold_p, min_len)

    n_draws = signs.shape[0]
    clusters = []
    for start, stop in _runs(p_obs <= cfg.cluster_threshold_p):
        if stop - start < min_len:
            continue
        mass = float(observed[start:stop].sum())
        hits = int(np.count_nonzero(null_max >= mass - _TIE_EPS))
        clusters.append(Cluster(start, stop, float(times[start]),
                                float(times[stop - 1] + step), mass,
                                (1 + hits) / (1 + n_draws)))
    significant = [k for k, c in enumerate(clusters) if c.p_cluster <= cfg.alpha]
    return ClusterResult(times, observed, p_obs, clusters, significant, n_draws, exact, null_max)


def cluster_test(auc_per_seed, cfg: ClusterConfig = ClusterConfig(), times_ms=None) -> ClusterResult:
    """Sign-flip cluster test over a ``(runs, timepoints)`` AUC matrix.

    Sign patterns are sampled, except when ``2**runs <= n_perm``: then the
    full set is no larger than the requested sample, so every pattern is
    enumerated and the result is exact (``result.exact`` is true).
    ``times_ms`` gives the timepoint grid (defaults to 10 ms steps from 0).
    """
    if cfg.n_perm < 1:
        raise ConfigError("n_perm must be >= 1")
    centred = _prepare(auc_per_seed)
    if centred.shape[0] < 2:
        raise DataError("cluster_test needs at least 2 runs")
    n_runs = centred.shape[0]
    if 2 ** n_runs <= cfg.n_perm:
        return enumerate_null(auc_per_seed, cfg, times_ms)
    # one derived stream per permutation keeps draws schedule-independent
    signs = np.stack([rng_for(cfg.rng_seed, "cluster_signs", i).integers(0, 2, size=n_runs)
                      for i in range(cfg.n_perm)]) * 2.0 - 1.0
    return _run_test(centred, signs, cfg, times_ms, exact=False)


def enumerate_null(auc_per_seed, cfg: ClusterConfig = ClusterConfig(), times_ms=None) -> ClusterResult:
    """Same pipeline over all ``2**runs`` sign patterns (runs <= 20)."""
    centred = _prepare(auc_per_seed)
    n_runs = centred.shape[0]
    if n_runs > MAX_ENUMERATE_RUNS:
        raise DataError(f"enumeration supports at most {MAX_ENUMERATE_RUNS} runs, got {n_runs}")
    signs = np.array(list(itertools.product((1.0, -1.0), repeat=n_runs)))
    return _run_test(centred, signs, cfg, times_ms, exact=True)
