"""Time-resolved between-group decoding of subject ERPs.

At every timepoint a sparse logistic regression is trained on the
channel vectors of all but one subject and scores the held-out subject
(leave-one-subject-out).  Held-out scores are pooled into one AUC per
seed and timepoint, and every fitted model's non-zero support is tallied
for channel importance maps.
"""
from __future__ import annotations

import logging
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from . import logreg
from ._seeding import derive_seed
from .dataset import Dataset
from .grouping import Condition, ErpSeries
from .prep import PrepConfig, decimation_factor, block_mean, window_average_array, zscore_baseline_array
from .logreg import FitConfig
from .stats import auc
from .errors import ConfigError, DataError, EmptySelectionError

log = logging.getLogger(__name__)

SCORES = ("decision", "probability")


@dataclass(frozen=True, eq=False)
class DecodingTimeSeries:
    timepoints_ms: np.ndarray
    auc_per_seed: np.ndarray      # (seeds, timepoints)
    support_counts: np.ndarray    # (channels, timepoints)
    n_models: np.ndarray          # (timepoints,)
    seeds: tuple[int, ...]
    subject_ids: tuple[str, ...]
    lam: float
    score: str = "decision"
    channels: tuple[str, ...] | None = None
    heldout_scores: np.ndarray | None = field(default=None, repr=False)  # (seeds, subjects, timepoints)

    @property
    def mean_auc(self) -> np.ndarray:
        return self.auc_per_seed.mean(axis=0)

    def rows(self) -> list[tuple[float, int, float]]:
        """``(timepoint_ms, seed, auc)`` rows, timepoint-major."""
        out = []
        for t, ms in enumerate(self.timepoints_ms):
            for s, seed in enumerate(self.seeds):
                out.append((float(ms), int(seed), float(self.auc_per_seed[s, t])))
        return out


@dataclass(frozen=True, eq=False)
class ChannelImportanceMap:
    proportion: np.ndarray
    cluster_window_ms: tuple[float, float]
    n_timepoints: int
    channels: tuple[str, ...] | None = None


def build_erps(ds: Dataset, condition: Condition | None = None,
               prep: PrepConfig = PrepConfig(),
               excluded: list | None = None) -> dict[str, ErpSeries]:
    """Per-subject MVPA inputs.

    Trials are baseline z-scored, optionally decimated to
    ``prep.target_rate_hz``, averaged over the condition's trials (or all
    trials), contrasted if the condition is a contrast, and finally
    window-averaged to the MVPA grid.  Subjects without matching trials
    raise, or are skipped and recorded as ``(subject_id, reason)`` in
    ``excluded`` when a list is passed.
    """
    out = {}
    for subj in ds.subjects:
        if condition is not None:
            try:
                first, second = condition.indices(subj)
            except EmptySelectionError as exc:
                if excluded is None:
                    raise
                excluded.append((subj.subject_id, str(exc)))
                continue
        data = zscore_baseline_array(subj.data, subj.sample_rate_hz, subj.epoch_start_ms,
                                     prep.baseline_window_ms, prep.std_floor)
        rate = subj.sample_rate_hz
        if prep.target_rate_hz is not None:
            k = decimation_factor(rate, prep.target_rate_hz)
            data = block_mean(data, k)
            rate = rate / k
        if condition is None:
            erp, n_avg, label = data.mean(axis=0), data.shape[0], "all"
        else:
            erp, n_avg = data[first].mean(axis=0), len(first)
            if second is not None:
                erp = erp - data[second].mean(axis=0)
                n_avg = min(n_avg, len(second))
            label = condition.describe()
        erp, rate = window_average_array(erp, rate, prep.mvpa_window_ms, prep.mvpa_stride_ms)
        out[subj.subject_id] = ErpSeries(subj.subject_id, erp, n_avg, label, rate, subj.epoch_start_ms)
    return out


def group_labels(ds: Dataset, positive=("D", "S"), negative=("C",)) -> dict[str, int]:
    """1 for subjects in ``positive`` groups, 0 for ``negative``; others are left out."""
    pos = {str(g) for g in positive}
    neg = {str(g) for g in negative}
    if pos & neg:
        raise ConfigError(f"groups {sorted(pos & neg)} are on both sides")
    out = {}
    for subj in ds.subjects:
        g = subj.group.value
        if g in pos:
            out[subj.subject_id] = 1
        elif g in neg:
            out[subj.subject_id] = 0
    return out


def stack_erps(erps: Mapping[str, ErpSeries], labels: Mapping[str, int]):
    """Subjects sorted by id -> ``(ids, X (n, channels, times), y, times_ms)``."""
    ids = sorted(set(erps) & set(labels))
    missing = (set(erps) ^ set(labels))
    if missing:
        log.info("ignoring %d subject(s) lacking an ERP or a label", len(missing))
    if not ids:
        raise DataError("no subjects with both an ERP and a label")
    first = erps[ids[0]]
    shape = first.data.shape
    for sid in ids:
        e = erps[sid]
        if e.data.shape != shape or e.sample_rate_hz != first.sample_rate_hz or e.epoch_start_ms != first.epoch_start_ms:
            raise DataError(f"subject {sid}: ERP shape/timing differs from {ids[0]}")
    X = np.stack([np.asarray(erps[sid].data, dtype=np.float64) for sid in ids])
    y = np.array([int(labels[sid]) for sid in ids])
    if not set(np.unique(y).tolist()) <= {0, 1}:
        raise DataError("labels must be 0/1")
    return ids, X, y, first.times_ms


def _loso_timepoint(Xt: np.ndarray, y: np.ndarray, ids: Sequence[str], cfg: FitConfig,
                    seed: int, score: str) -> tuple[np.ndarray, np.ndarray]:
    n, n_ch = Xt.shape
    scores = np.empty(n)
    support = np.zeros(n_ch, dtype=np.int64)
    keep = np.ones(n, dtype=bool)
    for i in range(n):
        keep[i] = False
        ytr = y[keep]
        # with >= 2 subjects per class every fold keeps both classes
        assert 0 < ytr.sum() < ytr.size, "training fold lost a class"
        model = logreg.fit(Xt[keep], ytr, cfg.with_seed(derive_seed(seed, ids[i])))
        centre = Xt[keep].mean(axis=0)
        keep[i] = True
        if score == "decision":
            scores[i] = float((Xt[i] - centre) @ model.weights)
        else:
            scores[i] = float(logreg.predict_proba(model, Xt[i:i + 1])[0])
        support += model.weights != 0.0
    return scores, support


def decode_timecourse(erps: Mapping[str, ErpSeries], labels: Mapping[str, int],
                      seeds: Sequence[int] = tuple(range(10)), cfg: FitConfig = FitConfig(),
                      threads: int = 1, score: str = "decision",
                      channels: Sequence[str] | None = None) -> DecodingTimeSeries:
    """LOSO decoding at every timepoint of the (already window-averaged) ERPs.

    ``score="decision"`` ranks held-out subjects by ``w . (x - mean_train)``,
    the linear predictor without its intercept.  Each LOSO fold has a
    different class balance, so pooling intercept-bearing scores across
    folds shifts every held-out subject against its own class and drags
    null AUCs below chance; dropping the intercept avoids that, and
    centring on the training mean keeps the ranking invariant to affine
    rescaling of the inputs.  ``"probability"`` pools the predicted
    probabilities instead.
    """
    if score not in SCORES:
        raise ConfigError(f"score must be one of {SCORES}")
    seeds = tuple(int(s) for s in seeds)
    if not seeds:
        raise ConfigError("need at least one seed")
    ids, X, y, times = stack_erps(erps, labels)
    n_pos = int(y.sum())
    if n_pos < 2 or y.size - n_pos < 2:
        raise DataError(f"need >= 2 subjects per class, have {n_pos} vs {y.size - n_pos}")
    n_subj, n_ch, n_t = X.shape
    stochastic = cfg.oversample or cfg.init_jitter > 0
    if not stochastic and len(seeds) > 1:
        warnings.warn("seeds only affect oversampling and initial jitter, both disabled: "
                      "all seed runs are identical", RuntimeWarning, stacklevel=2)
    run_seeds = seeds if stochastic else seeds[:1]

    auc_out = np.empty((len(run_seeds), n_t))
    score_out = np.empty((len(run_seeds), n_subj, n_t))
    support = np.zeros((n_ch, n_t), dtype=np.int64)

    def unit(t: int) -> None:
        Xt = np.ascontiguousarray(X[:, :, t])
        for s, seed in enumerate(run_seeds):
            scores, sup = _loso_timepoint(Xt, y, ids, cfg, seed, score)
            auc_out[s, t] = auc(scores, y)
            score_out[s, :, t] = scores
            support[:, t] += sup

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(unit, range(n_t)))
    else:
        for t in range(n_t):
            unit(t)

    if not stochastic:
        auc_out = np.repeat(auc_out, len(seeds), axis=0)
        score_out = np.repeat(score_out, len(seeds), axis=0)
        support = support * len(seeds)
    n_models = np.full(n_t, n_subj * len(seeds), dtype=np.int64)
    return DecodingTimeSeries(np.asarray(times, dtype=np.float64), auc_out, support, n_models,
                              seeds, tuple(ids), cfg.lam, score,
                              tuple(channels) if channels is not None else None, score_out)


def channel_importance(dts: DecodingTimeSeries, significant_window,
                       majority: float = 0.5) -> ChannelImportanceMap:
    """Share of significant timepoints at which each channel was selected.

    A channel counts as selected at a timepoint when more than ``majority``
    of that timepoint's fold x seed models gave it a non-zero weight.
    ``significant_window`` is a boolean mask or a collection of timepoint
    indices.
    """
    n_t = dts.timepoints_ms.size
    window = np.asarray(significant_window)
    if window.dtype == bool:
        if window.shape != (n_t,):
            raise DataError(f"window mask has shape {window.shape}, expected ({n_t},)")
        idx = np.flatnonzero(window)
    else:
        idx = np.unique(window.astype(int))
        if idx.size and (idx.min() < 0 or idx.max() >= n_t):
            raise DataError("window indices outside the decoding time range")
    if idx.size == 0:
        raise DataError("significant window is empty")
    frac = dts.support_counts[:, idx] / dts.n_models[idx]
    proportion = (frac > majority).sum(axis=1) / idx.size
    step = float(np.median(np.diff(dts.timepoints_ms))) if n_t > 1 else 0.0
    window_ms = (float(dts.timepoints_ms[idx[0]]), float(dts.timepoints_ms[idx[-1]] + step))
    return ChannelImportanceMap(proportion, window_ms, int(idx.size), dts.channels)


def restrict_erps(erps: Mapping[str, ErpSeries], time_ms: tuple[float, float] | None = None,
                  channel_idx: Sequence[int] | None = None) -> dict[str, ErpSeries]:
    from .prep import sample_slice

    out = {}
    for sid, e in erps.items():
        data = e.data
        start = e.epoch_start_ms
        if channel_idx is not None:
            data = data[np.asarray(channel_idx, dtype=int)]
        if time_ms is not None:
            sl = sample_slice(data.shape[-1], e.sample_rate_hz, e.epoch_start_ms, time_ms)
            if sl.stop <= sl.start:
                raise DataError(f"time window {time_ms} selects no timepoints")
            data = data[:, sl]
            start = e.epoch_start_ms + sl.start * 1000.0 / e.sample_rate_hz
        if data.shape[0] == 0:
            raise DataError("channel selection is empty")
        out[sid] = ErpSeries(sid, data, e.n_trials_averaged, e.grouping, e.sample_rate_hz, start)
    return out


TIME_ENDS_MS = (0.0, 150.0, 300.0, 450.0, 600.0, 750.0, 900.0)
REGIONS = ("anterior", "central", "posterior")


@dataclass(frozen=True)
class AblationRow:
    axis: str      # "time_end_ms" or "region"
    value: str
    auc: float


def ablation_grid(evaluate: Callable[[tuple[float, float] | None, Sequence[str] | None], float],
                  time_ends_ms: Sequence[float] = TIME_ENDS_MS,
                  regions: Sequence[str] = REGIONS, start_ms: float = -200.0) -> list[AblationRow]:
    """Evaluate on inputs restricted to ``[start_ms, X)`` for each X, then to each region.

    ``evaluate(time_window, regions)`` returns one AUC; use
    :func:`decode_evaluator` or ``subject_clf.classification_evaluator``.
    """
    rows = []
    for end in time_ends_ms:
        if end <= start_ms:
            raise ConfigError(f"time end {end} ms must exceed start {start_ms} ms")
        rows.append(AblationRow("time_end_ms", f"{end:g}", float(evaluate((start_ms, end), None))))
    for region in regions:
        rows.append(AblationRow("region", region, float(evaluate(None, [region]))))
    return rows


def decode_window(erps: Mapping[str, ErpSeries], labels: Mapping[str, int],
                  seeds: Sequence[int] = tuple(range(10)), cfg: FitConfig = FitConfig(),
                  score: str = "decision") -> np.ndarray:
    """LOSO AUC per seed of one classifier on the flattened channel x time ERP."""
    if score not in SCORES:
        raise ConfigError(f"score must be one of {SCORES}")
    ids, X, y, _ = stack_erps(erps, labels)
    n_pos = int(y.sum())
    if n_pos < 2 or y.size - n_pos < 2:
        raise DataError(f"need >= 2 subjects per class, have {n_pos} vs {y.size - n_pos}")
    flat = np.ascontiguousarray(X.reshape(X.shape[0], -1))
    stochastic = cfg.oversample or cfg.init_jitter > 0
    seeds = tuple(int(s) for s in seeds)
    out = np.empty(len(seeds))
    for s, seed in enumerate(seeds):
        if s > 0 and not stochastic:
            out[s] = out[0]
            continue
        scores, _ = _loso_timepoint(flat, y, ids, cfg, seed, score)
        out[s] = auc(scores, y)
    return out


def decode_evaluator(erps: Mapping[str, ErpSeries], labels: Mapping[str, int], layout,
                     seeds: Sequence[int] = tuple(range(10)), cfg: FitConfig = FitConfig(),
                     threads: int = 1):
    """Evaluator for :func:`ablation_grid`: mean over seeds of the LOSO AUC of
    one classifier on the restricted, flattened ERPs (:func:`decode_window`)."""
    del threads  # a single flattened problem per grid point
    def evaluate(time_ms, regions):
        ch = layout.indices(regions=regions) if regions is not None else None
        sub = restrict_erps(erps, time_ms, ch)
        return float(decode_window(sub, labels, seeds, cfg).mean())
    return evaluate
