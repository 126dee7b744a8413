"""Per-trial preprocessing: baseline z-scoring, block-mean decimation,
MVPA window averaging and time/channel restriction.

Every function has an array form working on the last (time) axis of any
``(..., channels, samples)`` array, and a trial form wrapping it for
:class:`~eegdecode.dataset.EpochedTrial`.  Outputs are float64.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import ChannelLayout, EpochedTrial
from .errors import ConfigError, EmptySelectionError

_EPS = 1e-9


@dataclass(frozen=True)
class PrepConfig:
    baseline_window_ms: tuple[float, float] = (-200.0, 0.0)
    target_rate_hz: float | None = None
    mvpa_window_ms: float = 10.0
    mvpa_stride_ms: float | None = None  # None: stride equals the window (non-overlapping)
    std_floor: float = 1e-10

    def __post_init__(self):
        lo, hi = self.baseline_window_ms
        if not lo < hi:
            raise ConfigError(f"baseline_window_ms must satisfy start < end, got {self.baseline_window_ms}")
        if self.target_rate_hz is not None and self.target_rate_hz <= 0:
            raise ConfigError("target_rate_hz must be positive")
        if self.mvpa_window_ms <= 0:
            raise ConfigError("mvpa_window_ms must be positive")
        if self.mvpa_stride_ms is not None and self.mvpa_stride_ms <= 0:
            raise ConfigError("mvpa_stride_ms must be positive")
        if self.std_floor <= 0:
            raise ConfigError("std_floor must be positive")


def sample_slice(n_samples: int, rate_hz: float, start_ms: float,
                 window_ms: tuple[float, float]) -> slice:
    """Samples with ``window[0] <= t < window[1]``."""
    period = 1000.0 / rate_hz
    lo = math.ceil((window_ms[0] - start_ms) / period - _EPS)
    hi = math.ceil((window_ms[1] - start_ms) / period - _EPS)
    return slice(min(max(lo, 0), n_samples), min(max(hi, 0), n_samples))


def zscore_baseline_array(data: np.ndarray, rate_hz: float, start_ms: float,
                          window_ms=(-200.0, 0.0), std_floor: float = 1e-10) -> np.ndarray:
    n = data.shape[-1]
    end_ms = start_ms + n * 1000.0 / rate_hz
    if window_ms[0] < start_ms - _EPS or window_ms[1] > end_ms + _EPS:
        raise ConfigError(
            f"baseline window {tuple(window_ms)} ms lies outside the epoch [{start_ms}, {end_ms}) ms")
    sl = sample_slice(n, rate_hz, start_ms, window_ms)
    if sl.stop - sl.start < 2:
        raise ConfigError(f"baseline window {tuple(window_ms)} ms holds fewer than 2 samples")
    x = np.asarray(data, dtype=np.float64)
    base = x[..., sl]
    mu = base.mean(axis=-1, keepdims=True)
    sd = base.std(axis=-1, keepdims=True)
    sd = np.where(sd < std_floor, 1.0, sd)
    return (x - mu) / sd


def baseline_zscore(trial: EpochedTrial, cfg: PrepConfig = PrepConfig()) -> EpochedTrial:
    """Z-score every channel against its own baseline mean and population std."""
    out = zscore_baseline_array(trial.data, trial.sample_rate_hz, trial.epoch_start_ms,
                                cfg.baseline_window_ms, cfg.std_floor)
    return trial.replace(data=out)


def decimation_factor(source_hz: float, target_hz: float) -> int:
    ratio = source_hz / target_hz
    k = round(ratio)
    if k < 1 or abs(ratio - k) > 1e-9 * max(1.0, ratio):
        raise ConfigError(f"cannot decimate {source_hz} Hz to {target_hz} Hz: ratio {ratio} is not an integer")
    return k


def block_mean(data: np.ndarray, k: int, stride: int | None = None) -> np.ndarray:
    """Means over length-``k`` blocks along the last axis, advancing ``stride`` samples.

    Trailing samples that do not fill a block are dropped.
    """
    x = np.asarray(data, dtype=np.float64)
    n = x.shape[-1]
    stride = k if stride is None else stride
    if k < 1 or stride < 1:
        raise ConfigError("block length and stride must be >= 1")
    if stride == k:
        m = n // k
        return x[..., : m * k].reshape(*x.shape[:-1], m, k).mean(axis=-1)
    if n < k:
        return x[..., :0]
    windows = np.lib.stride_tricks.sliding_window_view(x, k, axis=-1)[..., ::stride, :]
    return windows.mean(axis=-1)


def resample(trial: EpochedTrial, target_rate_hz: float) -> EpochedTrial:
    k = decimation_factor(trial.sample_rate_hz, target_rate_hz)
    return trial.replace(data=block_mean(trial.data, k), sample_rate_hz=trial.sample_rate_hz / k)


def window_samples(window_ms: float, rate_hz: float) -> int:
    period = 1000.0 / rate_hz
    if window_ms < period - _EPS:
        raise ConfigError(f"window {window_ms} ms is shorter than one sample period ({period} ms)")
    return int(round(window_ms * rate_hz / 1000.0))


def window_average_array(data: np.ndarray, rate_hz: float, window_ms: float,
                         stride_ms: float | None = None) -> tuple[np.ndarray, float]:
    """Returns the averaged array and its new sampling rate."""
    k = window_samples(window_ms, rate_hz)
    s = k if stride_ms is None else window_samples(stride_ms, rate_hz)
    return block_mean(data, k, s), rate_hz / s


def window_average(trial: EpochedTrial, window_ms: float,
                   stride_ms: float | None = None) -> EpochedTrial:
    out, rate = window_average_array(trial.data, trial.sample_rate_hz, window_ms, stride_ms)
    return trial.replace(data=out, sample_rate_hz=rate)


def restrict(trial: EpochedTrial, time_ms: tuple[float, float] | None = None,
             channels=None, regions=None, layout: ChannelLayout | None = None) -> EpochedTrial:
    """Sub-matrix for ``time_ms[0] <= t < time_ms[1]`` and the chosen channels.

    ``channels`` takes names (needs ``layout``) or indices; ``regions``
    takes region names and needs ``layout``.  Channel order is preserved.
    The epoch start moves to the first retained sample.
    """
    data = trial.data
    start_ms = trial.epoch_start_ms
    if channels is not None or regions is not None:
        if layout is None:
            if regions is not None or any(not isinstance(c, (int, np.integer)) for c in channels):
                raise ConfigError("selecting channels by name or region needs a layout")
            idx = np.asarray(sorted(set(int(c) for c in channels)), dtype=int)
        else:
            idx = layout.indices(channels, regions)
        if idx.size == 0:
            raise EmptySelectionError(f"channel selection {channels or regions} is empty")
        data = data[idx]
    if time_ms is not None:
        sl = sample_slice(data.shape[-1], trial.sample_rate_hz, trial.epoch_start_ms, time_ms)
        if sl.stop <= sl.start:
            raise EmptySelectionError(f"time window {tuple(time_ms)} ms selects no samples")
        data = data[:, sl]
        start_ms = trial.epoch_start_ms + sl.start * 1000.0 / trial.sample_rate_hz
    return EpochedTrial(trial.meta, data, trial.sample_rate_hz, start_ms)
