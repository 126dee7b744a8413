"""Trial selection by stimulus/response condition, per-subject ERPs and
contrasts between trial groups."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._seeding import rng_for
from .dataset import EpochedTrial, Response, Sentiment, SubjectRecord, TrialMeta, sample_times
from .errors import ConfigError, DataError, EmptySelectionError

CATEGORIES = ("sentence_sentiment", "last_word_valence", "response_type",
              "response_time", "all", "random_split")
SIDES = ("a", "b", "single")

_SIDE_VALUES = {
    "sentence_sentiment": {"a": Sentiment.POSITIVE, "b": Sentiment.NEGATIVE},
    "last_word_valence": {"a": Sentiment.POSITIVE, "b": Sentiment.NEGATIVE},
    "response_type": {"a": Response.AGREE, "b": Response.DISAGREE},
}


@dataclass(frozen=True)
class GroupingSpec:
    """Which trials of a subject to use.

    ``value`` is only read for ``side="single"`` selections on the
    sentiment/valence/response categories (e.g. neutral sentences).
    """
    category: str
    side: str = "single"
    rt_fraction: float = 0.25
    rng_seed: int = 0
    value: str | None = None

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise ConfigError(f"unknown grouping category {self.category!r}; expected one of {CATEGORIES}")
        if self.side not in SIDES:
            raise ConfigError(f"unknown grouping side {self.side!r}; expected one of {SIDES}")
        if not 0 < self.rt_fraction <= 0.5:
            raise ConfigError(f"rt_fraction must lie in (0, 0.5], got {self.rt_fraction}")
        if self.category == "all" and self.side != "single":
            raise ConfigError("category 'all' only supports side 'single'")
        if self.category in ("response_time", "random_split") and self.side == "single":
            raise ConfigError(f"category {self.category!r} needs side 'a' or 'b'")
        if self.side == "single" and self.category in _SIDE_VALUES:
            if self.value is None:
                raise ConfigError(f"single-side {self.category} selection needs a value")
            enum_cls = Response if self.category == "response_type" else Sentiment
            try:
                enum_cls(self.value)
            except ValueError:
                raise ConfigError(f"invalid value {self.value!r} for {self.category}") from None

    def describe(self) -> str:
        if self.side == "single":
            return self.category if self.value is None else f"{self.category}={self.value}"
        return f"{self.category}:{self.side}"


def _selected_value(spec: GroupingSpec):
    if spec.side == "single":
        enum_cls = Response if spec.category == "response_type" else Sentiment
        return enum_cls(spec.value)
    return _SIDE_VALUES[spec.category][spec.side]


def _sentence_halves(metas: Sequence[TrialMeta], seed: int) -> tuple[set, set]:
    sentences = sorted({m.sentence_id for m in metas})
    order = rng_for(seed, "random_split").permutation(len(sentences))
    half = len(sentences) // 2
    first = {sentences[i] for i in order[:half]}
    return first, set(sentences) - first


def select_indices(metas: Sequence[TrialMeta], spec: GroupingSpec,
                   subject_id: str = "") -> np.ndarray:
    """Indices (ascending) of the trials matching ``spec``."""
    cat = spec.category
    if cat == "all":
        idx = list(range(len(metas)))
    elif cat in ("sentence_sentiment", "last_word_valence"):
        field = "sentiment" if cat == "sentence_sentiment" else "last_word_valence"
        target = _selected_value(spec)
        idx = [i for i, m in enumerate(metas) if getattr(m, field) is target]
    elif cat == "response_type":
        target = _selected_value(spec)
        idx = [i for i, m in enumerate(metas) if m.response is target]
    elif cat == "response_time":
        responded = [i for i, m in enumerate(metas)
                     if m.responded and m.response_time_ms is not None]
        # capped at n//2 so the slow and fast sides never share a trial
        k = min(math.ceil(spec.rt_fraction * len(responded) - 1e-12), len(responded) // 2)
        # one ranking, slowest first; ties keep storage order, so the slow
        # side takes the earlier and the fast side the later of tied trials
        ranked = sorted(responded, key=lambda i: (-metas[i].response_time_ms, i))
        idx = sorted(ranked[:k] if spec.side == "a" else ranked[len(ranked) - k:])
    else:  # random_split, by sentence so both presentations stay together
        first, second = _sentence_halves(metas, spec.rng_seed)
        chosen = first if spec.side == "a" else second
        idx = [i for i, m in enumerate(metas) if m.sentence_id in chosen]
    if not idx:
        raise EmptySelectionError(f"subject {subject_id or '?'}: no trials match {spec.describe()}")
    return np.asarray(idx, dtype=int)


def select_trials(subject: SubjectRecord, spec: GroupingSpec) -> list[EpochedTrial]:
    trials = subject.trials
    return [trials[i] for i in select_indices(subject.meta, spec, subject.subject_id)]


@dataclass(frozen=True, eq=False)
class ErpSeries:
    subject_id: str
    data: np.ndarray
    n_trials_averaged: int
    grouping: str
    sample_rate_hz: float
    epoch_start_ms: float

    @property
    def times_ms(self) -> np.ndarray:
        return sample_times(self.data.shape[-1], self.sample_rate_hz, self.epoch_start_ms)


def compute_erp(trials: Sequence[EpochedTrial], subject_id: str = "",
                grouping: str = "") -> ErpSeries:
    """Elementwise mean over ``trials``."""
    if not trials:
        raise EmptySelectionError(f"subject {subject_id or '?'}: no trials to average")
    shape = trials[0].data.shape
    rate, start = trials[0].sample_rate_hz, trials[0].epoch_start_ms
    for t in trials[1:]:
        if t.data.shape != shape or t.sample_rate_hz != rate or t.epoch_start_ms != start:
            raise DataError(f"subject {subject_id or '?'}: trials differ in shape or timing")
    data = np.mean(np.stack([np.asarray(t.data, dtype=np.float64) for t in trials]), axis=0)
    return ErpSeries(subject_id, data, len(trials), grouping, rate, start)


def contrast(erp_a: ErpSeries, erp_b: ErpSeries) -> ErpSeries:
    if erp_a.subject_id != erp_b.subject_id:
        raise DataError(f"cannot contrast ERPs of subjects {erp_a.subject_id} and {erp_b.subject_id}")
    if (erp_a.data.shape != erp_b.data.shape or erp_a.sample_rate_hz != erp_b.sample_rate_hz
            or erp_a.epoch_start_ms != erp_b.epoch_start_ms):
        raise DataError(f"subject {erp_a.subject_id}: contrasted ERPs differ in shape or timing")
    return ErpSeries(erp_a.subject_id, erp_a.data - erp_b.data,
                     min(erp_a.n_trials_averaged, erp_b.n_trials_averaged),
                     f"({erp_a.grouping})-({erp_b.grouping})",
                     erp_a.sample_rate_hz, erp_a.epoch_start_ms)


def behavioral_features(subject: SubjectRecord) -> np.ndarray:
    """Agree/disagree rates to positive and negative sentences.

    ``[agree|pos, disagree|pos, agree|neg, disagree|neg]``, each divided by
    the number of responded trials.
    """
    responded = [m for m in subject.meta if m.responded]
    if not responded:
        raise DataError(f"subject {subject.subject_id}: no responded trials")
    counts = np.zeros(4)
    for m in responded:
        if m.sentiment is Sentiment.POSITIVE:
            counts[0 if m.response is Response.AGREE else 1] += 1
        elif m.sentiment is Sentiment.NEGATIVE:
            counts[2 if m.response is Response.AGREE else 3] += 1
    return counts / len(responded)


@dataclass(frozen=True)
class Condition:
    """A single trial grouping, or the contrast ``first - second``."""
    first: GroupingSpec
    second: GroupingSpec | None = None
    label: str = ""

    @property
    def is_contrast(self) -> bool:
        return self.second is not None

    def describe(self) -> str:
        if self.label:
            return self.label
        if self.second is None:
            return self.first.describe()
        return f"({self.first.describe()})-({self.second.describe()})"

    def indices(self, subject: SubjectRecord) -> tuple[np.ndarray, np.ndarray | None]:
        first = select_indices(subject.meta, self.first, subject.subject_id)
        second = None
        if self.second is not None:
            second = select_indices(subject.meta, self.second, subject.subject_id)
        return first, second


def pair(category: str, trial_type: str, rt_fraction: float = 0.25, rng_seed: int = 0,
         value: str | None = None) -> Condition:
    """Condition for ``trial_type`` in {"a", "b", "contrast", "single"}."""
    if trial_type == "contrast":
        return Condition(GroupingSpec(category, "a", rt_fraction, rng_seed),
                         GroupingSpec(category, "b", rt_fraction, rng_seed))
    return Condition(GroupingSpec(category, trial_type, rt_fraction, rng_seed, value))


# Rows of the results table: (condition block, trial type label, category, trial type)
TABLE1_ROWS = (
    ("Sentence Sentiment", "Positive", "sentence_sentiment", "a"),
    ("Sentence Sentiment", "Negative", "sentence_sentiment", "b"),
    ("Sentence Sentiment", "Contrasting", "sentence_sentiment", "contrast"),
    ("Last Word Valence", "Positive", "last_word_valence", "a"),
    ("Last Word Valence", "Negative", "last_word_valence", "b"),
    ("Last Word Valence", "Contrasting", "last_word_valence", "contrast"),
    ("Response Type", "Agree", "response_type", "a"),
    ("Response Type", "Disagree", "response_type", "b"),
    ("Response Type", "Contrasting", "response_type", "contrast"),
    ("Response Time", "Slow", "response_time", "a"),
    ("Response Time", "Fast", "response_time", "b"),
    ("Response Time", "Contrasting", "response_time", "contrast"),
    ("Baseline", "All Sentences", "all", "single"),
    ("Baseline", "Random Contrasting", "random_split", "contrast"),
)
