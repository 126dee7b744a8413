"""Seeded synthetic cohorts with known group effects.

Each trial is 1/f background noise per channel, plus additive Gaussian
bumps for every matching :class:`EffectSpec`, plus white noise.  Trial
metadata (sentence, sentiment, response, reaction time) is sampled from a
:class:`BehaviorSpec`.  Every subject draws from its own stream keyed by
(seed, group, index), so cohorts can be generated and written one subject
at a time.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Iterator

import numpy as np

from ._seeding import rng_for
from .dataset import (ChannelLayout, Dataset, DatasetWriter, Gender, Group, Response,
                      Sentiment, SubjectRecord, TrialMeta, sample_times)
from .errors import ConfigError

_SENTIMENTS = (Sentiment.POSITIVE, Sentiment.NEGATIVE, Sentiment.NEUTRAL)
_META_FIELDS = ("sentiment", "last_word_valence", "response")


@dataclass(frozen=True)
class EffectSpec:
    groups_affected: tuple[str, ...]
    channels: tuple[str, ...]
    window_ms: tuple[float, float]
    amplitude: float
    condition: tuple[tuple[str, str], ...] = ()  # (meta field, token) pairs, all must match
    latency_jitter_ms: float = 0.0
    subject_sigma: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "groups_affected", tuple(Group(g).value for g in self.groups_affected))
        object.__setattr__(self, "channels", tuple(self.channels))
        object.__setattr__(self, "window_ms", tuple(float(x) for x in self.window_ms))
        cond = self.condition.items() if isinstance(self.condition, dict) else self.condition
        cond = tuple((str(k), str(v)) for k, v in cond)
        for key, _ in cond:
            if key not in _META_FIELDS:
                raise ConfigError(f"effect condition field {key!r} not in {_META_FIELDS}")
        object.__setattr__(self, "condition", cond)
        if not self.window_ms[0] < self.window_ms[1]:
            raise ConfigError(f"effect window {self.window_ms} must have start < end")
        if self.latency_jitter_ms < 0 or self.subject_sigma < 0:
            raise ConfigError("latency_jitter_ms and subject_sigma must be >= 0")

    def matches(self, meta: TrialMeta) -> bool:
        return all(getattr(meta, key).value == token for key, token in self.condition)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["condition"] = dict(self.condition)
        return d


@dataclass(frozen=True)
class BehaviorSpec:
    """Response model.

    ``agree_prob`` maps ``"<group>:<sentiment>"`` to the probability of
    agreeing (missing keys mean 0.5); ``rt_lognormal`` maps a group to the
    (mu, sigma) of log reaction time in ms.
    """
    agree_prob: dict[str, float] = field(default_factory=dict)
    rt_lognormal: dict[str, tuple[float, float]] = field(default_factory=dict)
    miss_prob: float = 0.0

    def __post_init__(self):
        for key, p in self.agree_prob.items():
            group, _, sentiment = key.partition(":")
            Group(group), Sentiment(sentiment)
            if not 0.0 <= p <= 1.0:
                raise ConfigError(f"agree_prob[{key}] = {p} is not a probability")
        if not 0.0 <= self.miss_prob < 1.0:
            raise ConfigError("miss_prob must lie in [0, 1)")

    def p_agree(self, group: Group, sentiment: Sentiment) -> float:
        return self.agree_prob.get(f"{group.value}:{sentiment.value}", 0.5)

    def rt_params(self, group: Group) -> tuple[float, float]:
        return tuple(self.rt_lognormal.get(group.value, (math.log(800.0), 0.3)))


@dataclass(frozen=True)
class SynthConfig:
    n_subjects_per_group: dict[str, int] = field(default_factory=lambda: {"C": 10, "D": 10, "S": 0})
    n_trials: int = 320
    channels: tuple[str, ...] = field(default_factory=lambda: ChannelLayout.standard(64).names)
    sample_rate_hz: float = 1000.0
    epoch_start_ms: float = -200.0
    epoch_end_ms: float = 900.0
    background_sigma: float = 1.0
    background_alpha: float = 1.0
    noise_sigma: float = 0.5
    effects: tuple[EffectSpec, ...] = ()
    behavior: BehaviorSpec = field(default_factory=BehaviorSpec)
    n_sentences: int = 160
    sentiment_mix: tuple[float, float, float] = (0.4, 0.4, 0.2)  # positive, negative, neutral
    rng_seed: int = 0

    def __post_init__(self):
        counts = {Group(g).value: int(n) for g, n in self.n_subjects_per_group.items()}
        if any(n < 0 for n in counts.values()):
            raise ConfigError("n_subjects_per_group counts must be >= 0")
        object.__setattr__(self, "n_subjects_per_group", counts)
        object.__setattr__(self, "channels", tuple(self.channels))
        effects = tuple(e if isinstance(e, EffectSpec) else EffectSpec(**e) for e in self.effects)
        object.__setattr__(self, "effects", effects)
        if isinstance(self.behavior, dict):
            object.__setattr__(self, "behavior", BehaviorSpec(**self.behavior))
        if self.n_trials < 0:
            raise ConfigError("n_trials must be >= 0")
        if self.noise_sigma <= 0:
            raise ConfigError("noise_sigma must be > 0")
        if self.background_sigma < 0:
            raise ConfigError("background_sigma must be >= 0")
        if self.n_sentences < 1:
            raise ConfigError("n_sentences must be >= 1")
        if not self.epoch_end_ms > self.epoch_start_ms:
            raise ConfigError("epoch_end_ms must exceed epoch_start_ms")
        mix = np.asarray(self.sentiment_mix, dtype=float)
        if mix.shape != (3,) or (mix < 0).any() or mix.sum() <= 0:
            raise ConfigError("sentiment_mix needs three non-negative weights")
        layout = self.layout
        for e in effects:
            missing = set(e.channels) - set(layout.names)
            if missing:
                raise ConfigError(f"effect channels not in layout: {sorted(missing)}")
            if e.window_ms[0] < self.epoch_start_ms or e.window_ms[1] > self.epoch_end_ms:
                raise ConfigError(f"effect window {e.window_ms} outside the epoch")

    @property
    def layout(self) -> ChannelLayout:
        return ChannelLayout(self.channels)

    @property
    def n_samples(self) -> int:
        return int(round((self.epoch_end_ms - self.epoch_start_ms) * self.sample_rate_hz / 1000.0))

    def to_dict(self) -> dict:
        return {
            "n_subjects_per_group": dict(self.n_subjects_per_group),
            "n_trials": self.n_trials,
            "channels": list(self.channels),
            "sample_rate_hz": self.sample_rate_hz,
            "epoch_start_ms": self.epoch_start_ms,
            "epoch_end_ms": self.epoch_end_ms,
            "background_sigma": self.background_sigma,
            "background_alpha": self.background_alpha,
            "noise_sigma": self.noise_sigma,
            "effects": [e.to_dict() for e in self.effects],
            "behavior": {
                "agree_prob": dict(self.behavior.agree_prob),
                "rt_lognormal": {k: list(v) for k, v in self.behavior.rt_lognormal.items()},
                "miss_prob": self.behavior.miss_prob,
            },
            "n_sentences": self.n_sentences,
            "sentiment_mix": list(self.sentiment_mix),
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SynthConfig":
        d = dict(d)
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown synth config field(s): {sorted(unknown)}")
        if "layout" in d:
            raise ConfigError("give channel names via 'channels'")
        if "behavior" in d and isinstance(d["behavior"], dict):
            b = dict(d["behavior"])
            b["rt_lognormal"] = {k: tuple(v) for k, v in b.get("rt_lognormal", {}).items()}
            d["behavior"] = BehaviorSpec(**b)
        if "effects" in d:
            d["effects"] = tuple(EffectSpec(**e) if isinstance(e, dict) else e for e in d["effects"])
        if "sentiment_mix" in d:
            d["sentiment_mix"] = tuple(d["sentiment_mix"])
        try:
            return cls(**d)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"invalid synth config: {exc}") from exc


def pink_noise(rng: np.random.Generator, shape: tuple[int, ...], alpha: float) -> np.ndarray:
    """Unit-variance (in expectation) noise with power spectrum ~ f**-alpha along the last axis."""
    n = shape[-1]
    white = rng.standard_normal(shape)
    if alpha == 0 or n < 3:
        return white
    spec = np.fft.rfft(white, axis=-1)
    k = np.arange(spec.shape[-1], dtype=np.float64)
    gain = np.zeros_like(k)
    gain[1:] = k[1:] ** (-alpha / 2.0)
    # expected output variance is the mean of |gain|^2 over the full two-sided spectrum
    weights = np.full(k.shape, 2.0)
    weights[0] = 1.0
    if n % 2 == 0:
        weights[-1] = 1.0
    gain /= math.sqrt(float(np.sum(weights * gain**2)) / n)
    return np.fft.irfft(spec * gain, n=n, axis=-1)


def _sentence_table(cfg: SynthConfig) -> list[tuple[Sentiment, Sentiment]]:
    rng = rng_for(cfg.rng_seed, "sentences")
    mix = np.asarray(cfg.sentiment_mix, dtype=float)
    sentiments = rng.choice(3, size=cfg.n_sentences, p=mix / mix.sum())
    table = []
    for s in sentiments:
        sentiment = _SENTIMENTS[s]
        if sentiment is Sentiment.NEUTRAL:
            valence = Sentiment.NEUTRAL
        else:
            valence = Sentiment.POSITIVE if rng.random() < 0.5 else Sentiment.NEGATIVE
        table.append((sentiment, valence))
    return table


_QUESTIONNAIRE_MODEL = {
    # group -> (phq9 mean, sis mean, gad7 mean)
    "C": (3.0, 0.5, 3.0),
    "D": (15.0, 1.5, 11.0),
    "S": (17.0, 8.0, 12.0),
}


def _questionnaires(rng: np.random.Generator, group: Group) -> dict[str, int]:
    phq, sis, gad = _QUESTIONNAIRE_MODEL[group.value]
    screen = float(np.clip(rng.normal(phq, 3.0), 0, 27))
    return {
        "phq9_screen": int(round(screen)),
        "phq9_dayof": int(round(float(np.clip(screen + rng.normal(0, 2.0), 0, 27)))),
        "sis": int(round(float(np.clip(rng.normal(sis, 1.5), 0, 16)))),
        "gad7": int(round(float(np.clip(rng.normal(gad, 3.0), 0, 21)))),
    }


def _subject(cfg: SynthConfig, group: Group, index: int,
             sentences: list[tuple[Sentiment, Sentiment]]) -> SubjectRecord:
    rng = rng_for(cfg.rng_seed, "subject", group.value, index)
    layout = cfg.layout
    n_ch, n_t = len(layout.names), cfg.n_samples
    times = sample_times(n_t, cfg.sample_rate_hz, cfg.epoch_start_ms)

    gender = Gender.OTHER if rng.random() < 0.02 else (Gender.MALE if rng.random() < 0.5 else Gender.FEMALE)
    questionnaires = _questionnaires(rng, group)

    order = np.resize(np.arange(cfg.n_sentences), cfg.n_trials)
    rng.shuffle(order)
    mu_rt, sd_rt = cfg.behavior.rt_params(group)
    metas = []
    for sid in order:
        sentiment, valence = sentences[sid]
        if rng.random() < cfg.behavior.miss_prob:
            metas.append(TrialMeta(int(sid), sentiment, valence, Response.NONE, None))
            continue
        agree = rng.random() < cfg.behavior.p_agree(group, sentiment)
        rt = float(np.exp(rng.normal(mu_rt, sd_rt)))
        metas.append(TrialMeta(int(sid), sentiment, valence,
                               Response.AGREE if agree else Response.DISAGREE, rt))

    data = cfg.background_sigma * pink_noise(rng, (cfg.n_trials, n_ch, n_t), cfg.background_alpha)
    data += rng.normal(0.0, cfg.noise_sigma, size=data.shape)
    for effect in cfg.effects:
        if group.value not in effect.groups_affected:
            continue
        amp = effect.amplitude + (rng.normal(0.0, effect.subject_sigma) if effect.subject_sigma > 0 else 0.0)
        centre = 0.5 * (effect.window_ms[0] + effect.window_ms[1])
        width = 0.25 * (effect.window_ms[1] - effect.window_ms[0])
        ch_idx = layout.indices(effect.channels)
        jitter = (rng.normal(0.0, effect.latency_jitter_ms, size=cfg.n_trials)
                  if effect.latency_jitter_ms > 0 else np.zeros(cfg.n_trials))
        for i, meta in enumerate(metas):
            if effect.matches(meta):
                bump = amp * np.exp(-0.5 * ((times - centre - jitter[i]) / width) ** 2)
                data[i, ch_idx, :] += bump
    prefix = group.value
    return SubjectRecord(f"{prefix}{index + 1:03d}", group, gender, data.astype(np.float32),
                         metas, cfg.sample_rate_hz, cfg.epoch_start_ms, questionnaires)


def iter_subjects(cfg: SynthConfig) -> Iterator[SubjectRecord]:
    sentences = _sentence_table(cfg)
    for group in Group:
        for index in range(cfg.n_subjects_per_group.get(group.value, 0)):
            yield _subject(cfg, group, index, sentences)


def _provenance(cfg: SynthConfig) -> str:
    return f"synthetic (eegdecode.synth, seed {cfg.rng_seed})"


def generate(cfg: SynthConfig) -> Dataset:
    return Dataset(cfg.layout, list(iter_subjects(cfg)), cfg.sample_rate_hz,
                   cfg.epoch_start_ms, cfg.n_samples, _provenance(cfg))


def write_synthetic(cfg: SynthConfig, path) -> int:
    """Generate straight to disk one subject at a time; returns the subject count."""
    count = 0
    with DatasetWriter(path, cfg.layout, cfg.sample_rate_hz, cfg.epoch_start_ms,
                       cfg.n_samples, _provenance(cfg)) as writer:
        for subj in iter_subjects(cfg):
            writer.add(subj)
            count += 1
    return count


def _names_in(layout: ChannelLayout, region: str) -> tuple[str, ...]:
    return tuple(layout.names[i] for i in layout.indices(regions=[region]))


PAPER_BEHAVIOR = BehaviorSpec(
    agree_prob={
        "C:positive": 0.85, "C:negative": 0.15, "C:neutral": 0.7,
        "D:positive": 0.35, "D:negative": 0.65, "D:neutral": 0.7,
        "S:positive": 0.3, "S:negative": 0.7, "S:neutral": 0.7,
    },
    rt_lognormal={"C": (math.log(750.0), 0.3), "D": (math.log(850.0), 0.35),
                  "S": (math.log(870.0), 0.35)},
    miss_prob=0.02,
)


def paper_shaped_preset(rng_seed: int = 0) -> SynthConfig:
    """Full-size cohort: 49/47/50 subjects, 320 trials, 64 channels at 1 kHz.

    Default effects are qualitative stand-ins for the reported windows: a
    late posterior difference for every sentence (544-900 ms) and an early
    anterior difference on positive sentences only (256-657 ms), which
    shows up in positive-minus-negative contrasts.
    """
    layout = ChannelLayout.standard(64)
    posterior = tuple(n for n in _names_in(layout, "posterior") if n.startswith(("P3", "P1", "Pz", "PO")))
    anterior = tuple(n for n in _names_in(layout, "anterior") if n in ("AF3", "AFz", "AF4", "F1", "Fz", "F2"))
    effects = (
        EffectSpec(("D", "S"), posterior, (544.0, 900.0), 0.3, subject_sigma=0.2,
                   latency_jitter_ms=20.0),
        EffectSpec(("D", "S"), anterior, (256.0, 657.0), 0.3,
                   condition=(("sentiment", "positive"),), subject_sigma=0.2,
                   latency_jitter_ms=20.0),
    )
    return SynthConfig(
        n_subjects_per_group={"C": 49, "D": 47, "S": 50},
        n_trials=320,
        channels=layout.names,
        sample_rate_hz=1000.0,
        epoch_start_ms=-200.0,
        epoch_end_ms=900.0,
        effects=effects,
        behavior=PAPER_BEHAVIOR,
        rng_seed=rng_seed,
    )


# Desk-scale regime used by the calibration tests: posterior effect at 500-700 ms.
CALIBRATION_CHANNELS = ("Pz", "P4")
SNR_PRESETS = {"null": 0.0, "weak": 0.4, "strong": 1.5, "separable": 4.0}


def calibration_preset(snr: str = "strong", rng_seed: int = 0, n_per_group: int = 20,
                       n_trials: int = 40, sample_rate_hz: float = 200.0,
                       groups: tuple[str, ...] = ("C", "D")) -> SynthConfig:
    """Two groups of ``n_per_group``, 16 channels, effect on Pz/P4 for D and S."""
    if snr not in SNR_PRESETS:
        raise ConfigError(f"unknown SNR preset {snr!r}; expected one of {sorted(SNR_PRESETS)}")
    unknown = set(groups) - {"C", "D", "S"}
    if unknown:
        raise ConfigError(f"unknown group(s) {sorted(unknown)}; expected C, D or S")
    counts = {g: (n_per_group if g in groups else 0) for g in ("C", "D", "S")}
    amplitude = SNR_PRESETS[snr]
    effects = ()
    if amplitude > 0:
        effects = (EffectSpec(("D", "S"), CALIBRATION_CHANNELS, (500.0, 700.0), amplitude,
                              subject_sigma=0.1 * amplitude),)
    return SynthConfig(
        n_subjects_per_group=counts,
        n_trials=n_trials,
        channels=ChannelLayout.standard(16).names,
        sample_rate_hz=sample_rate_hz,
        effects=effects,
        n_sentences=20,
        rng_seed=rng_seed,
    )


def with_seed(cfg: SynthConfig, seed: int) -> SynthConfig:
    return replace(cfg, rng_seed=seed)
