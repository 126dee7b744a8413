"""Dataset schema, on-disk format and validation.

On disk a dataset is a directory holding ``manifest.json`` plus, per
subject, a raw little-endian float32 file laid out C-order as
``[trials][channels][samples]`` and a CSV of trial metadata.  In memory
each subject keeps its trials as one ``(n_trials, n_channels, n_samples)``
array; :attr:`SubjectRecord.trials` exposes them as :class:`EpochedTrial`
views.

The trial axis order is deliberately trials x channels x samples rather
than the trials x time x channels order used when describing the bootstrap
procedure: channel-major rows keep each channel's time course contiguous,
and per-timestep slicing is a cheap strided view.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DataError

FORMAT_VERSION = 1
META_HEADER = ["trial_index", "sentence_id", "sentiment", "last_word_valence",
               "response", "response_time_ms"]
QUESTIONNAIRES = ("phq9_screen", "phq9_dayof", "sis", "gad7")


class Region(str, Enum):
    ANTERIOR = "anterior"
    CENTRAL = "central"
    POSTERIOR = "posterior"


class Sentiment(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    NEUTRAL = "neutral"


class Response(str, Enum):
    AGREE = "agree"
    DISAGREE = "disagree"
    NONE = "none"


class Group(str, Enum):
    C = "C"
    D = "D"
    S = "S"


class Gender(str, Enum):
    MALE = "male"
    FEMALE = "female"
    OTHER = "other"


def _parse_enum(enum_cls, token, context: str):
    try:
        return enum_cls(token)
    except ValueError:
        allowed = ", ".join(m.value for m in enum_cls)
        raise DataError(f"{context}: unknown {enum_cls.__name__} token {token!r} (expected one of {allowed})") from None


# Longest prefix wins, so FC/CP/PO are matched before F/C/P.
_REGION_PREFIXES = (
    ("Fp", Region.ANTERIOR), ("AF", Region.ANTERIOR), ("FC", Region.CENTRAL),
    ("CP", Region.CENTRAL), ("PO", Region.POSTERIOR), ("F", Region.ANTERIOR),
    ("C", Region.CENTRAL), ("T", Region.CENTRAL), ("P", Region.POSTERIOR),
    ("O", Region.POSTERIOR),
)


def default_region(name: str) -> Region:
    """Region of a 10-20 channel name from its letter prefix."""
    for prefix, region in _REGION_PREFIXES:
        if name.startswith(prefix):
            return region
    raise DataError(f"channel {name!r} has no default region; give one in the manifest")


STANDARD_64 = (
    "Fp1", "Fp2",
    "AF7", "AF3", "AFz", "AF4", "AF8",
    "F7", "F5", "F3", "F1", "Fz", "F2", "F4", "F6", "F8",
    "FT7", "FC5", "FC3", "FC1", "FCz", "FC2", "FC4", "FC6", "FT8",
    "T7", "C5", "C3", "C1", "Cz", "C2", "C4", "C6", "T8",
    "TP7", "CP5", "CP3", "CP1", "CPz", "CP2", "CP4", "CP6", "TP8",
    "P9", "P7", "P5", "P3", "P1", "Pz", "P2", "P4", "P6", "P8", "P10",
    "PO7", "PO3", "POz", "PO4", "PO8",
    "O1", "Oz", "O2",
    "TP9", "TP10",
)
STANDARD_32 = (
    "Fp1", "Fp2", "AF3", "AF4", "F7", "F3", "Fz", "F4", "F8",
    "FC5", "FC1", "FC2", "FC6", "T7", "C3", "Cz", "C4", "T8",
    "CP5", "CP1", "CP2", "CP6", "P7", "P3", "Pz", "P4", "P8",
    "PO3", "PO4", "O1", "Oz", "O2",
)
STANDARD_16 = (
    "Fp1", "Fp2", "F3", "Fz", "F4", "FC1", "FC2", "C3", "Cz", "C4",
    "CP1", "CP2", "P3", "Pz", "P4", "Oz",
)
_STANDARD = {64: STANDARD_64, 32: STANDARD_32, 16: STANDARD_16}


@dataclass(frozen=True)
class ChannelLayout:
    names: tuple[str, ...]
    region_map: Mapping[str, Region] = field(default_factory=dict)

    def __post_init__(self):
        names = tuple(self.names)
        object.__setattr__(self, "names", names)
        if not names:
            raise DataError("channel layout needs at least one channel")
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise DataError(f"duplicate channel names: {dupes}")
        regions = {}
        for name in names:
            if name in self.region_map:
                regions[name] = _parse_enum(Region, self.region_map[name], f"channel {name}")
            else:
                regions[name] = default_region(name)
        extra = set(self.region_map) - set(names)
        if extra:
            raise DataError(f"region_map names unknown channels: {sorted(extra)}")
        object.__setattr__(self, "region_map", regions)

    @classmethod
    def standard(cls, n_channels: int = 64) -> "ChannelLayout":
        if n_channels not in _STANDARD:
            raise DataError(f"no standard layout with {n_channels} channels (have {sorted(_STANDARD)})")
        return cls(_STANDARD[n_channels])

    def __len__(self):
        return len(self.names)

    def indices(self, channels: Iterable | None = None,
                regions: Iterable | None = None) -> np.ndarray:
        """Channel indices (original order) matching names/indices and/or regions."""
        keep = np.ones(len(self.names), dtype=bool)
        if channels is not None:
            wanted = np.zeros(len(self.names), dtype=bool)
            for ch in channels:
                if isinstance(ch, (int, np.integer)):
                    if not 0 <= ch < len(self.names):
                        raise DataError(f"channel index {ch} out of range")
                    wanted[ch] = True
                elif ch in self.names:
                    wanted[self.names.index(ch)] = True
                else:
                    raise DataError(f"unknown channel {ch!r}")
            keep &= wanted
        if regions is not None:
            wanted_regions = {_parse_enum(Region, r, "region selection") for r in regions}
            keep &= np.array([self.region_map[n] in wanted_regions for n in self.names])
        return np.flatnonzero(keep)

    def subset(self, indices: Sequence[int]) -> "ChannelLayout":
        names = [self.names[i] for i in indices]
        return ChannelLayout(names, {n: self.region_map[n] for n in names})


@dataclass(frozen=True)
class TrialMeta:
    sentence_id: int
    sentiment: Sentiment
    last_word_valence: Sentiment
    response: Response
    response_time_ms: float | None = None

    @property
    def responded(self) -> bool:
        return self.response is not Response.NONE


@dataclass(frozen=True, eq=False)
class EpochedTrial:
    meta: TrialMeta
    data: np.ndarray
    sample_rate_hz: float
    epoch_start_ms: float

    @property
    def n_channels(self) -> int:
        return self.data.shape[0]

    @property
    def n_samples(self) -> int:
        return self.data.shape[1]

    @property
    def times_ms(self) -> np.ndarray:
        return sample_times(self.n_samples, self.sample_rate_hz, self.epoch_start_ms)

    def replace(self, data=None, sample_rate_hz=None, meta=None) -> "EpochedTrial":
        return EpochedTrial(
            meta=self.meta if meta is None else meta,
            data=self.data if data is None else data,
            sample_rate_hz=self.sample_rate_hz if sample_rate_hz is None else sample_rate_hz,
            epoch_start_ms=self.epoch_start_ms,
        )


def sample_times(n_samples: int, rate_hz: float, start_ms: float) -> np.ndarray:
    return start_ms + np.arange(n_samples) * (1000.0 / rate_hz)


@dataclass(eq=False)
class SubjectRecord:
    subject_id: str
    group: Group
    gender: Gender
    data: np.ndarray
    meta: list[TrialMeta]
    sample_rate_hz: float
    epoch_start_ms: float
    questionnaires: dict[str, int] = field(default_factory=dict)

    def __post_init__(self):
        self.group = _parse_enum(Group, self.group, f"subject {self.subject_id}")
        self.gender = _parse_enum(Gender, self.gender, f"subject {self.subject_id}")
        self.questionnaires = dict(self.questionnaires)
        if self.data.ndim != 3:
            raise DataError(f"subject {self.subject_id}: trial array must be 3-D, got shape {self.data.shape}")

    @classmethod
    def from_trials(cls, subject_id, group, gender, trials: Sequence[EpochedTrial],
                    n_channels: int | None = None, n_samples: int | None = None,
                    sample_rate_hz: float | None = None, epoch_start_ms: float | None = None,
                    questionnaires=None) -> "SubjectRecord":
        if trials:
            data = np.stack([t.data for t in trials])
            rate = trials[0].sample_rate_hz
            start = trials[0].epoch_start_ms
        else:
            if None in (n_channels, n_samples, sample_rate_hz, epoch_start_ms):
                raise DataError(f"subject {subject_id}: empty trial list needs explicit shape and timing")
            data = np.zeros((0, n_channels, n_samples), dtype=np.float32)
            rate, start = sample_rate_hz, epoch_start_ms
        return cls(subject_id, group, gender, data, [t.meta for t in trials], rate, start,
                   questionnaires or {})

    @property
    def n_trials(self) -> int:
        return self.data.shape[0]

    @property
    def trials(self) -> list[EpochedTrial]:
        return [EpochedTrial(m, self.data[i], self.sample_rate_hz, self.epoch_start_ms)
                for i, m in enumerate(self.meta)]

    def __eq__(self, other):
        if not isinstance(other, SubjectRecord):
            return NotImplemented
        return (self.subject_id == other.subject_id and self.group == other.group
                and self.gender == other.gender and self.questionnaires == other.questionnaires
                and self.meta == other.meta and self.sample_rate_hz == other.sample_rate_hz
                and self.epoch_start_ms == other.epoch_start_ms
                and _bit_equal(self.data, other.data))


def _bit_equal(a: np.ndarray, b: np.ndarray) -> bool:
    return a.dtype == b.dtype and a.shape == b.shape and a.tobytes() == b.tobytes()


@dataclass(eq=False)
class Dataset:
    layout: ChannelLayout
    subjects: list[SubjectRecord]
    sample_rate_hz: float
    epoch_start_ms: float
    n_samples: int
    provenance: str = ""

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.layout == other.layout and self.provenance == other.provenance
                and self.sample_rate_hz == other.sample_rate_hz
                and self.epoch_start_ms == other.epoch_start_ms
                and self.n_samples == other.n_samples and self.subjects == other.subjects)

    def subject(self, subject_id: str) -> SubjectRecord:
        for s in self.subjects:
            if s.subject_id == subject_id:
                return s
        raise KeyError(subject_id)

    def groups(self) -> set[Group]:
        return {s.group for s in self.subjects}

    @property
    def times_ms(self) -> np.ndarray:
        return sample_times(self.n_samples, self.sample_rate_hz, self.epoch_start_ms)


@dataclass(frozen=True)
class Violation:
    field: str
    message: str
    subject_id: str | None = None
    trial_index: int | None = None

    def __str__(self):
        where = []
        if self.subject_id is not None:
            where.append(f"subject {self.subject_id}")
        if self.trial_index is not None:
            where.append(f"trial {self.trial_index}")
        prefix = ", ".join(where)
        return f"{prefix + ': ' if prefix else ''}{self.field}: {self.message}"


def validate(ds: Dataset) -> list[Violation]:
    """Return every invariant violation in ``ds``; empty means valid."""
    out: list[Violation] = []
    n_ch = len(ds.layout.names)
    if not ds.sample_rate_hz > 0:
        out.append(Violation("sample_rate_hz", f"must be positive, got {ds.sample_rate_hz}"))
    if ds.n_samples < 1:
        out.append(Violation("n_samples", f"must be >= 1, got {ds.n_samples}"))
    seen: set[str] = set()
    for subj in ds.subjects:
        sid = subj.subject_id
        if sid in seen:
            out.append(Violation("subject_id", "duplicated", sid))
        seen.add(sid)
        if subj.sample_rate_hz != ds.sample_rate_hz:
            out.append(Violation("sample_rate_hz", f"{subj.sample_rate_hz} != dataset {ds.sample_rate_hz}", sid))
        if subj.epoch_start_ms != ds.epoch_start_ms:
            out.append(Violation("epoch_start_ms", f"{subj.epoch_start_ms} != dataset {ds.epoch_start_ms}", sid))
        expected = (len(subj.meta), n_ch, ds.n_samples)
        if subj.data.shape != expected:
            out.append(Violation("data", f"shape {subj.data.shape} != expected {expected}", sid))
        for key, value in subj.questionnaires.items():
            if key not in QUESTIONNAIRES:
                out.append(Violation("questionnaires", f"unknown questionnaire {key!r}", sid))
            elif not isinstance(value, (int, np.integer)) or isinstance(value, bool):
                out.append(Violation("questionnaires", f"{key} must be an integer, got {value!r}", sid))
        if subj.data.size:
            bad = ~np.isfinite(subj.data).reshape(subj.data.shape[0], -1).all(axis=1)
            for i in np.flatnonzero(bad):
                out.append(Violation("data", "non-finite values", sid, int(i)))
        for i, meta in enumerate(subj.meta):
            out.extend(_meta_violations(meta, sid, i))
    return out


def _meta_violations(meta: TrialMeta, sid: str, i: int) -> list[Violation]:
    out = []
    for name, enum_cls in (("sentiment", Sentiment), ("last_word_valence", Sentiment),
                           ("response", Response)):
        if not isinstance(getattr(meta, name), enum_cls):
            out.append(Violation(name, f"not a {enum_cls.__name__}: {getattr(meta, name)!r}", sid, i))
    rt = meta.response_time_ms
    if isinstance(meta.response, Response):
        if meta.response is Response.NONE and rt is not None:
            out.append(Violation("response_time_ms", "present although response is none", sid, i))
        if meta.response is not Response.NONE and rt is None:
            out.append(Violation("response_time_ms", f"absent although response is {meta.response.value}", sid, i))
    if rt is not None and not (math.isfinite(rt) and rt >= 0):
        out.append(Violation("response_time_ms", f"must be finite and >= 0, got {rt}", sid, i))
    return out


# --- disk format -------------------------------------------------------------

_SAFE_ID = re.compile(r"^[A-Za-z0-9_.-]+$")


def _file_stem(subject_id: str, index: int) -> str:
    return subject_id if _SAFE_ID.match(subject_id) else f"subject_{index:04d}"


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_meta_csv(path: Path, metas: Sequence[TrialMeta]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(META_HEADER)
        for i, m in enumerate(metas):
            rt = "" if m.response_time_ms is None else repr(float(m.response_time_ms))
            writer.writerow([i, m.sentence_id, m.sentiment.value, m.last_word_valence.value,
                             m.response.value, rt])


def _read_meta_csv(path: Path, sid: str, n_trials: int) -> list[TrialMeta]:
    if not path.is_file():
        raise DataError(f"subject {sid}: missing meta file {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != META_HEADER:
            raise DataError(f"subject {sid}: {path.name} line 1: header {header} != {META_HEADER}")
        metas = []
        for line_no, row in enumerate(reader, start=2):
            ctx = f"subject {sid}: {path.name} line {line_no}"
            if len(row) != len(META_HEADER):
                raise DataError(f"{ctx}: expected {len(META_HEADER)} fields, got {len(row)}")
            try:
                index = int(row[0])
                sentence_id = int(row[1])
                rt = float(row[5]) if row[5] != "" else None
            except ValueError as exc:
                raise DataError(f"{ctx}: {exc}") from None
            if index != len(metas):
                raise DataError(f"{ctx}: trial_index {index} out of sequence (expected {len(metas)})")
            metas.append(TrialMeta(
                sentence_id=sentence_id,
                sentiment=_parse_enum(Sentiment, row[2], ctx),
                last_word_valence=_parse_enum(Sentiment, row[3], ctx),
                response=_parse_enum(Response, row[4], ctx),
                response_time_ms=rt,
            ))
    if len(metas) != n_trials:
        raise DataError(f"subject {sid}: {path.name} has {len(metas)} trials, manifest declares {n_trials}")
    return metas


class DatasetWriter:
    """Incremental writer: subjects are flushed to disk as they are added and
    the manifest is written by :meth:`close`.  Use as a context manager."""

    def __init__(self, path, layout: ChannelLayout, sample_rate_hz: float,
                 epoch_start_ms: float, n_samples: int, provenance: str = ""):
        self.root = Path(path)
        self.layout = layout
        self.sample_rate_hz = sample_rate_hz
        self.epoch_start_ms = epoch_start_ms
        self.n_samples = n_samples
        self.provenance = provenance
        self._entries: list[dict] = []
        try:
            self.root.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise DataError(f"cannot write dataset to {self.root}: {exc}") from exc

    def add(self, subj: SubjectRecord) -> None:
        stem = _file_stem(subj.subject_id, len(self._entries))
        data_file, meta_file = f"{stem}.f32", f"{stem}_meta.csv"
        try:
            np.ascontiguousarray(subj.data, dtype="<f4").tofile(self.root / data_file)
            _write_meta_csv(self.root / meta_file, subj.meta)
            digest = _sha256(self.root / data_file)
        except OSError as exc:
            raise DataError(f"cannot write subject {subj.subject_id} to {self.root}: {exc}") from exc
        self._entries.append({
            "subject_id": subj.subject_id,
            "group": subj.group.value,
            "gender": subj.gender.value,
            "questionnaires": {k: int(v) for k, v in sorted(subj.questionnaires.items())},
            "n_trials": subj.n_trials,
            "data_file": data_file,
            "meta_file": meta_file,
            "sha256": digest,
        })

    def close(self) -> None:
        manifest = {
            "version": FORMAT_VERSION,
            "provenance": self.provenance,
            "sample_rate_hz": self.sample_rate_hz,
            "epoch_start_ms": self.epoch_start_ms,
            "n_samples": self.n_samples,
            "channels": list(self.layout.names),
            "regions": {n: r.value for n, r in self.layout.region_map.items()},
            "subjects": self._entries,
        }
        try:
            with open(self.root / "manifest.json", "w") as fh:
                json.dump(manifest, fh, indent=2)
                fh.write("\n")
        except OSError as exc:
            raise DataError(f"cannot write manifest to {self.root}: {exc}") from exc

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            self.close()


def save_dataset(ds: Dataset, path) -> None:
    """Write ``ds`` under directory ``path`` (created if needed).

    Trial data is stored as float32; datasets held in float32 round-trip
    bit-exactly.
    """
    with DatasetWriter(path, ds.layout, ds.sample_rate_hz, ds.epoch_start_ms,
                       ds.n_samples, ds.provenance) as writer:
        for subj in ds.subjects:
            writer.add(subj)


def _require(manifest: dict, key: str, ctx: str):
    if key not in manifest:
        raise DataError(f"{ctx}: missing field {key!r}")
    return manifest[key]


def load_dataset(path, mmap: bool = False, verify_checksums: bool = True) -> Dataset:
    """Read and validate a dataset directory.

    With ``mmap`` the trial arrays are read-only memory maps instead of
    in-memory copies.
    """
    root = Path(path)
    manifest_path = root / "manifest.json"
    if not manifest_path.is_file():
        raise DataError(f"missing manifest {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{manifest_path}: invalid JSON ({exc})") from None
    ctx = "manifest.json"
    version = _require(manifest, "version", ctx)
    if version != FORMAT_VERSION:
        raise DataError(f"{ctx}: unsupported version {version}")
    rate = float(_require(manifest, "sample_rate_hz", ctx))
    start = float(_require(manifest, "epoch_start_ms", ctx))
    n_samples = int(_require(manifest, "n_samples", ctx))
    layout = ChannelLayout(_require(manifest, "channels", ctx), manifest.get("regions", {}))
    n_ch = len(layout.names)

    subjects = []
    for k, entry in enumerate(_require(manifest, "subjects", ctx)):
        sctx = f"{ctx}: subjects[{k}]"
        sid = str(_require(entry, "subject_id", sctx))
        n_trials = int(_require(entry, "n_trials", sctx))
        data_path = root / _require(entry, "data_file", sctx)
        if not data_path.is_file():
            raise DataError(f"subject {sid}: missing data file {data_path}")
        expected_bytes = n_trials * n_ch * n_samples * 4
        actual = data_path.stat().st_size
        if actual != expected_bytes:
            raise DataError(
                f"subject {sid}: {data_path.name} has {actual} bytes, expected {expected_bytes} "
                f"({n_trials} trials x {n_ch} channels x {n_samples} samples x 4)")
        if verify_checksums and "sha256" in entry and _sha256(data_path) != entry["sha256"]:
            raise DataError(f"subject {sid}: {data_path.name} checksum mismatch")
        shape = (n_trials, n_ch, n_samples)
        if mmap and expected_bytes:
            data = np.memmap(data_path, dtype="<f4", mode="r", shape=shape)
        else:
            data = np.fromfile(data_path, dtype="<f4").reshape(shape)
        for i in range(n_trials):
            trial = data[i]
            if not np.isfinite(trial).all():
                ch, s = np.argwhere(~np.isfinite(trial))[0]
                offset = ((i * n_ch + ch) * n_samples + s) * 4
                raise DataError(
                    f"subject {sid}: non-finite value in trial {i} (channel {layout.names[ch]}, "
                    f"sample {s}, byte offset {offset} of {data_path.name})")
        metas = _read_meta_csv(root / _require(entry, "meta_file", sctx), sid, n_trials)
        questionnaires = {}
        for key, value in entry.get("questionnaires", {}).items():
            if key not in QUESTIONNAIRES:
                raise DataError(f"subject {sid}: unknown questionnaire {key!r}")
            questionnaires[key] = int(value)
        subjects.append(SubjectRecord(
            subject_id=sid,
            group=_parse_enum(Group, _require(entry, "group", sctx), f"subject {sid}"),
            gender=_parse_enum(Gender, _require(entry, "gender", sctx), f"subject {sid}"),
            data=data, meta=metas, sample_rate_hz=rate, epoch_start_ms=start,
            questionnaires=questionnaires,
        ))
    ds = Dataset(layout, subjects, rate, start, n_samples, manifest.get("provenance", ""))
    problems = validate(ds)
    if problems:
        listing = "; ".join(str(p) for p in problems[:10])
        raise DataError(f"{len(problems)} validation problem(s): {listing}")
    return ds
