"""Bootstrapped subject-level classification.

Each subject's trials are resampled into ``N`` bootstrap averages of ``B``
trials.  A classifier is trained on the bootstraps of the training
subjects, and a held-out subject's probability is the fraction of its own
``N`` bootstraps predicted as the positive (depressed) class.  AUC is
computed over subjects.

Also here: transfer to a held-out subgroup, data-budget ablations, the
bootstrap N/B grids, the behavioural-response baseline and the
results-table driver.
"""
from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import kernels, logreg
from ._seeding import derive_seed, rng_for
from .dataset import Dataset, Response, SubjectRecord
from .errors import ConfigError, DataError, EmptySelectionError
from .grouping import TABLE1_ROWS, Condition, GroupingSpec, behavioral_features, pair
from .logreg import FitConfig
from .prep import block_mean, decimation_factor, sample_slice, zscore_baseline_array
from .stats import AucWithCi, auc, auc_with_ci, ttest_bonferroni

log = logging.getLogger(__name__)

CV_KINDS = ("five_fold_stratified_gender", "loso")
TARGETS = ("group", "response")
KINDS = ("sparse_logreg", "mlp_1hidden")

_DEFAULT_HYPERPARAMS = {
    "sparse_logreg": {"lam": 0.01, "max_iter": 500, "tol": 1e-5},
    "mlp_1hidden": {"hidden": 16, "lr": 0.5, "epochs": 300, "l2": 1e-4},
}


@dataclass(frozen=True)
class BootstrapConfig:
    n_boot: int = 200
    trials_per_boot: int = 20
    rng_seed: int = 0
    cv: str = "five_fold_stratified_gender"
    n_folds: int = 5
    oversample_minority: bool = True
    target_label: str = "group"
    target_rate_hz: float | None = 200.0
    baseline_window_ms: tuple[float, float] = (-200.0, 0.0)
    val_fraction: float = 0.2
    decision_threshold: float = 0.5

    def __post_init__(self):
        if self.n_boot < 1 or self.trials_per_boot < 1:
            raise ConfigError("n_boot and trials_per_boot must be >= 1")
        if self.cv not in CV_KINDS:
            raise ConfigError(f"cv must be one of {CV_KINDS}, got {self.cv!r}")
        if self.n_folds < 2:
            raise ConfigError("n_folds must be >= 2")
        if self.target_label not in TARGETS:
            raise ConfigError(f"target_label must be one of {TARGETS}, got {self.target_label!r}")
        if self.target_rate_hz is not None and self.target_rate_hz <= 0:
            raise ConfigError("target_rate_hz must be positive")
        if not 0 < self.val_fraction < 1:
            raise ConfigError("val_fraction must lie in (0, 1)")
        if not 0 < self.decision_threshold < 1:
            raise ConfigError("decision_threshold must lie in (0, 1)")
        object.__setattr__(self, "baseline_window_ms", tuple(float(x) for x in self.baseline_window_ms))


@dataclass(frozen=True)
class ClassifierSpec:
    """Classifier kind plus hyperparameters; list-valued entries form a candidate grid."""
    kind: str = "sparse_logreg"
    hyperparams: tuple = ()

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"classifier kind must be one of {KINDS}, got {self.kind!r}")
        hp = dict(self.hyperparams)
        unknown = set(hp) - set(_DEFAULT_HYPERPARAMS[self.kind])
        if unknown:
            raise ConfigError(f"unknown {self.kind} hyperparameter(s): {sorted(unknown)}")
        frozen = tuple(sorted((k, tuple(v) if isinstance(v, list) else v) for k, v in hp.items()))
        object.__setattr__(self, "hyperparams", frozen)

    def candidates(self) -> list[dict]:
        merged = dict(_DEFAULT_HYPERPARAMS[self.kind])
        merged.update(dict(self.hyperparams))
        keys = sorted(merged)
        grids = [v if isinstance(v, tuple) else (v,) for v in (merged[k] for k in keys)]
        for g in grids:
            if not g:
                raise ConfigError("empty hyperparameter grid")
        return [dict(zip(keys, combo)) for combo in itertools.product(*grids)]

    def to_dict(self) -> dict:
        return {"kind": self.kind,
                "hyperparams": {k: list(v) if isinstance(v, tuple) else v for k, v in self.hyperparams}}


@dataclass(frozen=True)
class SubjectProbability:
    subject_id: str
    p_positive_class: float
    n_boot_used: int
    label: int
    group: str = ""
    unit: str = ""  # subject id, or "<id>:<response>" when predicting responses

    @property
    def n_positive(self) -> int:
        return int(round(self.p_positive_class * self.n_boot_used))


# ---------------------------------------------------------------------------
# classifiers


class _Standardizer:
    def __init__(self, X: np.ndarray):
        self.mu = X.mean(axis=0)
        sd = X.std(axis=0)
        self.sd = np.where(sd < 1e-12, 1.0, sd)

    def __call__(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mu) / self.sd


class SparseLogRegClassifier:
    def __init__(self, lam: float, max_iter: int, tol: float):
        self.cfg = FitConfig(lam=float(lam), max_iter=int(max_iter), tol=float(tol))
        self.model = None

    def fit(self, X, y, seed: int):
        self.model = logreg.fit(X, y, self.cfg.with_seed(seed))
        return self

    def predict_proba(self, X) -> np.ndarray:
        return logreg.predict_proba(self.model, X)


class MLPClassifier:
    """One tanh hidden layer and a logistic output, trained by full-batch
    gradient descent with a fixed step on mean cross-entropy plus L2."""

    def __init__(self, hidden: int, lr: float, epochs: int, l2: float):
        if hidden < 1 or epochs < 1 or lr <= 0 or l2 < 0:
            raise ConfigError("mlp_1hidden needs hidden >= 1, epochs >= 1, lr > 0, l2 >= 0")
        self.hidden, self.lr, self.epochs, self.l2 = int(hidden), float(lr), int(epochs), float(l2)

    def fit(self, X, y, seed: int):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        self.scale = _Standardizer(X)
        Z = self.scale(X)
        n, d = Z.shape
        rng = rng_for(seed, "mlp_init")
        W1 = rng.normal(0.0, 1.0 / math.sqrt(d), size=(d, self.hidden))
        b1 = np.zeros(self.hidden)
        w2 = rng.normal(0.0, 1.0 / math.sqrt(self.hidden), size=self.hidden)
        b2 = 0.0
        for _ in range(self.epochs):
            H = np.tanh(Z @ W1 + b1)
            p = logreg.sigmoid(H @ w2 + b2)
            err = (p - y) / n
            g_w2 = H.T @ err + self.l2 * w2
            g_b2 = float(err.sum())
            dH = np.outer(err, w2) * (1.0 - H * H)
            g_W1 = Z.T @ dH + self.l2 * W1
            g_b1 = dH.sum(axis=0)
            W1 -= self.lr * g_W1
            b1 -= self.lr * g_b1
            w2 -= self.lr * g_w2
            b2 -= self.lr * g_b2
        self.W1, self.b1, self.w2, self.b2 = W1, b1, w2, b2
        return self

    def predict_proba(self, X) -> np.ndarray:
        H = np.tanh(self.scale(np.asarray(X, dtype=np.float64)) @ self.W1 + self.b1)
        return logreg.sigmoid(H @ self.w2 + self.b2)


def make_classifier(kind: str, params: Mapping):
    if kind == "sparse_logreg":
        return SparseLogRegClassifier(**params)
    if kind == "mlp_1hidden":
        return MLPClassifier(**params)
    raise ConfigError(f"unknown classifier kind {kind!r}")


# ---------------------------------------------------------------------------
# bootstrapping


def bootstrap_trials(trials, cfg: BootstrapConfig, subject_id: str = "", key: str = "") -> np.ndarray:
    """``N`` means of ``B`` trials drawn uniformly with replacement.

    ``trials`` is a sequence of trials or an ``(n, ...)`` array; the result
    has shape ``(N, ...)``.  Draws depend only on
    ``(cfg.rng_seed, subject_id, key)``.
    """
    if isinstance(trials, np.ndarray):
        arr = trials
    else:
        if len(trials) == 0:
            raise EmptySelectionError(f"subject {subject_id or '?'}: no trials to bootstrap")
        arr = np.stack([np.asarray(getattr(t, "data", t), dtype=np.float64) for t in trials])
    if arr.shape[0] == 0:
        raise EmptySelectionError(f"subject {subject_id or '?'}: no trials to bootstrap")
    n = arr.shape[0]
    idx = rng_for(cfg.rng_seed, "bootstrap", subject_id, key).integers(
        0, n, size=(cfg.n_boot, cfg.trials_per_boot))
    flat = arr.reshape(n, -1)
    return kernels.bootstrap_means(flat, idx).reshape(cfg.n_boot, *arr.shape[1:])


@dataclass
class _Unit:
    """One classified entity: a subject, or a subject's agree/disagree trials."""
    key: str
    subject_id: str
    group: str
    gender: str
    label: int
    sides: tuple[np.ndarray, ...]  # flattened trials, one array per contrast side

    def features(self, cfg: BootstrapConfig, fraction: float = 1.0) -> np.ndarray:
        boots = []
        for side_no, trials in enumerate(self.sides):
            trials = _subsample_trials(trials, fraction, cfg.rng_seed, self.key, side_no)
            boots.append(bootstrap_trials(trials, cfg, self.key, f"side{side_no}"))
        return boots[0] if len(boots) == 1 else boots[0] - boots[1]


def _subsample_trials(trials: np.ndarray, fraction: float, seed: int, key: str, side: int) -> np.ndarray:
    if fraction >= 1.0:
        return trials
    k = math.ceil(fraction * trials.shape[0] - 1e-12)
    if k < 1:
        raise DataError(f"{key}: trial fraction {fraction} keeps no trials")
    keep = np.sort(rng_for(seed, "trial_subsample", key, side).choice(trials.shape[0], k, replace=False))
    return trials[keep]


def _prepared(subj: SubjectRecord, cfg: BootstrapConfig, time_ms, channel_idx) -> np.ndarray:
    data = zscore_baseline_array(subj.data, subj.sample_rate_hz, subj.epoch_start_ms,
                                 cfg.baseline_window_ms)
    rate, start = subj.sample_rate_hz, subj.epoch_start_ms
    if cfg.target_rate_hz is not None:
        k = decimation_factor(rate, cfg.target_rate_hz)
        data = block_mean(data, k)
        rate = rate / k
    if channel_idx is not None:
        data = data[:, np.asarray(channel_idx, dtype=int)]
    if time_ms is not None:
        sl = sample_slice(data.shape[-1], rate, start, time_ms)
        if sl.stop <= sl.start:
            raise ConfigError(f"time window {tuple(time_ms)} ms selects no samples")
        data = data[..., sl]
    if data.shape[1] == 0:
        raise ConfigError("channel selection is empty")
    return data.reshape(data.shape[0], -1)


def _class_of(group: str, classes) -> int | None:
    neg, pos = classes
    if group in pos:
        return 1
    if group in neg:
        return 0
    return None


def _normalise_classes(classes) -> tuple[tuple[str, ...], tuple[str, ...]]:
    if len(classes) != 2:
        raise ConfigError("classes must be a (negative groups, positive groups) pair")
    neg, pos = (tuple(sorted({str(g) for g in side})) for side in classes)
    if not neg or not pos:
        raise ConfigError("both class sets must be non-empty")
    if set(neg) & set(pos):
        raise ConfigError(f"groups {sorted(set(neg) & set(pos))} appear in both classes")
    return neg, pos


def _build_units(ds: Dataset, condition: Condition | None, classes, cfg: BootstrapConfig,
                 time_ms=None, channel_idx=None, include_groups=()) -> tuple[list[_Unit], list[tuple[str, str]]]:
    units, excluded = [], []
    for subj in ds.subjects:
        g = subj.group.value
        label = _class_of(g, classes)
        if label is None and g not in include_groups:
            continue
        try:
            if condition is None:
                sides_idx = [np.arange(subj.n_trials)]
            else:
                first, second = condition.indices(subj)
                sides_idx = [first] if second is None else [first, second]
        except EmptySelectionError as exc:
            excluded.append((subj.subject_id, str(exc)))
            continue
        data = _prepared(subj, cfg, time_ms, channel_idx)
        if cfg.target_label == "group":
            units.append(_Unit(subj.subject_id, subj.subject_id, g, subj.gender.value,
                               -1 if label is None else label,
                               tuple(data[i] for i in sides_idx)))
            continue
        for resp, resp_label in ((Response.AGREE, 1), (Response.DISAGREE, 0)):
            chosen = [np.array([i for i in idx if subj.meta[i].response is resp], dtype=int)
                      for idx in sides_idx]
            key = f"{subj.subject_id}:{resp.value}"
            if any(c.size == 0 for c in chosen):
                excluded.append((key, f"subject {subj.subject_id}: no {resp.value} trials in condition"))
                continue
            units.append(_Unit(key, subj.subject_id, g, subj.gender.value, resp_label,
                               tuple(data[c] for c in chosen)))
    if excluded:
        log.info("excluded %d unit(s) lacking trials for the grouping", len(excluded))
    return units, excluded


# ---------------------------------------------------------------------------
# cross-validation


def assign_folds(subjects: Sequence[tuple[str, str, int]], cfg: BootstrapConfig) -> list[list[str]]:
    """Test-subject lists per fold from ``(subject_id, gender, label)`` triples.

    Five-fold assignment deals subjects round-robin after sorting by gender,
    then class, then a seeded shuffle, so every fold's count of each gender
    differs from its expected share by less than one subject.
    """
    ids = sorted({s[0] for s in subjects})
    info = {s[0]: s for s in subjects}
    if cfg.cv == "loso":
        return [[sid] for sid in ids]
    if len(ids) < cfg.n_folds:
        raise ConfigError(f"{len(ids)} subjects cannot fill {cfg.n_folds} folds")
    tiebreak = rng_for(cfg.rng_seed, "folds").permutation(len(ids))
    order = sorted(range(len(ids)), key=lambda i: (info[ids[i]][1], info[ids[i]][2], tiebreak[i]))
    folds = [[] for _ in range(cfg.n_folds)]
    for pos, i in enumerate(order):
        folds[pos % cfg.n_folds].append(ids[i])
    return [sorted(f) for f in folds]


def _inner_split(units: Sequence[_Unit], cfg: BootstrapConfig, fold_no: int):
    """Hold out ``val_fraction`` of training subjects, stratified by class."""
    by_subject = {}
    for u in units:
        by_subject.setdefault(u.subject_id, u.label)
    val = set()
    for label in (0, 1):
        members = sorted(s for s, lab in by_subject.items() if lab == label)
        k = max(1, round(cfg.val_fraction * len(members)))
        if len(members) - k < 1:
            return None
        perm = rng_for(cfg.rng_seed, "inner_split", fold_no, label).permutation(len(members))
        val.update(members[i] for i in perm[:k])
    inner = [u for u in units if u.subject_id not in val]
    held = [u for u in units if u.subject_id in val]
    if len({u.label for u in inner}) < 2 or len({u.label for u in held}) < 2:
        return None
    return inner, held


def _train(clf: ClassifierSpec, params: dict, units: Sequence[_Unit], feats: Mapping[str, np.ndarray],
           cfg: BootstrapConfig, seed_key) -> object:
    X = np.concatenate([feats[u.key] for u in units])
    y = np.concatenate([np.full(feats[u.key].shape[0], u.label) for u in units])
    if len(np.unique(y)) < 2:
        raise ConfigError("a training fold holds a single class")
    if cfg.oversample_minority:
        X, y = logreg.oversample_minority(X, y, rng_for(cfg.rng_seed, "oversample", *seed_key))
    return make_classifier(clf.kind, params).fit(X, y, derive_seed(cfg.rng_seed, "fit", *seed_key))


def _unit_probability(model, feats: np.ndarray, cfg: BootstrapConfig) -> float:
    hits = int(np.count_nonzero(model.predict_proba(feats) > cfg.decision_threshold))
    return hits / feats.shape[0]


def _fit_selected(clf: ClassifierSpec, units: Sequence[_Unit], feats, cfg: BootstrapConfig,
                  fold_no: int) -> tuple[object, dict]:
    cands = clf.candidates()
    if len(cands) == 1:
        return _train(clf, cands[0], units, feats, cfg, (fold_no, 0)), cands[0]
    split = _inner_split(units, cfg, fold_no)
    if split is None:
        raise ConfigError(f"fold {fold_no}: too few training subjects for a validation split")
    inner, held = split
    best, best_auc, best_params = None, -1.0, None
    for c_no, params in enumerate(cands):
        model = _train(clf, params, inner, feats, cfg, (fold_no, c_no))
        probs = [_unit_probability(model, feats[u.key], cfg) for u in held]
        score = auc(probs, [u.label for u in held])
        if score > best_auc:
            best, best_auc, best_params = model, score, params
    return best, best_params


@dataclass(frozen=True, eq=False)
class ClassificationResult:
    probabilities: list[SubjectProbability]
    auc: float
    excluded: list[tuple[str, str]]
    folds: list[list[str]]
    selected: list[dict]
    classes: tuple[tuple[str, ...], tuple[str, ...]]
    condition: str
    target_label: str = "group"

    @property
    def labels(self) -> np.ndarray:
        return np.array([p.label for p in self.probabilities])

    @property
    def scores(self) -> np.ndarray:
        return np.array([p.p_positive_class for p in self.probabilities])

    def with_ci(self, n_boot: int = 1000, n_perm: int = 1000, rng_seed: int = 0) -> AucWithCi:
        return auc_with_ci(self.scores, self.labels, n_boot, n_perm, rng_seed)


def run_subject_classification(ds: Dataset, condition: Condition | None = None,
                               classes=(("C",), ("D", "S")),
                               clf: ClassifierSpec = ClassifierSpec(),
                               cfg: BootstrapConfig = BootstrapConfig(), threads: int = 1,
                               time_ms: tuple[float, float] | None = None,
                               channel_idx: Sequence[int] | None = None,
                               train_trial_fraction: float = 1.0,
                               test_trial_fraction: float = 1.0,
                               train_positive_fraction: float = 1.0) -> ClassificationResult:
    """Cross-validated bootstrapped classification of subjects (or responses).

    ``classes`` is ``(negative groups, positive groups)``; the positive class
    is the depressed side.  The ``*_fraction`` arguments implement the
    data-budget ablations and leave the run untouched at 1.0.
    """
    classes = _normalise_classes(classes)
    for name, f in (("train_trial_fraction", train_trial_fraction),
                    ("test_trial_fraction", test_trial_fraction),
                    ("train_positive_fraction", train_positive_fraction)):
        if not 0 < f <= 1:
            raise ConfigError(f"{name} must lie in (0, 1], got {f}")
    units, excluded = _build_units(ds, condition, classes, cfg, time_ms, channel_idx)
    labels = {u.label for u in units}
    if labels != {0, 1}:
        raise DataError(f"need units of both classes after exclusions, have labels {sorted(labels)}")

    subjects = sorted({(u.subject_id, u.gender, u.label if cfg.target_label == "group" else 0)
                       for u in units})
    folds = assign_folds(subjects, cfg)

    train_feats = {u.key: u.features(cfg, train_trial_fraction) for u in units}
    if test_trial_fraction == train_trial_fraction:
        test_feats = train_feats
    else:
        test_feats = {u.key: u.features(cfg, test_trial_fraction) for u in units}

    allowed_pos = None
    if train_positive_fraction < 1.0:
        pos_subjects = sorted({u.subject_id for u in units if u.label == 1})
        k = math.ceil(train_positive_fraction * len(pos_subjects) - 1e-12)
        if k < 1:
            raise DataError(f"positive fraction {train_positive_fraction} keeps no subjects")
        keep = rng_for(cfg.rng_seed, "positive_subsample").choice(len(pos_subjects), k, replace=False)
        allowed_pos = {pos_subjects[i] for i in keep}

    probs: dict[str, float] = {}
    selected: list[dict | None] = [None] * len(folds)

    def run_fold(fold_no: int) -> None:
        test_ids = set(folds[fold_no])
        train = [u for u in units if u.subject_id not in test_ids
                 and (allowed_pos is None or u.label == 0 or u.subject_id in allowed_pos)]
        model, params = _fit_selected(clf, train, train_feats, cfg, fold_no)
        selected[fold_no] = params
        for u in units:
            if u.subject_id in test_ids:
                probs[u.key] = _unit_probability(model, test_feats[u.key], cfg)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run_fold, range(len(folds))))
    else:
        for f in range(len(folds)):
            run_fold(f)

    out = [SubjectProbability(u.subject_id, probs[u.key], cfg.n_boot, u.label, u.group, u.key)
           for u in units]
    score = auc([p.p_positive_class for p in out], [p.label for p in out])
    cond = "all" if condition is None else condition.describe()
    return ClassificationResult(out, score, excluded, folds, selected, classes, cond, cfg.target_label)


# ---------------------------------------------------------------------------
# transfer, ablations, baselines


@dataclass(frozen=True, eq=False)
class TransferResult:
    probabilities: list[SubjectProbability]
    mean_p: dict[str, float]
    ttests: list
    training: ClassificationResult


def transfer_eval(ds: Dataset, train_classes=(("C",), ("D",)), test_groups=("S",),
                  condition: Condition | None = None, clf: ClassifierSpec = ClassifierSpec(),
                  cfg: BootstrapConfig = BootstrapConfig(), threads: int = 1) -> TransferResult:
    """Train on two classes and score every group, including held-out ones.

    Training-class subjects get their out-of-fold probability; held-out
    group subjects are scored by a model fitted on all training subjects.
    """
    classes = _normalise_classes(train_classes)
    test_groups = tuple(sorted({str(g) for g in test_groups}))
    overlap = set(test_groups) & (set(classes[0]) | set(classes[1]))
    if overlap:
        raise ConfigError(f"held-out group(s) {sorted(overlap)} are also training classes")
    if cfg.target_label != "group":
        raise ConfigError("transfer evaluation predicts groups; set target_label to 'group'")
    training = run_subject_classification(ds, condition, classes, clf, cfg, threads)
    units, _ = _build_units(ds, condition, classes, cfg, include_groups=test_groups)
    train_units = [u for u in units if u.label >= 0]
    held = [u for u in units if u.label < 0]
    if not held:
        raise DataError(f"no subjects of held-out group(s) {test_groups}")
    feats = {u.key: u.features(cfg) for u in units}
    model, _ = _fit_selected(clf, train_units, feats, cfg, len(training.folds))
    probs = list(training.probabilities)
    probs += [SubjectProbability(u.subject_id, _unit_probability(model, feats[u.key], cfg),
                                 cfg.n_boot, -1, u.group, u.key) for u in held]
    by_group: dict[str, list[float]] = {}
    for p in probs:
        by_group.setdefault(p.group, []).append(p.p_positive_class)
    groups = sorted(by_group)
    mean_p = {g: float(np.mean(by_group[g])) for g in groups}
    pairs = list(itertools.combinations(groups, 2))
    tests = ttest_bonferroni(by_group, pairs) if pairs else []
    return TransferResult(probs, mean_p, tests, training)


BUDGET_AXES = ("trials_train_test", "trials_test_only", "depressed_subjects")


@dataclass(frozen=True)
class BudgetRow:
    axis: str
    fraction: float
    condition: str
    auc: float


def budget_ablation(ds: Dataset, axis: str, fractions: Sequence[float],
                    conditions: Mapping[str, Condition | None] | None = None,
                    classes=(("C",), ("D", "S")), clf: ClassifierSpec = ClassifierSpec(),
                    cfg: BootstrapConfig = BootstrapConfig(), threads: int = 1) -> list[BudgetRow]:
    """AUC per (fraction, condition) with trials or positive-class subjects subsampled."""
    if axis not in BUDGET_AXES:
        raise ConfigError(f"axis must be one of {BUDGET_AXES}, got {axis!r}")
    if not fractions:
        raise ConfigError("no fractions given")
    for f in fractions:
        if not 0 < f <= 1:
            raise ConfigError(f"fractions must lie in (0, 1], got {f}")
    conditions = {"all": None} if conditions is None else dict(conditions)
    rows = []
    for f in fractions:
        kw = {"trials_train_test": dict(train_trial_fraction=f, test_trial_fraction=f),
              "trials_test_only": dict(test_trial_fraction=f),
              "depressed_subjects": dict(train_positive_fraction=f)}[axis]
        for name, cond in conditions.items():
            res = run_subject_classification(ds, cond, classes, clf, cfg, threads, **kw)
            rows.append(BudgetRow(axis, float(f), name, res.auc))
    return rows


@dataclass(frozen=True)
class BootstrapGridRow:
    parameter: str  # "N" or "B"
    value: int
    condition: str
    result: AucWithCi


def bootstrap_grid(ds: Dataset, n_values: Sequence[int] = (100, 200, 400, 1000),
                   b_values: Sequence[int] = (5, 10, 20, 40),
                   conditions: Mapping[str, Condition | None] | None = None,
                   classes=(("C",), ("D", "S")), clf: ClassifierSpec = ClassifierSpec(),
                   cfg: BootstrapConfig = BootstrapConfig(), threads: int = 1,
                   n_ci_boot: int = 1000, n_perm: int = 1000) -> list[BootstrapGridRow]:
    """Vary N at the configured B, then B at the configured N."""
    if conditions is None:
        conditions = {"Sentence Sentiment": pair("sentence_sentiment", "contrast"),
                      "Response Type": pair("response_type", "contrast")}
    rows = []
    for param, values in (("N", n_values), ("B", b_values)):
        for v in values:
            sub = (BootstrapConfig(**{**_cfg_fields(cfg), "n_boot": int(v)}) if param == "N"
                   else BootstrapConfig(**{**_cfg_fields(cfg), "trials_per_boot": int(v)}))
            for name, cond in conditions.items():
                res = run_subject_classification(ds, cond, classes, clf, sub, threads)
                rows.append(BootstrapGridRow(param, int(v), name,
                                             res.with_ci(n_ci_boot, n_perm, cfg.rng_seed)))
    return rows


def _cfg_fields(cfg: BootstrapConfig) -> dict:
    return {f: getattr(cfg, f) for f in cfg.__dataclass_fields__}


@dataclass(frozen=True, eq=False)
class BehavioralResult:
    auc: float
    scores: dict[str, float]
    labels: dict[str, int]
    model: logreg.LogRegModel


def behavioral_baseline(ds: Dataset, classes=(("C",), ("D", "S")),
                        fit_cfg: FitConfig = FitConfig()) -> BehavioralResult:
    """LOSO sparse logistic regression on each subject's agree/disagree rates.

    Held-out subjects are ranked by ``w . (x - mean_train)``, dropping the
    intercept for the same reason as in time-resolved decoding.
    """
    classes = _normalise_classes(classes)
    ids, X, y = [], [], []
    for subj in ds.subjects:
        label = _class_of(subj.group.value, classes)
        if label is None:
            continue
        ids.append(subj.subject_id)
        X.append(behavioral_features(subj))
        y.append(label)
    X, y = np.array(X), np.array(y)
    if y.sum() < 2 or (y.size - y.sum()) < 2:
        raise DataError("behavioral baseline needs >= 2 subjects per class")
    scores = np.empty(y.size)
    keep = np.ones(y.size, dtype=bool)
    for i in range(y.size):
        keep[i] = False
        model = logreg.fit(X[keep], y[keep], fit_cfg)
        centre = X[keep].mean(axis=0)
        keep[i] = True
        scores[i] = float((X[i] - centre) @ model.weights)
    final = logreg.fit(X, y, fit_cfg)
    return BehavioralResult(auc(scores, y), dict(zip(ids, scores.tolist())),
                            dict(zip(ids, y.tolist())), final)


def confusion_at_threshold(probs: Sequence[SubjectProbability | float], labels=None,
                           threshold: float = 0.5) -> tuple[float, float]:
    """(sensitivity, specificity) calling P > threshold positive."""
    if not probs:
        raise DataError("no probabilities given")
    if labels is None:
        labels = [p.label for p in probs]
    p = np.array([getattr(x, "p_positive_class", x) for x in probs], dtype=np.float64)
    y = np.asarray(labels)
    if p.shape != y.shape:
        raise DataError("probabilities and labels differ in length")
    pos, neg = y == 1, y == 0
    if not pos.any() or not neg.any():
        raise DataError("sensitivity and specificity need both classes")
    pred = p > threshold
    return float(pred[pos].mean()), float((~pred[neg]).mean())


# ---------------------------------------------------------------------------
# results table


TASKS = {"C vs DS": (("C",), ("D", "S")), "D vs S": (("D",), ("S",))}


@dataclass(frozen=True)
class TableRow:
    condition: str
    trial_type: str
    task: str
    result: AucWithCi
    n_units: int
    n_excluded: int


def condition_for(category: str, trial_type: str, rt_fraction: float = 0.25,
                  rng_seed: int = 0) -> Condition:
    if category == "all":
        return Condition(GroupingSpec("all"), label="all")
    return pair(category, trial_type, rt_fraction, rng_seed)


def classify_table(ds: Dataset, rows=TABLE1_ROWS, tasks: Mapping = TASKS,
                   clf: ClassifierSpec = ClassifierSpec(), cfg: BootstrapConfig = BootstrapConfig(),
                   threads: int = 1, n_ci_boot: int = 1000, n_perm: int = 1000) -> list[TableRow]:
    """One row per (table row, task) with AUC, CI and permutation p."""
    if not rows:
        raise ConfigError("empty condition grid")
    if not tasks:
        raise ConfigError("no classification tasks")
    out = []
    for block, trial_type, category, side in rows:
        cond = condition_for(category, side, rng_seed=cfg.rng_seed)
        for task, classes in tasks.items():
            res = run_subject_classification(ds, cond, classes, clf, cfg, threads)
            out.append(TableRow(block, trial_type, task,
                                res.with_ci(n_ci_boot, n_perm, cfg.rng_seed),
                                len(res.probabilities), len(res.excluded)))
    return out


def classification_evaluator(ds: Dataset, condition: Condition | None = None,
                             classes=(("C",), ("D", "S")), clf: ClassifierSpec = ClassifierSpec(),
                             cfg: BootstrapConfig = BootstrapConfig(), threads: int = 1):
    """Evaluator for :func:`eegdecode.mvpa.ablation_grid` returning subject AUC."""
    def evaluate(time_ms, regions):
        ch = ds.layout.indices(regions=regions) if regions is not None else None
        return run_subject_classification(ds, condition, classes, clf, cfg, threads,
                                          time_ms=time_ms, channel_idx=ch).auc
    return evaluate
