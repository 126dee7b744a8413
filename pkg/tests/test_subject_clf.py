import numpy as np
import pytest

from eegdecode import synth
from eegdecode.errors import ConfigError, DataError
from eegdecode.grouping import pair
from eegdecode.subject_clf import (BootstrapConfig, ClassifierSpec, SubjectProbability,
                                   assign_folds, behavioral_baseline, bootstrap_grid,
                                   bootstrap_trials, budget_ablation, classify_table,
                                   confusion_at_threshold, run_subject_classification,
                                   transfer_eval)

FAST = BootstrapConfig(n_boot=30, target_rate_hz=100.0)
CD = (("C",), ("D",))


def cohort(snr, seed=0, n=10, groups=("C", "D")):
    return synth.generate(synth.calibration_preset(snr, rng_seed=seed, n_per_group=n, groups=groups))


@pytest.fixture(scope="module")
def separable():
    return cohort("separable", 1)


@pytest.fixture(scope="module")
def strong3():
    return cohort("strong", 2, groups=("C", "D", "S"))


def test_bootstrap_single_trial():
    x = np.arange(6.0).reshape(1, 2, 3)
    out = bootstrap_trials(x, BootstrapConfig(n_boot=1, trials_per_boot=1))
    np.testing.assert_array_equal(out, x)


def test_bootstrap_identical_trials():
    x = np.tile(np.arange(4.0), (7, 1))
    out = bootstrap_trials(x, BootstrapConfig(n_boot=5, trials_per_boot=20))
    np.testing.assert_allclose(out, np.tile(np.arange(4.0), (5, 1)), atol=1e-12)


def test_bootstrap_clt(rng):
    x = rng.standard_normal((30, 5))
    cfg = BootstrapConfig(n_boot=10000, trials_per_boot=20)
    means = bootstrap_trials(x, cfg, "s1").mean(axis=0)
    bound = 3 * x.std(axis=0) / np.sqrt(20 * 10000)
    assert np.all(np.abs(means - x.mean(axis=0)) <= bound)


def test_bootstrap_deterministic_per_subject(rng):
    x = rng.standard_normal((10, 3))
    cfg = BootstrapConfig(n_boot=4, trials_per_boot=3)
    a = bootstrap_trials(x, cfg, "s1")
    assert np.array_equal(a, bootstrap_trials(x, cfg, "s1"))
    assert not np.array_equal(a, bootstrap_trials(x, cfg, "s2"))
    with pytest.raises(DataError):
        bootstrap_trials([], cfg, "s1")


def test_counting_probability():
    p = SubjectProbability("s", 150 / 200, 200, 1)
    assert p.p_positive_class == 0.75 and p.n_positive == 150


def test_separable_cohort(separable):
    res = run_subject_classification(separable, classes=CD, cfg=FAST)
    assert res.auc == 1.0
    for p in res.probabilities:
        assert p.n_positive == p.p_positive_class * p.n_boot_used
        if p.label == 1:
            assert p.p_positive_class >= 0.9
    assert sum(len(f) for f in res.folds) == len(separable.subjects)


def test_threads_do_not_change_result(separable):
    a = run_subject_classification(separable, classes=CD, cfg=FAST)
    b = run_subject_classification(separable, classes=CD, cfg=FAST, threads=4)
    assert [p.p_positive_class for p in a.probabilities] == [p.p_positive_class for p in b.probabilities]


def test_contrast_and_exclusion(small_ds):
    res = run_subject_classification(small_ds, pair("sentence_sentiment", "contrast"),
                                     classes=(("C",), ("D", "S")),
                                     cfg=BootstrapConfig(n_boot=10, target_rate_hz=None))
    assert len(res.probabilities) + len(res.excluded) == len(small_ds.subjects)
    assert "sentence_sentiment" in res.condition


def test_model_selection_grid(separable):
    clf = ClassifierSpec("sparse_logreg", {"lam": [0.001, 0.05]})
    res = run_subject_classification(separable, classes=CD, clf=clf, cfg=FAST)
    assert all(s["lam"] in (0.001, 0.05) for s in res.selected)
    assert res.auc == 1.0


def test_mlp_classifier(separable):
    clf = ClassifierSpec("mlp_1hidden", {"epochs": 100})
    res = run_subject_classification(separable, classes=CD, clf=clf, cfg=FAST)
    assert res.auc >= 0.9


def test_classifier_spec_validation():
    with pytest.raises(ConfigError):
        ClassifierSpec("svm")
    with pytest.raises(ConfigError):
        ClassifierSpec("sparse_logreg", {"depth": 3})
    assert len(ClassifierSpec("sparse_logreg", {"lam": [0.1, 0.2], "tol": [1e-4, 1e-5]}).candidates()) == 4


def test_fold_single_class_is_config_error(separable):
    with pytest.raises(DataError):
        run_subject_classification(separable, classes=(("C",), ("S",)), cfg=FAST)
    with pytest.raises(ConfigError):
        run_subject_classification(separable, classes=(("C",), ("C", "D")), cfg=FAST)


def test_gender_balance_in_folds():
    rng = np.random.default_rng(0)
    subjects = [(f"s{i:02d}", rng.choice(["male", "female"]), int(rng.integers(0, 2))) for i in range(37)]
    folds = assign_folds(subjects, BootstrapConfig())
    gender = {s: g for s, g, _ in subjects}
    for g in ("male", "female"):
        share = sum(gender[s] == g for s, _, _ in subjects) / 5
        for f in folds:
            assert abs(sum(gender[s] == g for s in f) - share) < 1 + 1e-9
    assert sorted(s for f in folds for s in f) == sorted(s for s, _, _ in subjects)
    loso = assign_folds(subjects, BootstrapConfig(cv="loso"))
    assert len(loso) == 37 and all(len(f) == 1 for f in loso)


def test_transfer_shared_effect(strong3):
    res = transfer_eval(strong3, train_classes=CD, test_groups=("S",), cfg=FAST)
    assert abs(res.mean_p["S"] - res.mean_p["D"]) <= 0.1
    assert res.mean_p["D"] > res.mean_p["C"]
    assert {t.pair for t in res.ttests} == {("C", "D"), ("C", "S"), ("D", "S")}
    with pytest.raises(ConfigError):
        transfer_eval(strong3, train_classes=CD, test_groups=("D",), cfg=FAST)


def test_budget_full_fraction_is_unablated(separable):
    full = run_subject_classification(separable, classes=CD, cfg=FAST).auc
    rows = budget_ablation(separable, "trials_test_only", [1.0], classes=CD, cfg=FAST)
    assert rows[0].auc == full
    with pytest.raises(ConfigError):
        budget_ablation(separable, "trials_test_only", [0.0], classes=CD, cfg=FAST)


def test_budget_test_only_robust(separable):
    rows = budget_ablation(separable, "trials_test_only", [1.0, 0.25], classes=CD, cfg=FAST)
    assert abs(rows[0].auc - rows[1].auc) <= 0.05


def test_budget_train_test_degrades():
    ds = synth.generate(synth.calibration_preset("strong", rng_seed=1))
    cfg = BootstrapConfig(n_boot=50, target_rate_hz=None)
    rows = budget_ablation(ds, "trials_train_test", [1.0, 0.1], classes=CD, cfg=cfg)
    assert rows[1].auc <= rows[0].auc - 0.02


def test_depressed_subject_fraction(separable):
    rows = budget_ablation(separable, "depressed_subjects", [0.5], classes=CD, cfg=FAST)
    assert rows[0].auc >= 0.9


def _behaviour_cohort(seed, agree):
    return synth.generate(synth.SynthConfig({"C": 20, "D": 20, "S": 0}, n_trials=40, channels=("Pz",),
                                            sample_rate_hz=20.0, behavior=synth.BehaviorSpec(agree),
                                            n_sentences=20, rng_seed=seed))


def test_behavioral_baseline_separates():
    agree = {"D:negative": 0.8, "C:negative": 0.2, "D:positive": 0.2, "C:positive": 0.8}
    assert behavioral_baseline(_behaviour_cohort(0, agree), classes=CD).auc >= 0.9


def test_behavioral_baseline_null():
    # LOSO on null data leans below chance, never above it
    aucs = [behavioral_baseline(_behaviour_cohort(s, {}), classes=CD).auc for s in range(20)]
    assert max(aucs) <= 0.65
    assert 0.35 <= float(np.median(aucs)) <= 0.65


def test_confusion():
    assert confusion_at_threshold([0.9, 0.1], [1, 0]) == (1.0, 1.0)
    assert confusion_at_threshold([0.9, 0.4, 0.2], [1, 1, 0]) == (0.5, 1.0)
    rng = np.random.default_rng(3)
    p = rng.random(40)
    y = rng.integers(0, 2, 40)
    tp = sum(1 for a, b in zip(p, y) if a > 0.5 and b == 1)
    fn = sum(1 for a, b in zip(p, y) if a <= 0.5 and b == 1)
    tn = sum(1 for a, b in zip(p, y) if a <= 0.5 and b == 0)
    fp = sum(1 for a, b in zip(p, y) if a > 0.5 and b == 0)
    assert confusion_at_threshold(list(p), list(y)) == (tp / (tp + fn), tn / (tn + fp))
    with pytest.raises(DataError):
        confusion_at_threshold([0.2, 0.3], [1, 1])


def test_response_target_units(small_ds):
    cfg = BootstrapConfig(n_boot=10, target_rate_hz=None, target_label="response")
    res = run_subject_classification(small_ds, classes=(("C",), ("D", "S")), cfg=cfg)
    assert res.target_label == "response"
    assert {p.unit.rsplit(":", 1)[1] for p in res.probabilities} <= {"agree", "disagree"}
    for p in res.probabilities:
        assert p.label == (1 if p.unit.endswith(":agree") else 0)
    # both units of a subject sit in the same fold
    fold_of = {s: k for k, f in enumerate(res.folds) for s in f}
    assert all(p.subject_id in fold_of for p in res.probabilities)


def test_bootstrap_grid_and_table_structure(small_ds):
    cfg = BootstrapConfig(n_boot=5, trials_per_boot=5, target_rate_hz=None)
    rows = bootstrap_grid(small_ds, n_values=(5, 10), b_values=(2, 4), cfg=cfg, n_ci_boot=50, n_perm=50)
    assert [(r.parameter, r.value) for r in rows][::2] == [("N", 5), ("N", 10), ("B", 2), ("B", 4)]
    assert {r.condition for r in rows} == {"Sentence Sentiment", "Response Type"}
    table = classify_table(small_ds, rows=(("Baseline", "All Sentences", "all", "single"),),
                           cfg=cfg, n_ci_boot=50, n_perm=50)
    assert [r.task for r in table] == ["C vs DS", "D vs S"]
    assert all(r.result.ci_lo <= r.result.auc <= r.result.ci_hi for r in table)
