import warnings

import numpy as np
import pytest

from eegdecode import mvpa, synth
from eegdecode.cluster import cluster_test
from eegdecode.errors import DataError
from eegdecode.grouping import ErpSeries, pair
from eegdecode.logreg import FitConfig
from eegdecode.prep import PrepConfig
from eegdecode.stats import auc
from eegdecode.subject_clf import BootstrapConfig, classification_evaluator

from oracles import pairwise_auc

COARSE = PrepConfig(mvpa_window_ms=50.0)


def erps_from(X, rate=20.0, start=-200.0):
    return {f"s{i:02d}": ErpSeries(f"s{i:02d}", X[i], 1, "all", rate, start) for i in range(len(X))}


def labels_for(y):
    return {f"s{i:02d}": int(v) for i, v in enumerate(y)}


@pytest.fixture(scope="module")
def strong_erps(strong_ds):
    return mvpa.build_erps(strong_ds, prep=COARSE), mvpa.group_labels(strong_ds)


def test_offset_recovered_inside_window():
    rng = np.random.default_rng(0)
    y = np.repeat([0, 1], 20)
    X = rng.standard_normal((40, 4, 44))
    times = -200.0 + 25.0 * np.arange(44)
    inside = (times >= 500) & (times < 700)
    X[np.ix_(y == 1, [1], np.flatnonzero(inside))] += 5.0
    dts = mvpa.decode_timecourse(erps_from(X, rate=40.0), labels_for(y), seeds=[0])
    assert np.all(dts.mean_auc[inside] > 0.95)
    assert abs(dts.mean_auc[~inside].mean() - 0.5) <= 0.1


def test_permuted_labels_near_chance(strong_ds, strong_erps):
    # LOSO leaves each held-out subject opposite its own class in the
    # training means, so null AUCs sit a little below 0.5; temporal
    # correlation of the noise makes the timepoint mean vary from one
    # permutation to the next
    erps, labels = strong_erps
    ids = sorted(labels)
    rng = np.random.default_rng(0)
    means = []
    for _ in range(20):
        perm = dict(zip(ids, rng.permutation([labels[i] for i in ids]).tolist()))
        means.append(mvpa.decode_timecourse(erps, perm, seeds=[0]).mean_auc.mean())
    assert 0.4 <= np.mean(means) <= 0.5
    assert np.mean([0.3 <= m <= 0.65 for m in means]) >= 0.95


def test_single_timepoint_matches_pairwise():
    X = np.array([[[0.0], [1.0]], [[0.2], [0.1]], [[1.5], [0.3]], [[1.1], [2.0]]])
    y = np.array([0, 0, 1, 1])
    dts = mvpa.decode_timecourse(erps_from(X), labels_for(y), seeds=[0], cfg=FitConfig(lam=0.01))
    scores = dts.heldout_scores[0, :, 0]
    assert dts.auc_per_seed[0, 0] == pairwise_auc(scores.tolist(), y.tolist())


def test_affine_rescale_invariance():
    rng = np.random.default_rng(2)
    y = np.repeat([0, 1], 8)
    X = rng.standard_normal((16, 3, 6)) + y[:, None, None] * 0.8
    a = mvpa.decode_timecourse(erps_from(X), labels_for(y), seeds=[0])
    b = mvpa.decode_timecourse(erps_from(4.0 * X - 7.0), labels_for(y), seeds=[0])
    np.testing.assert_array_equal(a.auc_per_seed, b.auc_per_seed)
    for t in range(6):
        assert np.array_equal(np.argsort(a.heldout_scores[0, :, t], kind="stable"),
                              np.argsort(b.heldout_scores[0, :, t], kind="stable"))


def test_invariants_and_threads(strong_erps):
    erps, labels = strong_erps
    cfg = FitConfig(init_jitter=1e-3)
    one = mvpa.decode_timecourse(erps, labels, seeds=[0, 1], cfg=cfg)
    four = mvpa.decode_timecourse(erps, labels, seeds=[0, 1], cfg=cfg, threads=4)
    assert one.auc_per_seed.tobytes() == four.auc_per_seed.tobytes()
    assert one.support_counts.tobytes() == four.support_counts.tobytes()
    assert np.all((one.auc_per_seed >= 0) & (one.auc_per_seed <= 1))
    assert np.all(one.support_counts <= one.n_models)
    assert len(one.rows()) == 2 * one.timepoints_ms.size


def test_seed_collapse_warns(strong_erps):
    erps, labels = strong_erps
    with pytest.warns(RuntimeWarning, match="identical"):
        dts = mvpa.decode_timecourse(erps, labels, seeds=[0, 1, 2])
    assert np.all(dts.auc_per_seed[0] == dts.auc_per_seed[2])
    assert dts.n_models[0] == 3 * len(labels)


def test_strong_effect_importance(strong_ds, strong_erps):
    erps, labels = strong_erps
    dts = mvpa.decode_timecourse(erps, labels, seeds=[0],
                                 channels=strong_ds.layout.names)
    window = (dts.timepoints_ms >= 500) & (dts.timepoints_ms < 700)
    assert dts.mean_auc[window].mean() > 0.9
    imp = mvpa.channel_importance(dts, window)
    top = {strong_ds.layout.names[i] for i in np.argsort(-imp.proportion, kind="stable")[:2]}
    assert top == {"Pz", "P4"}


def test_channel_importance_trivial():
    support = np.array([[0, 0, 0], [10, 10, 10], [10, 0, 6]])
    dts = mvpa.DecodingTimeSeries(np.array([0.0, 10.0, 20.0]), np.full((1, 3), 0.5), support,
                                  np.array([10, 10, 10]), (0,), ("a",), 0.1)
    imp = mvpa.channel_importance(dts, [0, 1, 2])
    np.testing.assert_allclose(imp.proportion, [0.0, 1.0, 2 / 3])
    assert imp.cluster_window_ms == (0.0, 30.0)
    with pytest.raises(DataError):
        mvpa.channel_importance(dts, np.zeros(3, dtype=bool))
    with pytest.raises(DataError):
        mvpa.channel_importance(dts, [5])


def test_cluster_on_decoding(strong_ds):
    erps = mvpa.build_erps(strong_ds)
    dts = mvpa.decode_timecourse(erps, mvpa.group_labels(strong_ds), seeds=range(10),
                                 cfg=FitConfig(init_jitter=0.05, oversample=True), threads=4)
    res = cluster_test(dts.auc_per_seed, times_ms=dts.timepoints_ms)
    c = res.largest_significant()
    assert c is not None and c.start_ms < 700 and c.end_ms > 500


def test_build_erps_condition_and_exclusion(small_ds):
    cond = pair("sentence_sentiment", "contrast")
    erps = mvpa.build_erps(small_ds, cond, PrepConfig(mvpa_window_ms=20.0))
    assert len(erps) == len(small_ds.subjects)
    e = next(iter(erps.values()))
    assert e.data.shape == (4, 55) and e.sample_rate_hz == 50.0
    assert "sentence_sentiment" in e.grouping
    excluded = []
    erps = mvpa.build_erps(small_ds, pair("response_type", "a"), excluded=excluded)
    assert len(erps) + len(excluded) == len(small_ds.subjects)


def test_stack_errors():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((4, 2, 3))
    with pytest.raises(DataError):
        mvpa.decode_timecourse(erps_from(X), labels_for([0, 1, 1, 1]), seeds=[0])
    with pytest.raises(DataError):
        mvpa.stack_erps(erps_from(X), {})


def test_restrict_erps(strong_erps):
    erps, _ = strong_erps
    sub = mvpa.restrict_erps(erps, (-200.0, 0.0), [0, 3])
    e = next(iter(sub.values()))
    assert e.data.shape == (2, 4) and e.epoch_start_ms == -200.0


def test_ablation_grid_shape_and_trend(strong_ds):
    ev = classification_evaluator(strong_ds, classes=(("C",), ("D",)),
                                  cfg=BootstrapConfig(n_boot=50, target_rate_hz=None))
    rows = mvpa.ablation_grid(ev, time_ends_ms=(0.0, 450.0, 900.0))
    vals = {r.value: r.auc for r in rows}
    assert [r.axis for r in rows] == ["time_end_ms"] * 3 + ["region"] * 3
    assert vals["900"] >= max(vals["0"], vals["450"]) - 0.05
    null_cells = [vals["0"], vals["450"], vals["anterior"], vals["central"]]
    assert abs(np.mean(null_cells) - 0.5) <= 0.1
    assert vals["posterior"] > 0.9


def test_decode_window_flattened(strong_erps):
    erps, labels = strong_erps
    sub = mvpa.restrict_erps(erps, (500.0, 700.0))
    assert mvpa.decode_window(sub, labels, seeds=[0]).item() > 0.9
