import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from eegdecode import synth
from eegdecode.dataset import (ChannelLayout, Dataset, Gender, Group, Region, Response, Sentiment,
                               SubjectRecord, TrialMeta, load_dataset, save_dataset, validate)
from eegdecode.errors import DataError


def _meta(i, response=Response.AGREE, rt=500.0):
    return TrialMeta(i, Sentiment.POSITIVE, Sentiment.NEGATIVE, response,
                     None if response is Response.NONE else rt)


def tiny(n_subjects=2, n_trials=4, n_ch=3, n_samples=10, seed=0, region_map=None):
    rng = np.random.default_rng(seed)
    layout = ChannelLayout(("Fz", "Cz", "Pz")[:n_ch], region_map or {})
    subjects = []
    for s in range(n_subjects):
        data = rng.standard_normal((n_trials, n_ch, n_samples)).astype(np.float32)
        metas = [_meta(i) for i in range(n_trials)]
        subjects.append(SubjectRecord(f"s{s}", "C" if s % 2 == 0 else "D", "female", data, metas,
                                      100.0, -200.0, {"phq9_screen": 3}))
    return Dataset(layout, subjects, 100.0, -200.0, n_samples, "unit test")


def test_declared_shapes_round_trip(tmp_path):
    ds = tiny()
    save_dataset(ds, tmp_path)
    back = load_dataset(tmp_path)
    assert back == ds
    assert [s.data.shape for s in back.subjects] == [(4, 3, 10), (4, 3, 10)]


def test_mmap_load_matches(tmp_path):
    ds = tiny()
    save_dataset(ds, tmp_path)
    assert load_dataset(tmp_path, mmap=True) == ds


def test_nan_reports_subject_and_trial(tmp_path):
    ds = tiny()
    save_dataset(ds, tmp_path)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    entry = manifest["subjects"][1]
    arr = np.fromfile(tmp_path / entry["data_file"], dtype="<f4")
    arr[2 * 3 * 10 + 7] = np.nan  # trial 2
    arr.tofile(tmp_path / entry["data_file"])
    with pytest.raises(DataError, match=r"subject s1.*trial 2"):
        load_dataset(tmp_path, verify_checksums=False)


def test_channel_count_mismatch_is_shape_error(tmp_path):
    ds = tiny()
    save_dataset(ds, tmp_path)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    entry = manifest["subjects"][0]
    arr = np.fromfile(tmp_path / entry["data_file"], dtype="<f4").reshape(4, 3, 10)
    arr[:, :2].copy().tofile(tmp_path / entry["data_file"])  # one channel short
    with pytest.raises(DataError, match="expected"):
        load_dataset(tmp_path)


def test_checksum_mismatch(tmp_path):
    save_dataset(tiny(), tmp_path)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    path = tmp_path / manifest["subjects"][0]["data_file"]
    arr = np.fromfile(path, dtype="<f4")
    arr[0] += 1.0
    arr.tofile(path)
    with pytest.raises(DataError, match="checksum"):
        load_dataset(tmp_path)


def test_missing_files(tmp_path):
    with pytest.raises(DataError, match="manifest"):
        load_dataset(tmp_path)
    save_dataset(tiny(), tmp_path)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    (tmp_path / manifest["subjects"][0]["data_file"]).unlink()
    with pytest.raises(DataError, match="missing data file"):
        load_dataset(tmp_path)


def test_unknown_enum_token(tmp_path):
    save_dataset(tiny(), tmp_path)
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    meta_path = tmp_path / manifest["subjects"][0]["meta_file"]
    meta_path.write_text(meta_path.read_text().replace("agree", "maybe", 1))
    with pytest.raises(DataError, match="maybe"):
        load_dataset(tmp_path)


def test_empty_subject_round_trips(tmp_path):
    ds = tiny()
    empty = SubjectRecord.from_trials("e0", "S", "male", [], n_channels=3, n_samples=10,
                                      sample_rate_hz=100.0, epoch_start_ms=-200.0)
    ds.subjects.append(empty)
    save_dataset(ds, tmp_path)
    back = load_dataset(tmp_path)
    assert back == ds
    assert back.subject("e0").n_trials == 0


def test_region_map_preserved(tmp_path):
    ds = tiny(region_map={"Fz": "central"})
    save_dataset(ds, tmp_path)
    back = load_dataset(tmp_path)
    assert back.layout.region_map["Fz"] is Region.CENTRAL
    assert back.layout.region_map["Pz"] is Region.POSTERIOR


def test_synthetic_cohort_round_trips_bit_exact(tmp_path):
    cfg = synth.calibration_preset("strong", rng_seed=3, n_per_group=5, n_trials=6)
    ds = synth.generate(cfg)
    save_dataset(ds, tmp_path)
    back = load_dataset(tmp_path)
    assert back == ds
    for a, b in zip(ds.subjects, back.subjects):
        assert a.data.tobytes() == b.data.tobytes()


@st.composite
def datasets(draw):
    n_ch = draw(st.integers(1, 3))
    n_samples = draw(st.integers(1, 6))
    n_subj = draw(st.integers(1, 3))
    floats = st.floats(-1e6, 1e6, allow_nan=False, width=32)
    subjects = []
    for s in range(n_subj):
        n_trials = draw(st.integers(0, 3))
        values = draw(st.lists(floats, min_size=n_trials * n_ch * n_samples,
                               max_size=n_trials * n_ch * n_samples))
        data = np.asarray(values, dtype=np.float32).reshape(n_trials, n_ch, n_samples)
        metas = []
        for i in range(n_trials):
            resp = draw(st.sampled_from(list(Response)))
            rt = None if resp is Response.NONE else draw(st.floats(0, 5000, allow_nan=False))
            metas.append(TrialMeta(draw(st.integers(0, 50)), draw(st.sampled_from(list(Sentiment))),
                                   draw(st.sampled_from(list(Sentiment))), resp, rt))
        subjects.append(SubjectRecord(f"id-{s}", draw(st.sampled_from(list(Group))),
                                      draw(st.sampled_from(list(Gender))), data, metas, 250.0, -100.0,
                                      {"gad7": draw(st.integers(0, 21))}))
    layout = ChannelLayout(("Fp1", "C3", "O2")[:n_ch])
    return Dataset(layout, subjects, 250.0, -100.0, n_samples)


@given(datasets())
def test_round_trip_property(tmp_path_factory, ds):
    path = tmp_path_factory.mktemp("rt")
    save_dataset(ds, path)
    assert load_dataset(path) == ds


def test_validate_clean_and_pure():
    ds = tiny()
    assert validate(ds) == []
    assert validate(ds) == validate(ds)


def test_validate_missing_response_time():
    ds = tiny()
    ds.subjects[0].meta[1] = TrialMeta(1, Sentiment.POSITIVE, Sentiment.POSITIVE, Response.AGREE, None)
    out = validate(ds)
    assert len(out) == 1
    v = out[0]
    assert (v.field, v.subject_id, v.trial_index) == ("response_time_ms", "s0", 1)


def test_validate_duplicate_subject():
    ds = tiny()
    ds.subjects[1].subject_id = "s0"
    out = validate(ds)
    assert [v.field for v in out] == ["subject_id"]


def test_validate_non_finite_and_shape():
    ds = tiny()
    ds.subjects[0].data[3, 0, 0] = math.inf
    ds.subjects[1].data = ds.subjects[1].data[:, :2]
    fields = sorted((v.field, v.subject_id, v.trial_index) for v in validate(ds))
    assert fields == [("data", "s0", 3), ("data", "s1", None)]


def test_layout_invariants():
    with pytest.raises(DataError):
        ChannelLayout(("Fz", "Fz"))
    with pytest.raises(DataError):
        ChannelLayout(())
    with pytest.raises(DataError):
        ChannelLayout(("Fz",), {"Cz": "central"})
    lay = ChannelLayout.standard(64)
    anterior = [lay.names[i] for i in lay.indices(regions=["anterior"])]
    expected = [n for n in lay.names if n.startswith("F") and not n.startswith("FC") or n.startswith("AF")]
    assert anterior == expected
