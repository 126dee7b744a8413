import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from eegdecode import kernels

from oracles import max_mass

BACKENDS = kernels.available_backends()
needs_both = pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled backend not built")


def test_python_always_available():
    assert "python" in BACKENDS
    assert kernels.backend() in BACKENDS


def test_use_backend_restores():
    before = kernels.backend()
    with kernels.use_backend("python"):
        assert kernels.backend() == "python"
    assert kernels.backend() == before
    with pytest.raises(ValueError):
        kernels.set_backend("fortran")


@pytest.mark.parametrize("name", BACKENDS)
@given(st.integers(1, 6).flatmap(lambda t: st.tuples(
    arrays(np.float64, (3, t), elements=st.floats(0, 10)),
    arrays(np.bool_, (3, t)))), st.integers(1, 4))
def test_cluster_mass_oracle(name, sm, min_len):
    stat, mask = sm
    with kernels.use_backend(name):
        got = kernels.max_cluster_mass(stat, mask, min_len)
    want = [max_mass(stat[i], mask[i], min_len) for i in range(3)]
    np.testing.assert_allclose(got, want, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("name", BACKENDS)
def test_bootstrap_means_oracle(name, rng):
    trials = rng.standard_normal((12, 7))
    idx = rng.integers(0, 12, size=(9, 5))
    with kernels.use_backend(name):
        got = kernels.bootstrap_means(trials, idx)
    np.testing.assert_allclose(got, trials[idx].mean(axis=1), atol=1e-12)


@needs_both
# lam > 0 keeps the minimiser bounded even on separable draws; with lam = 0
# the iterates diverge and rounding differences change the stopping point
@given(st.integers(0, 10_000), st.floats(0.02, 0.5), st.integers(2, 30), st.integers(1, 6))
def test_ista_backends_agree(seed, lam, n, d):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    y = (rng.random(n) < 0.5).astype(float)
    w0 = np.zeros(d)
    out = {}
    for name in BACKENDS:
        with kernels.use_backend(name):
            out[name] = kernels.logreg_ista(X, y, lam, 5000, 1e-10, w0, 0.0, True)
    (wp, bp, ip, cp, hp), (wc, bc, ic, cc, hc) = out["python"], out["cython"]
    np.testing.assert_allclose(wc, wp, rtol=1e-6, atol=1e-7)
    assert abs(bc - bp) < 1e-6
    assert abs(hc[-1] - hp[-1]) < 1e-10
    assert np.all(np.diff(hc) <= 1e-12)


@needs_both
def test_backends_give_same_decode(strong_ds):
    from eegdecode import mvpa
    from eegdecode.prep import PrepConfig
    erps = mvpa.build_erps(strong_ds, prep=PrepConfig(mvpa_window_ms=50.0))
    labels = mvpa.group_labels(strong_ds)
    res = {}
    for name in BACKENDS:
        with kernels.use_backend(name):
            res[name] = mvpa.decode_timecourse(erps, labels, seeds=[0]).auc_per_seed
    np.testing.assert_allclose(res["python"], res["cython"], atol=1e-9)
