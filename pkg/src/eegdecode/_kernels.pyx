"""Compiled hot loops.

Mirrors ``_kernels_py`` function for function; the dispatcher in
``eegdecode.kernels`` picks whichever is importable.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport exp, fabs, log1p
from scipy.linalg.cython_blas cimport dgemv

cnp.import_array()

cdef int MAX_BACKTRACK = 60
cdef double STEP_MIN = 1e-12
cdef double STEP_MAX = 1e12


cdef inline double _softplus(double z) noexcept nogil:
    if z > 0:
        return z + log1p(exp(-z))
    return log1p(exp(z))


cdef inline double _sigmoid(double z) noexcept nogil:
    cdef double e
    if z >= 0:
        e = exp(-z)
        return 1.0 / (1.0 + e)
    e = exp(z)
    return e / (1.0 + e)


cdef inline void _linear(double* X, int n, int d, double* w, double b,
                         double* z) noexcept nogil:
    # z = X w + b, X row-major (n, d) == column-major (d, n) for BLAS
    cdef char trans = b'T'
    cdef int inc = 1
    cdef double one = 1.0
    cdef int i
    for i in range(n):
        z[i] = b
    dgemv(&trans, &d, &n, &one, X, &d, w, &inc, &one, z, &inc)


cdef inline double _loss(double* z, double* y, int n) noexcept nogil:
    cdef double acc = 0.0
    cdef int i
    for i in range(n):
        acc += _softplus(z[i]) - y[i] * z[i]
    return acc / n


cdef inline double _grad(double* X, int n, int d, double* z, double* y,
                         double* r, double* gw) noexcept nogil:
    # returns the intercept gradient, fills gw with the weight gradient
    cdef char trans = b'N'
    cdef int inc = 1
    cdef double scale = 1.0 / n
    cdef double zero = 0.0
    cdef double gb = 0.0
    cdef int i
    for i in range(n):
        r[i] = _sigmoid(z[i]) - y[i]
        gb += r[i]
    dgemv(&trans, &d, &n, &scale, X, &d, r, &inc, &zero, gw, &inc)
    return gb / n


cdef inline double _l1(double* w, int d) noexcept nogil:
    cdef double acc = 0.0
    cdef int j
    for j in range(d):
        acc += fabs(w[j])
    return acc


def logreg_ista(double[:, ::1] X, double[::1] y, double lam, int max_iter,
                double tol, double[::1] w_init, double b_init, bint record=False):
    """Proximal gradient for L1 logistic regression with backtracking.

    Returns ``(w, b, n_iter, converged, history)``; ``history`` holds the
    penalised objective after every accepted step (and the start point)
    when ``record`` is set, otherwise ``None``.
    """
    cdef int n = X.shape[0]
    cdef int d = X.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] w_arr = np.array(w_init, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] w_new_arr = np.empty(d)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] gw_arr = np.empty(d)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] gw_new_arr = np.empty(d)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] z_arr = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] z_new_arr = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] r_arr = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] hist_arr = np.empty(max_iter + 1 if record else 1)

    cdef double* Xp = &X[0, 0]
    cdef double* yp = &y[0]
    cdef double* w = <double*> w_arr.data
    cdef double* w_new = <double*> w_new_arr.data
    cdef double* gw = <double*> gw_arr.data
    cdef double* gw_new = <double*> gw_new_arr.data
    cdef double* z = <double*> z_arr.data
    cdef double* z_new = <double*> z_new_arr.data
    cdef double* r = <double*> r_arr.data
    cdef double* hist = <double*> hist_arr.data

    cdef double b = b_init, b_new = 0.0, gb, gb_new
    cdef double f, f_new, t = 1.0, thr, v, lin, sq, delta, s_y, s_s, dg
    cdef int it = 0, j, bt
    cdef bint converged = False, accepted

    with nogil:
        _linear(Xp, n, d, w, b, z)
        f = _loss(z, yp, n)
        gb = _grad(Xp, n, d, z, yp, r, gw)
        if record:
            hist[0] = f + lam * _l1(w, d)
        while it < max_iter:
            accepted = False
            for bt in range(MAX_BACKTRACK):
                thr = t * lam
                lin = 0.0
                sq = 0.0
                delta = 0.0
                for j in range(d):
                    v = w[j] - t * gw[j]
                    if v > thr:
                        v = v - thr
                    elif v < -thr:
                        v = v + thr
                    else:
                        v = 0.0
                    w_new[j] = v
                    v = v - w[j]
                    lin += gw[j] * v
                    sq += v * v
                    if fabs(v) > delta:
                        delta = fabs(v)
                b_new = b - t * gb
                v = b_new - b
                lin += gb * v
                sq += v * v
                if fabs(v) > delta:
                    delta = fabs(v)
                _linear(Xp, n, d, w_new, b_new, z_new)
                f_new = _loss(z_new, yp, n)
                if f_new <= f + lin + sq / (2.0 * t):
                    accepted = True
                    break
                t = t * 0.5
                if t < STEP_MIN:
                    break
            if not accepted:
                break
            it += 1
            gb_new = _grad(Xp, n, d, z_new, yp, r, gw_new)
            # Barzilai-Borwein guess for the next trial step
            s_y = 0.0
            s_s = 0.0
            for j in range(d):
                v = w_new[j] - w[j]
                dg = gw_new[j] - gw[j]
                s_y += v * dg
                s_s += v * v
                w[j] = w_new[j]
                gw[j] = gw_new[j]
            v = b_new - b
            s_y += v * (gb_new - gb)
            s_s += v * v
            b = b_new
            gb = gb_new
            for j in range(n):
                z[j] = z_new[j]
            f = f_new
            if record:
                hist[it] = f + lam * _l1(w, d)
            if delta / t <= tol:
                converged = True
                break
            if s_y > 0.0:
                t = s_s / s_y
            else:
                t = t * 2.0
            if t < STEP_MIN:
                t = STEP_MIN
            elif t > STEP_MAX:
                t = STEP_MAX

    history = hist_arr[: it + 1].copy() if record else None
    return w_arr, float(b), it, bool(converged), history


def max_cluster_mass(double[:, ::1] stat, cnp.uint8_t[:, ::1] mask, int min_len):
    """Largest summed ``stat`` over contiguous ``mask`` runs of length >= min_len, per row.

    Rows without a qualifying run get 0.
    """
    cdef Py_ssize_t n_rows = stat.shape[0], n_times = stat.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.zeros(n_rows)
    cdef double[::1] out_v = out
    cdef Py_ssize_t i, k
    cdef int run_len
    cdef double mass, best
    cdef bint have
    with nogil:
        for i in range(n_rows):
            best = 0.0
            have = False
            run_len = 0
            mass = 0.0
            for k in range(n_times + 1):
                if k < n_times and mask[i, k]:
                    run_len += 1
                    mass += stat[i, k]
                else:
                    if run_len >= min_len and (not have or mass > best):
                        best = mass
                        have = True
                    run_len = 0
                    mass = 0.0
            out_v[i] = best
    return out


def bootstrap_means(double[:, ::1] trials, cnp.intp_t[:, ::1] idx):
    """Row-wise means ``trials[idx[i]].mean(0)`` without the (N, B, F) temporary."""
    cdef Py_ssize_t n_boot = idx.shape[0], n_draw = idx.shape[1]
    cdef Py_ssize_t n_feat = trials.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=2] out = np.zeros((n_boot, n_feat))
    cdef double[:, ::1] o = out
    cdef Py_ssize_t i, j, f, src
    cdef double inv = 1.0 / n_draw
    with nogil:
        for i in range(n_boot):
            for j in range(n_draw):
                src = idx[i, j]
                for f in range(n_feat):
                    o[i, f] += trials[src, f]
            for f in range(n_feat):
                o[i, f] *= inv
    return out
