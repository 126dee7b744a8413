"""Pure numpy versions of the compiled kernels in ``_kernels.pyx``."""
import numpy as np

MAX_BACKTRACK = 60
STEP_MIN = 1e-12
STEP_MAX = 1e12


def _softplus(z):
    return np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z)))


def _sigmoid(z):
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def logreg_ista(X, y, lam, max_iter, tol, w_init, b_init, record=False):
    n = X.shape[0]
    w = np.array(w_init, dtype=np.float64)
    b = float(b_init)
    z = X @ w + b
    f = float(np.sum(_softplus(z) - y * z) / n)
    r = _sigmoid(z) - y
    gw = (X.T @ r) / n
    gb = float(r.sum() / n)
    hist = [f + lam * np.abs(w).sum()] if record else None
    t = 1.0
    it = 0
    converged = False
    while it < max_iter:
        accepted = False
        for _ in range(MAX_BACKTRACK):
            v = w - t * gw
            w_new = np.sign(v) * np.maximum(np.abs(v) - t * lam, 0.0)
            b_new = b - t * gb
            dw = w_new - w
            db = b_new - b
            lin = float(gw @ dw) + gb * db
            sq = float(dw @ dw) + db * db
            delta = max(float(np.max(np.abs(dw))) if dw.size else 0.0, abs(db))
            z_new = X @ w_new + b_new
            f_new = float(np.sum(_softplus(z_new) - y * z_new) / n)
            if f_new <= f + lin + sq / (2.0 * t):
                accepted = True
                break
            t *= 0.5
            if t < STEP_MIN:
                break
        if not accepted:
            break
        it += 1
        r = _sigmoid(z_new) - y
        gw_new = (X.T @ r) / n
        gb_new = float(r.sum() / n)
        s_y = float(dw @ (gw_new - gw)) + db * (gb_new - gb)
        s_s = sq
        w, b, gw, gb, z, f = w_new, b_new, gw_new, gb_new, z_new, f_new
        if record:
            hist.append(f + lam * np.abs(w).sum())
        if delta / t <= tol:
            converged = True
            break
        t = s_s / s_y if s_y > 0.0 else t * 2.0
        t = min(max(t, STEP_MIN), STEP_MAX)
    history = np.asarray(hist) if record else None
    return w, b, it, converged, history


def max_cluster_mass(stat, mask, min_len):
    n_rows, n_times = stat.shape
    out = np.zeros(n_rows)
    padded = np.zeros((n_rows, n_times + 2), dtype=np.int8)
    padded[:, 1:-1] = mask.astype(bool)
    edges = np.diff(padded, axis=1)
    csum = np.concatenate([np.zeros((n_rows, 1)), np.cumsum(stat, axis=1)], axis=1)
    for i in range(n_rows):
        starts = np.flatnonzero(edges[i] == 1)
        stops = np.flatnonzero(edges[i] == -1)
        keep = (stops - starts) >= min_len
        if keep.any():
            masses = csum[i, stops[keep]] - csum[i, starts[keep]]
            out[i] = masses.max()
    return out


def bootstrap_means(trials, idx):
    n_boot, n_draw = idx.shape
    out = np.zeros((n_boot, trials.shape[1]))
    for j in range(n_draw):
        out += trials[idx[:, j]]
    out *= 1.0 / n_draw
    return out
