"""L1-regularised binary logistic regression.

Minimises ``mean(log(1 + exp(-y~ (Xw + b)))) + lam * ||w||_1`` (intercept
unpenalised) by proximal gradient with Barzilai-Borwein trial steps and a
backtracking line search.  The backtracking condition makes every accepted
step non-increasing in the penalised objective, and the soft-threshold
proximal map yields exact zeros, so :func:`nonzero_support` is exact.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from ._seeding import rng_for
from .errors import ConfigError, DataError


@dataclass(frozen=True)
class FitConfig:
    lam: float = 0.1
    max_iter: int = 2000
    tol: float = 1e-7
    standardize: bool = True
    rng_seed: int = 0
    init_jitter: float = 0.0
    oversample: bool = False

    def __post_init__(self):
        if self.lam < 0:
            raise ConfigError(f"lambda must be >= 0, got {self.lam}")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be >= 1")
        if self.tol <= 0:
            raise ConfigError("tol must be > 0")
        if self.init_jitter < 0:
            raise ConfigError("init_jitter must be >= 0")

    def with_seed(self, seed: int) -> "FitConfig":
        return FitConfig(self.lam, self.max_iter, self.tol, self.standardize, seed,
                         self.init_jitter, self.oversample)


@dataclass(frozen=True, eq=False)
class LogRegModel:
    weights: np.ndarray
    intercept: float
    lam: float
    n_iter_run: int
    converged: bool
    history: np.ndarray | None = field(default=None, repr=False)

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.weights.shape[0]:
            raise DataError(f"expected {self.weights.shape[0]} features, got array of shape {X.shape}")
        return X @ self.weights + self.intercept

    def to_dict(self) -> dict:
        return {
            "weights": [float(w) for w in self.weights],
            "intercept": float(self.intercept),
            "lambda": float(self.lam),
            "converged": bool(self.converged),
            "n_iter_run": int(self.n_iter_run),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "LogRegModel":
        return cls(np.asarray(d["weights"], dtype=np.float64), float(d["intercept"]),
                   float(d["lambda"]), int(d["n_iter_run"]), bool(d["converged"]))


def sigmoid(z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(-np.abs(z))
    return np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))


def soft_threshold(v, thr):
    v = np.asarray(v, dtype=np.float64)
    return np.sign(v) * np.maximum(np.abs(v) - thr, 0.0)


def smooth_loss(w, b, X, y01) -> float:
    z = X @ w + b
    return float(np.mean(np.maximum(z, 0.0) + np.log1p(np.exp(-np.abs(z))) - y01 * z))


def smooth_grad(w, b, X, y01) -> tuple[np.ndarray, float]:
    r = sigmoid(X @ w + b) - y01
    return X.T @ r / len(y01), float(r.mean())


def objective(w, b, X, y01, lam) -> float:
    return smooth_loss(w, b, X, y01) + lam * float(np.abs(w).sum())


def _check_xy(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DataError(f"X must be (n, d) matching y; got {X.shape} and {y.shape}")
    if X.shape[0] < 2 or X.shape[1] < 1:
        raise DataError(f"need n >= 2 samples and d >= 1 features, got {X.shape}")
    if not np.isfinite(X).all():
        raise DataError("X contains non-finite values")
    labels = set(np.unique(y).tolist())
    if not labels <= {0, 1}:
        raise DataError(f"labels must be 0/1, got {sorted(labels)}")
    if len(labels) < 2:
        raise DataError("both classes must be present to fit")
    return X, y.astype(np.float64)


def oversample_minority(X, y, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """Append random duplicates of minority-class rows until classes balance."""
    y = np.asarray(y)
    pos = np.flatnonzero(y == 1)
    neg = np.flatnonzero(y == 0)
    if len(pos) == len(neg):
        return X, y
    minority, n_extra = (pos, len(neg) - len(pos)) if len(pos) < len(neg) else (neg, len(pos) - len(neg))
    extra = rng.choice(minority, size=n_extra, replace=True)
    return np.concatenate([X, X[extra]]), np.concatenate([y, y[extra]])


def fit(X, y, cfg: FitConfig = FitConfig(), record_history: bool = False) -> LogRegModel:
    X, y = _check_xy(X, y)
    if cfg.oversample:
        X, y = oversample_minority(X, y, rng_for(cfg.rng_seed, "oversample"))
    if cfg.standardize:
        mu = X.mean(axis=0)
        sd = X.std(axis=0)
        sd = np.where(sd < 1e-12, 1.0, sd)
        Z = (X - mu) / sd
    else:
        Z = X
    d = X.shape[1]
    if cfg.init_jitter > 0:
        w0 = rng_for(cfg.rng_seed, "init").normal(0.0, cfg.init_jitter, d)
    else:
        w0 = np.zeros(d)
    w, b, n_iter, converged, hist = kernels.logreg_ista(
        Z, y, cfg.lam, cfg.max_iter, cfg.tol, w0, 0.0, record_history)
    if cfg.standardize:
        w_orig = w / sd
        b = b - float(np.sum(w * mu / sd))
        w = w_orig
    return LogRegModel(np.asarray(w), float(b), cfg.lam, int(n_iter), bool(converged), hist)


def predict_proba(model: LogRegModel, X) -> np.ndarray:
    return sigmoid(model.decision_function(X))


def nonzero_support(model: LogRegModel) -> np.ndarray:
    return model.weights != 0.0
