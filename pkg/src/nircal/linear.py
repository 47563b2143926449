"""Linear base learners: guarded least squares on feature vectors and
single-response partial least squares regression on full spectra with
cross-validated factor selection.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericalError
from .seeding import make_rng

_RIDGE = 1e-8
_DEFLATION_TOL = 1e-12


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray
    intercept: float

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "intercept", float(self.intercept))


def fit_ols(F, y) -> LinearModel:
    """Least squares via normal equations with a tiny Tikhonov guard.

    The guard (1e-8 on the feature block, none on the intercept) keeps
    near-collinear resampled designs solvable without noticeably biasing
    well-posed fits.
    """
    F = np.atleast_2d(np.asarray(F, dtype=float))
    y = np.asarray(y, dtype=float)
    if y.shape != (F.shape[0],):
        raise DataError(f"targets shape {y.shape} incompatible with {F.shape[0]} samples")
    if not (np.all(np.isfinite(F)) and np.all(np.isfinite(y))):
        raise DataError("non-finite values in regression inputs")
    n, d = F.shape
    A = np.column_stack([F, np.ones(n)])
    G = A.T @ A
    G[np.arange(d), np.arange(d)] += _RIDGE
    coef = np.linalg.solve(G, A.T @ y)
    return LinearModel(coef[:d], coef[d])


def predict_linear(model: LinearModel, F) -> np.ndarray | float:
    F = np.asarray(F, dtype=float)
    single = F.ndim == 1
    F = np.atleast_2d(F)
    if F.shape[1] != model.weights.size:
        raise DataError(
            f"feature dimension {F.shape[1]} does not match model dimension {model.weights.size}"
        )
    out = F @ model.weights + model.intercept
    return float(out[0]) if single else out


@dataclass(frozen=True)
class PlsRegModel:
    """Fitted PLS1 regression: factor weights/loadings and centering statistics."""

    n_factors: int
    x_center: np.ndarray
    y_center: float
    weights: np.ndarray      # (n_points, a), unit-norm factor weights
    loadings: np.ndarray     # (n_points, a)
    y_loadings: np.ndarray   # (a,)
    cv_rmse: np.ndarray | None = None   # per-factor-count CV curve when selected by CV

    def __post_init__(self):
        for field in ("x_center", "weights", "loadings", "y_loadings", "cv_rmse"):
            value = getattr(self, field)
            if value is not None:
                arr = np.array(value, dtype=float)
                arr.setflags(write=False)
                object.__setattr__(self, field, arr)
        object.__setattr__(self, "y_center", float(self.y_center))


def _check_xy(X, y) -> tuple[np.ndarray, np.ndarray]:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    if y.shape != (X.shape[0],):
        raise DataError(f"targets shape {y.shape} incompatible with {X.shape[0]} samples")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DataError("non-finite values in regression inputs")
    return X, y


def _extract_factors(Xc: np.ndarray, yc: np.ndarray, a: int, strict: bool):
    """NIPALS factor extraction on centered data.

    strict mode raises when extraction degenerates before a factors; tolerant
    mode (used inside cross-validation) returns what could be extracted.
    """
    Xd = Xc.copy()
    yd = yc.copy()
    weights, loadings, y_loadings = [], [], []
    for j in range(a):
        w = Xd.T @ yd
        w_norm = float(np.linalg.norm(w))
        if w_norm < _DEFLATION_TOL:
            if strict:
                raise NumericalError(f"deflation degenerated after {j} factors")
            break
        w /= w_norm
        t = Xd @ w
        tt = float(t @ t)
        if tt < _DEFLATION_TOL:
            if strict:
                raise NumericalError(f"deflation degenerated after {j} factors")
            break
        p = Xd.T @ t / tt
        q = float(yd @ t) / tt
        Xd -= np.outer(t, p)
        yd = yd - q * t
        weights.append(w)
        loadings.append(p)
        y_loadings.append(q)
    return weights, loadings, y_loadings


def fit_pls1(X, y, a: int) -> PlsRegModel:
    """Classical NIPALS PLS1 with a latent variables."""
    X, y = _check_xy(X, y)
    n, p = X.shape
    if not 1 <= a <= min(n - 1, p):
        raise ValueError(f"factor count must satisfy 1 <= a <= {min(n - 1, p)}, got {a}")
    if float(np.var(y)) < _DEFLATION_TOL:
        raise DataError("targets have zero variance; nothing to regress on")
    x_center = X.mean(axis=0)
    y_center = float(y.mean())
    W, P, q = _extract_factors(X - x_center, y - y_center, a, strict=True)
    return PlsRegModel(a, x_center, y_center,
                       np.column_stack(W), np.column_stack(P), np.array(q))


def predict_pls(model: PlsRegModel, X) -> np.ndarray | float:
    """Score new spectra through the stored factors, deflating as in fitting."""
    X = np.asarray(X, dtype=float)
    single = X.ndim == 1
    Xd = np.atleast_2d(X) - model.x_center
    if Xd.shape[1] != model.x_center.size:
        raise DataError(
            f"grid length {Xd.shape[1]} does not match model length {model.x_center.size}"
        )
    out = np.full(Xd.shape[0], model.y_center)
    Xd = Xd.copy()
    for j in range(model.weights.shape[1]):
        t = Xd @ model.weights[:, j]
        out += model.y_loadings[j] * t
        Xd -= np.outer(t, model.loadings[:, j])
    return float(out[0]) if single else out


def _path_predict(W, P, q, x_center, y_center, X, max_factors: int) -> np.ndarray:
    """Predictions for every factor count 1..max_factors in one pass.

    Factor counts beyond what was extractable reuse the last available model.
    """
    Xd = np.atleast_2d(np.asarray(X, dtype=float)) - x_center
    Xd = Xd.copy()
    yhat = np.full(Xd.shape[0], y_center)
    preds = np.empty((Xd.shape[0], max_factors))
    for j in range(max_factors):
        if j < len(q):
            t = Xd @ W[j]
            yhat = yhat + q[j] * t
            Xd -= np.outer(t, P[j])
        preds[:, j] = yhat
    return preds


def fit_pls_cv(X, y, max_factors: int = 15, folds: int = 10, seed: int = 0) -> PlsRegModel:
    """Select the factor count by fold-wise cross-validated RMSE, then refit.

    Folds are contiguous blocks of a seeded random permutation; ties in the
    CV curve break toward fewer factors. The fitted model carries the curve.
    """
    X, y = _check_xy(X, y)
    n, p = X.shape
    if max_factors < 1:
        raise ValueError(f"max_factors must be >= 1, got {max_factors}")
    if folds < 2:
        raise ValueError(f"folds must be >= 2, got {folds}")
    if n < folds:
        raise DataError(f"cannot form {folds} folds from {n} samples")
    if float(np.var(y)) < _DEFLATION_TOL:
        raise DataError("targets have zero variance; nothing to regress on")

    perm = make_rng(seed).permutation(n)
    sq_err = np.zeros(max_factors)
    for block in np.array_split(perm, folds):
        mask = np.ones(n, dtype=bool)
        mask[block] = False
        X_tr, y_tr = X[mask], y[mask]
        a_cap = min(max_factors, X_tr.shape[0] - 1, p)
        x_center = X_tr.mean(axis=0)
        y_center = float(y_tr.mean())
        W, P, q = _extract_factors(X_tr - x_center, y_tr - y_center, a_cap, strict=False)
        preds = _path_predict(W, P, q, x_center, y_center, X[block], max_factors)
        sq_err += np.sum((preds - y[block][:, None]) ** 2, axis=0)
    cv_rmse = np.sqrt(sq_err / n)
    best = int(np.argmin(cv_rmse)) + 1  # argmin returns the first (smallest a) on ties

    refit = fit_pls1(X, y, best)
    return PlsRegModel(refit.n_factors, refit.x_center, refit.y_center,
                       refit.weights, refit.loadings, refit.y_loadings, cv_rmse)
