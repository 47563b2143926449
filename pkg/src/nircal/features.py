"""Linear feature extraction: PCA and an X-only partial-least-squares projection.

Both projections map preprocessed spectra to k score coefficients; the
feature spec optionally appends the standardized sample temperature as one
extra input.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericalError

_POWER_TOL = 1e-10
_POWER_MAX_ITER = 500


def _fix_sign(vector: np.ndarray) -> np.ndarray:
    """Canonical sign: the largest-magnitude entry is positive (first on ties)."""
    pivot = int(np.argmax(np.abs(vector)))
    return -vector if vector[pivot] < 0 else vector


@dataclass(frozen=True)
class Projection:
    """A fitted linear feature extractor: center vector plus loading matrix."""

    kind: str                       # "pca" | "pls_x"
    center: np.ndarray              # (n_points,)
    loadings: np.ndarray            # (n_points, k)
    k: int
    explained: np.ndarray | None    # per-component variance fractions (PCA only)

    def __post_init__(self):
        for field in ("center", "loadings", "explained"):
            value = getattr(self, field)
            if value is not None:
                arr = np.array(value, dtype=float)
                arr.setflags(write=False)
                object.__setattr__(self, field, arr)


def _check_fit_args(X, k: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DataError("expected a 2-D sample matrix")
    n, p = X.shape
    if n < 2:
        raise DataError("projection fitting needs at least 2 samples")
    k_max = min(n - 1, p)
    if not 1 <= k <= k_max:
        raise ValueError(f"k must satisfy 1 <= k <= {k_max} for a {n}x{p} matrix, got {k}")
    return X


def fit_pca(X, k: int) -> Projection:
    """Principal components of the centered matrix, strongest first.

    Loadings are the top-k right singular vectors with the largest-magnitude
    entry of each made positive; explained fractions are the captured share
    of total variance per component.
    """
    X = _check_fit_args(X, k)
    center = X.mean(axis=0)
    Xc = X - center
    _, s, vt = np.linalg.svd(Xc, full_matrices=False)
    total = float(np.sum(s ** 2))
    if total <= 0.0:
        raise NumericalError(f"requested {k} components but the matrix has effective rank 0")
    rank = int(np.sum(s > s[0] * max(X.shape) * np.finfo(float).eps))
    if rank < k:
        raise NumericalError(f"requested {k} components but effective rank is {rank}")
    loadings = np.column_stack([_fix_sign(vt[j]) for j in range(k)])
    explained = s[:k] ** 2 / total
    return Projection("pca", center, loadings, k, explained)


def _dominant_direction(X: np.ndarray) -> np.ndarray:
    """Power iteration for the leading right singular direction of X."""
    sumsq = np.einsum("ij,ij->j", X, X)
    start = int(np.argmax(sumsq))
    if sumsq[start] <= 0.0:
        raise NumericalError("matrix is zero; no direction to extract")
    w = X.T @ X[:, start]
    norm = np.linalg.norm(w)
    if norm <= 0.0:
        raise NumericalError("matrix is zero; no direction to extract")
    w /= norm
    for _ in range(_POWER_MAX_ITER):
        w_next = X.T @ (X @ w)
        w_next /= np.linalg.norm(w_next)
        if np.linalg.norm(w_next - w) < _POWER_TOL:
            return w_next
        w = w_next
    raise NumericalError(
        f"power iteration did not converge in {_POWER_MAX_ITER} iterations "
        "(near-degenerate leading directions)"
    )


def fit_pls_x(X, k: int) -> Projection:
    """Iterative projection of the spectra onto factors of the spectra themselves.

    Each component takes the dominant direction of the deflated matrix (power
    iteration, first-converged direction on degeneracies), scores the data
    against it, and deflates. With the data serving as its own response block
    the scores coincide with PCA scores up to the shared sign convention.
    """
    X = _check_fit_args(X, k)
    center = X.mean(axis=0)
    Xd = X - center
    loadings = []
    for _ in range(k):
        w = _dominant_direction(Xd)
        t = Xd @ w
        tt = float(t @ t)
        if tt < 1e-12:
            raise NumericalError(f"deflation degenerated after {len(loadings)} components")
        p_vec = Xd.T @ t / tt
        pivot = int(np.argmax(np.abs(p_vec)))
        if p_vec[pivot] < 0:
            p_vec, w, t = -p_vec, -w, -t
        Xd = Xd - np.outer(t, p_vec)
        loadings.append(p_vec)
    return Projection("pls_x", center, np.column_stack(loadings), k, None)


_FITTERS = {"pca": fit_pca, "pls_x": fit_pls_x}


@dataclass(frozen=True)
class FeatureSpec:
    """Projection plus the optional standardized-temperature input."""

    projection: Projection
    include_temperature: bool = True
    temp_mean: float = 0.0
    temp_std: float = 1.0

    @property
    def n_features(self) -> int:
        return self.projection.k + (1 if self.include_temperature else 0)


def fit_feature_spec(X, temps, kind: str = "pls_x", k: int = 5,
                     include_temperature: bool = True) -> FeatureSpec:
    if kind not in _FITTERS:
        raise ValueError(f"unknown projection kind {kind!r}; expected one of {sorted(_FITTERS)}")
    projection = _FITTERS[kind](X, k)
    if not include_temperature:
        return FeatureSpec(projection, False)
    temps = np.asarray(temps, dtype=float)
    if temps.shape != (np.asarray(X).shape[0],):
        raise DataError(f"temperatures shape {temps.shape} incompatible with the sample matrix")
    return FeatureSpec(projection, True, float(temps.mean()),
                       max(float(temps.std()), 1e-12))


def project(spec: FeatureSpec, X, temps=None) -> np.ndarray:
    """Feature matrix (X - center) @ loadings, temperature column appended last."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != spec.projection.center.size:
        raise DataError(
            f"grid length {X.shape[1]} does not match projection length "
            f"{spec.projection.center.size}"
        )
    scores = (X - spec.projection.center) @ spec.projection.loadings
    if not spec.include_temperature:
        return scores
    if temps is None:
        raise DataError("this feature spec includes temperature; none was given")
    temps = np.atleast_1d(np.asarray(temps, dtype=float))
    if temps.shape != (X.shape[0],):
        raise DataError(f"temperatures shape {temps.shape} incompatible with {X.shape[0]} rows")
    scaled = (temps - spec.temp_mean) / spec.temp_std
    return np.column_stack([scores, scaled])
