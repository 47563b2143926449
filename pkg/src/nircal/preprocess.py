"""Spectral preprocessing: baseline removal, scatter correction, smoothing, centering.

The fitted pipeline applies, in fixed order: wavenumber-range selection,
polynomial baseline correction, optional multiplicative scatter correction,
optional Savitzky-Golay filtering, and mean centering. Every fit/apply pair
learns its statistics from the training set only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dataset import SampleSet, Spectrum, select_range
from .errors import DataError

_MSC_SLOPE_FLOOR = 1e-8


@dataclass(frozen=True)
class CenteringModel:
    """Per-grid-point mean absorbance learned from a training matrix."""

    mean_spectrum: np.ndarray

    def __post_init__(self):
        m = np.array(self.mean_spectrum, dtype=float)
        m.setflags(write=False)
        object.__setattr__(self, "mean_spectrum", m)


def fit_centering(X) -> CenteringModel:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise DataError("centering requires a 2-D matrix with at least one row")
    return CenteringModel(X.mean(axis=0))


def apply_centering(model: CenteringModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.shape[-1] != model.mean_spectrum.size:
        raise DataError(
            f"grid length {X.shape[-1]} does not match fitted length {model.mean_spectrum.size}"
        )
    return X - model.mean_spectrum


def _scaled_vandermonde(wavenumbers: np.ndarray, order: int) -> np.ndarray:
    # fit in a [-1, 1] coordinate for conditioning; same polynomial subspace
    lo, hi = float(wavenumbers[0]), float(wavenumbers[-1])
    t = (2.0 * wavenumbers - (lo + hi)) / (hi - lo)
    return np.vander(t, N=order + 1, increasing=True)


def baseline_correct_matrix(wavenumbers, X, order: int = 1) -> np.ndarray:
    """Subtract each row's least-squares polynomial of the given degree."""
    if order not in (0, 1, 2):
        raise ValueError(f"baseline order must be 0, 1 or 2, got {order}")
    wavenumbers = np.asarray(wavenumbers, dtype=float)
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if wavenumbers.size < order + 2:
        raise DataError(
            f"baseline of order {order} needs at least {order + 2} grid points, "
            f"got {wavenumbers.size}"
        )
    V = _scaled_vandermonde(wavenumbers, order)
    coeffs, *_ = np.linalg.lstsq(V, X.T, rcond=None)
    return X - (V @ coeffs).T


def baseline_correct(spectrum: Spectrum, order: int = 1) -> Spectrum:
    corrected = baseline_correct_matrix(spectrum.wavenumbers, spectrum.absorbance, order)
    return Spectrum(spectrum.wavenumbers, corrected[0])


def msc(X, reference=None) -> np.ndarray:
    """Multiplicative scatter correction.

    Each row r is replaced by (r - a) / b where (a, b) is the least-squares
    fit r ~ a + b * reference. The reference defaults to the column mean of X;
    |b| is floored at 1e-8 to keep the division stable.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] < 2:
        raise DataError("MSC needs at least 2 grid points")
    if reference is None:
        reference = X.mean(axis=0)
    reference = np.asarray(reference, dtype=float)
    if reference.shape != (X.shape[1],):
        raise DataError(
            f"reference length {reference.shape} does not match grid length {X.shape[1]}"
        )
    ref_centered = reference - reference.mean()
    denom = float(ref_centered @ ref_centered)
    if denom <= 0.0:
        raise DataError("MSC reference spectrum is constant (zero variance)")
    b = (X - X.mean(axis=1, keepdims=True)) @ ref_centered / denom
    a = X.mean(axis=1) - b * reference.mean()
    sign = np.where(b < 0, -1.0, 1.0)
    b = sign * np.maximum(np.abs(b), _MSC_SLOPE_FLOOR)
    return (X - a[:, None]) / b[:, None]


@dataclass(frozen=True)
class SgFilter:
    """Savitzky-Golay convolution weights for one (window, poly, deriv) choice.

    Derivatives are with respect to the sample index (unit spacing), and the
    weights apply as a dot product over the window centered on each point.
    """

    window: int
    poly_order: int
    deriv_order: int
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float)
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)


def build_sg(window: int, poly_order: int, deriv_order: int = 0) -> SgFilter:
    """Solve the local least-squares polynomial fit for the filter weights."""
    if window < 3 or window % 2 == 0:
        raise ValueError(f"window must be odd and >= 3, got {window}")
    if not 0 <= poly_order < window:
        raise ValueError(f"poly_order must satisfy 0 <= poly_order < window, got {poly_order}")
    if not 0 <= deriv_order <= poly_order:
        raise ValueError(
            f"deriv_order must satisfy 0 <= deriv_order <= poly_order, got {deriv_order}"
        )
    half = window // 2
    offsets = np.arange(-half, half + 1, dtype=float)
    V = np.vander(offsets, N=poly_order + 1, increasing=True)
    # row d of pinv(V) yields the degree-d coefficient of the local fit;
    # the d-th derivative at the window center is d! times that coefficient
    coeffs = np.linalg.pinv(V)[deriv_order] * math.factorial(deriv_order)
    return SgFilter(window, poly_order, deriv_order, coeffs)


def _edge_weights(filt: SgFilter, positions: np.ndarray) -> np.ndarray:
    # weights mapping the first/last `window` samples to the fitted polynomial's
    # deriv_order-th derivative evaluated at the given in-window positions
    t = np.arange(filt.window, dtype=float)
    V = np.vander(t, N=filt.poly_order + 1, increasing=True)
    pinv = np.linalg.pinv(V)
    d = filt.deriv_order
    eval_rows = np.zeros((positions.size, filt.poly_order + 1))
    for k in range(d, filt.poly_order + 1):
        factor = math.factorial(k) / math.factorial(k - d)
        eval_rows[:, k] = factor * positions ** (k - d)
    return eval_rows @ pinv


def apply_sg_matrix(filt: SgFilter, X) -> np.ndarray:
    """Filter every row; edge points come from the edge-window polynomial fit."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[1]
    if filt.window > n:
        raise DataError(f"window {filt.window} exceeds grid length {n}")
    half = filt.window // 2
    c = filt.coefficients
    out = np.empty_like(X)
    m = n - filt.window + 1
    interior = np.zeros((X.shape[0], m))
    for j in range(filt.window):
        interior += c[j] * X[:, j:j + m]
    out[:, half:n - half] = interior
    if half:
        head = _edge_weights(filt, np.arange(half, dtype=float))
        tail = _edge_weights(filt, np.arange(filt.window - half, filt.window, dtype=float))
        out[:, :half] = X[:, :filt.window] @ head.T
        out[:, n - half:] = X[:, n - filt.window:] @ tail.T
    return out


def apply_sg(filt: SgFilter, spectrum: Spectrum) -> Spectrum:
    return Spectrum(spectrum.wavenumbers, apply_sg_matrix(filt, spectrum.absorbance)[0])


@dataclass(frozen=True)
class PreprocessConfig:
    range_lo: float = 7600.0
    range_hi: float = 11000.0
    baseline_order: int = 1
    msc_enabled: bool = False
    sg_enabled: bool = False
    sg_window: int = 11
    sg_poly: int = 2
    sg_deriv: int = 0

    def __post_init__(self):
        if not self.range_lo < self.range_hi:
            raise ValueError(f"range.lo ({self.range_lo}) must be below range.hi ({self.range_hi})")
        if self.baseline_order not in (0, 1, 2):
            raise ValueError(f"baseline.order must be 0, 1 or 2, got {self.baseline_order}")


@dataclass(frozen=True)
class PreprocessModel:
    """A fitted preprocessing chain: configuration plus training statistics."""

    config: PreprocessConfig
    wavenumbers: np.ndarray                 # grid after range selection
    msc_reference: np.ndarray | None
    sg: SgFilter | None
    centering: CenteringModel


def fit_preprocess(train: SampleSet, config: PreprocessConfig) -> tuple[PreprocessModel, np.ndarray]:
    """Fit the chain on a training set; returns the model and the processed matrix."""
    selected = select_range(train, config.range_lo, config.range_hi)
    X = baseline_correct_matrix(selected.wavenumbers, selected.absorbance_matrix,
                                config.baseline_order)
    msc_reference = None
    if config.msc_enabled:
        msc_reference = X.mean(axis=0)
        X = msc(X, msc_reference)
    sg = None
    if config.sg_enabled:
        sg = build_sg(config.sg_window, config.sg_poly, config.sg_deriv)
        X = apply_sg_matrix(sg, X)
    centering = fit_centering(X)
    model = PreprocessModel(config, selected.wavenumbers, msc_reference, sg, centering)
    return model, apply_centering(centering, X)


def apply_preprocess(model: PreprocessModel, sset: SampleSet) -> np.ndarray:
    """Apply a fitted chain to new samples sharing the training grid."""
    selected = select_range(sset, model.config.range_lo, model.config.range_hi)
    if not np.array_equal(selected.wavenumbers, model.wavenumbers):
        raise DataError("sample grid does not match the grid the pipeline was fitted on")
    X = baseline_correct_matrix(selected.wavenumbers, selected.absorbance_matrix,
                                model.config.baseline_order)
    if model.msc_reference is not None:
        X = msc(X, model.msc_reference)
    if model.sg is not None:
        X = apply_sg_matrix(model.sg, X)
    return apply_centering(model.centering, X)
