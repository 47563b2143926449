"""Single-hidden-layer perceptron regression trained by damped Gauss-Newton steps.

The network is tanh-hidden / linear-output with standardized inputs and
targets min-max scaled to [-1, 1]. Training solves (J^T J + lambda I) d = J^T r
per epoch on the scaled residuals, adapting the damping multiplicatively, and
runs under a hard epoch cap with best-of-N restart selection.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericalError
from .seeding import make_rng

_LAMBDA_CEILING = 1e10
_MAX_RETRIES = 10
_STD_FLOOR = 1e-12


@dataclass(frozen=True)
class MlpModel:
    """Network weights plus the input/target scalers fitted at training time."""

    w1: np.ndarray          # (n_hidden, n_in)
    b1: np.ndarray          # (n_hidden,)
    w2: np.ndarray          # (n_hidden,)
    b2: float
    input_mean: np.ndarray  # (n_in,)
    input_std: np.ndarray   # (n_in,), floored at 1e-12
    target_lo: float = -1.0
    target_hi: float = 1.0

    def __post_init__(self):
        for field in ("w1", "b1", "w2", "input_mean", "input_std"):
            arr = np.array(getattr(self, field), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, field, arr)
        object.__setattr__(self, "b2", float(self.b2))
        object.__setattr__(self, "target_lo", float(self.target_lo))
        object.__setattr__(self, "target_hi", float(self.target_hi))
        h, d = self.w1.shape
        if self.b1.shape != (h,) or self.w2.shape != (h,):
            raise DataError("hidden-layer shapes are inconsistent")
        if self.input_mean.shape != (d,) or self.input_std.shape != (d,):
            raise DataError("input scaler shapes do not match the input dimension")
        finite = all(np.all(np.isfinite(getattr(self, f)))
                     for f in ("w1", "b1", "w2", "input_mean", "input_std"))
        if not finite or not np.isfinite(self.b2):
            raise DataError("model parameters must be finite")
        if np.any(self.input_std < _STD_FLOOR):
            raise DataError(f"input scaler std entries must be >= {_STD_FLOOR}")
        if not self.target_lo < self.target_hi:
            raise DataError("target scaler range must be non-degenerate")

    @property
    def n_in(self) -> int:
        return int(self.w1.shape[1])

    @property
    def n_hidden(self) -> int:
        return int(self.w1.shape[0])

    @property
    def n_params(self) -> int:
        h, d = self.w1.shape
        return h * d + h + h + 1


@dataclass(frozen=True)
class TrainConfig:
    max_epochs: int = 20
    n_restarts: int = 10
    lm_lambda0: float = 1e-2
    lm_factor: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.max_epochs < 1:
            raise ValueError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.n_restarts < 1:
            raise ValueError(f"n_restarts must be >= 1, got {self.n_restarts}")
        if not self.lm_lambda0 > 0:
            raise ValueError(f"lm_lambda0 must be positive, got {self.lm_lambda0}")
        if not self.lm_factor > 1:
            raise ValueError(f"lm_factor must exceed 1, got {self.lm_factor}")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")


def init_mlp(n_in: int, n_hidden: int, seed: int) -> MlpModel:
    """Fan-in scaled uniform weights, zero biases, identity scalers."""
    if n_in < 1 or n_hidden < 1:
        raise ValueError(f"dimensions must be >= 1, got n_in={n_in}, n_hidden={n_hidden}")
    rng = make_rng(seed)
    w1 = rng.uniform(-1.0, 1.0, size=(n_hidden, n_in)) / np.sqrt(n_in)
    w2 = rng.uniform(-1.0, 1.0, size=n_hidden) / np.sqrt(n_hidden)
    return MlpModel(w1, np.zeros(n_hidden), w2, 0.0,
                    np.zeros(n_in), np.ones(n_in), -1.0, 1.0)


def _scale_inputs(model: MlpModel, X: np.ndarray) -> np.ndarray:
    return (X - model.input_mean) / model.input_std


def _unscale_target(model: MlpModel, ys):
    return model.target_lo + (ys + 1.0) * 0.5 * (model.target_hi - model.target_lo)


def _scale_target(model: MlpModel, y):
    return 2.0 * (y - model.target_lo) / (model.target_hi - model.target_lo) - 1.0


def _forward_scaled(w1, b1, w2, b2, Xs):
    H = np.tanh(Xs @ w1.T + b1)
    return H @ w2 + b2, H


def forward(model: MlpModel, x) -> np.ndarray | float:
    """Predict concentrations for one feature vector or a batch of rows."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    if X.shape[1] != model.n_in:
        raise DataError(f"input dimension {X.shape[1]} does not match model n_in={model.n_in}")
    ys, _ = _forward_scaled(model.w1, model.b1, model.w2, model.b2, _scale_inputs(model, X))
    y = _unscale_target(model, ys)
    return float(y[0]) if single else y


def jacobian(model: MlpModel, X) -> np.ndarray:
    """d(scaled prediction)/d(parameter) per sample.

    Parameter order: w1 row-major, b1, w2, b2. Derivatives are taken in the
    scaled input/target space the trainer works in.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != model.n_in:
        raise DataError(f"input dimension {X.shape[1]} does not match model n_in={model.n_in}")
    Xs = _scale_inputs(model, X)
    _, H = _forward_scaled(model.w1, model.b1, model.w2, model.b2, Xs)
    G = (1.0 - H ** 2) * model.w2          # (n, h): d ys / d preactivation
    n = X.shape[0]
    Jw1 = (G[:, :, None] * Xs[:, None, :]).reshape(n, -1)
    return np.hstack([Jw1, G, H, np.ones((n, 1))])


def _pack(w1, b1, w2, b2) -> np.ndarray:
    return np.concatenate([w1.ravel(), b1, w2, [b2]])


def _unpack(theta: np.ndarray, n_in: int, n_hidden: int):
    h, d = n_hidden, n_in
    w1 = theta[: h * d].reshape(h, d)
    b1 = theta[h * d: h * d + h]
    w2 = theta[h * d + h: h * d + 2 * h]
    return w1, b1, w2, float(theta[-1])


def train_lm(model: MlpModel, F, y, config: TrainConfig) -> tuple[MlpModel, np.ndarray]:
    """Damped Gauss-Newton training under the epoch cap.

    Scalers are fitted from (F, y); each epoch computes the Jacobian once and
    retries the step with increased damping until the scaled SSE strictly
    decreases (at most 10 retries, then the epoch counts as failed). Training
    stops at the epoch cap or once damping exceeds 1e10. Returns the trained
    model and the per-epoch training RMSE trace (index 0 = before training).
    """
    F = np.atleast_2d(np.asarray(F, dtype=float))
    y = np.asarray(y, dtype=float)
    if y.shape != (F.shape[0],):
        raise DataError(f"targets shape {y.shape} incompatible with {F.shape[0]} samples")
    if F.shape[0] < 2:
        raise DataError("training needs at least 2 samples")
    if F.shape[1] != model.n_in:
        raise DataError(f"feature dimension {F.shape[1]} does not match model n_in={model.n_in}")
    if not (np.all(np.isfinite(F)) and np.all(np.isfinite(y))):
        raise DataError("non-finite values in training data")

    input_mean = F.mean(axis=0)
    input_std = np.maximum(F.std(axis=0), _STD_FLOOR)
    lo, hi = float(y.min()), float(y.max())
    if hi - lo < _STD_FLOOR:
        hi = lo + 1.0
    Xs = (F - input_mean) / input_std
    ys = 2.0 * (y - lo) / (hi - lo) - 1.0
    half_span = 0.5 * (hi - lo)

    n_in, n_hidden = model.n_in, model.n_hidden
    theta = _pack(model.w1, model.b1, model.w2, model.b2)
    n_params = theta.size
    eye = np.eye(n_params)

    def residuals(params: np.ndarray) -> np.ndarray:
        w1, b1, w2, b2 = _unpack(params, n_in, n_hidden)
        pred, _ = _forward_scaled(w1, b1, w2, b2, Xs)
        return ys - pred

    r = residuals(theta)
    sse = float(r @ r)
    # scaled residual RMSE maps back to original units through the target span
    trace = [half_span * np.sqrt(sse / y.size)]

    lam = config.lm_lambda0
    for _ in range(config.max_epochs):
        w1, b1, w2, b2 = _unpack(theta, n_in, n_hidden)
        J = jacobian(MlpModel(w1, b1, w2, b2, input_mean, input_std, lo, hi), F)
        JtJ = J.T @ J
        g = J.T @ r
        solve_failed = 0
        for _attempt in range(_MAX_RETRIES + 1):
            try:
                delta = np.linalg.solve(JtJ + lam * eye, g)
            except np.linalg.LinAlgError:
                delta = None
                solve_failed += 1
            if delta is not None and np.all(np.isfinite(delta)):
                candidate = theta + delta
                r_new = residuals(candidate)
                sse_new = float(r_new @ r_new)
                if np.isfinite(sse_new) and sse_new < sse:
                    theta, r, sse = candidate, r_new, sse_new
                    lam /= config.lm_factor
                    break
            lam *= config.lm_factor
            if lam > _LAMBDA_CEILING:
                break
        if solve_failed == _MAX_RETRIES + 1:
            raise NumericalError("normal matrix singular even at maximum damping")
        trace.append(half_span * np.sqrt(sse / y.size))
        if lam > _LAMBDA_CEILING:
            break

    w1, b1, w2, b2 = _unpack(theta, n_in, n_hidden)
    trained = MlpModel(w1, b1, w2, b2, input_mean, input_std, lo, hi)
    return trained, np.array(trace)


def train_restarts(F, y, n_hidden: int, config: TrainConfig) -> MlpModel:
    """Best-of-N training: restart r uses seed config.seed + r; lowest final
    training RMSE wins, ties going to the earliest restart."""
    F = np.atleast_2d(np.asarray(F, dtype=float))
    best_model = None
    best_rmse = np.inf
    last_error: NumericalError | None = None
    for restart in range(config.n_restarts):
        start = init_mlp(F.shape[1], n_hidden, config.seed + restart)
        try:
            candidate, trace = train_lm(start, F, y, config)
        except NumericalError as exc:
            last_error = exc
            continue
        if trace[-1] < best_rmse:
            best_model, best_rmse = candidate, float(trace[-1])
    if best_model is None:
        raise NumericalError(f"all {config.n_restarts} restarts failed: {last_error}")
    return best_model


def replace_seed(config: TrainConfig, seed: int) -> TrainConfig:
    return dataclasses.replace(config, seed=seed)
