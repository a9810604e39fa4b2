"""LSTM / Cond-LSTM harvest forecaster: windows, training, inference, checkpoints.

The Cond-LSTM routes the DHI column to a binary gate and the remaining 11
features to the LSTM. The gate multiplies the inverse-scaled prediction,
so any hour with DHI at or below the threshold is predicted as exactly 0 Wh.
The plain LSTM sees all 12 features and is never gated.
"""

from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from ..errors import AlignmentError, SchemaError, ShapeError, SizingError, StateError
from ..weather import DHI_INDEX, FEATURES, feature_matrix
from . import lstm
from .adam import AdamState, adam_step
from .scaling import ScalerParams, fit_scaler

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT = "solarbs.forecaster.checkpoint"
CHECKPOINT_VERSION = 1
VARIANTS = ("lstm", "cond")


@dataclass
class TrainConfig:
    max_epochs: int = 200
    patience: int = 10
    batch_size: int = 256
    learning_rate: float = 1e-3
    plateau_factor: float = 0.5
    plateau_patience: int = 5
    min_lr: float = 1e-5
    warmup_epochs: int = 10
    decay: float = 0.97
    steps_per_epoch: int | None = None
    seed: int = 0
    hidden_size: int = 32
    lookback: int = 24
    dtype: str = "float32"

    def __post_init__(self):
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if self.patience >= self.max_epochs and self.max_epochs > 1:
            raise ValueError("patience must be < max_epochs")

    def scheduled_lr(self, epoch):
        """Base learning rate for 0-based ``epoch`` before plateau reductions."""
        extra = max(0, epoch - self.warmup_epochs + 1)
        return self.learning_rate * self.decay ** extra

    @classmethod
    def from_dict(cls, d):
        return cls(**d)


@dataclass
class CondLstmModel:
    weights: lstm.LstmWeights
    variant: str = "cond"
    lookback: int = 24
    gate_feature_index: int = DHI_INDEX
    gate_threshold: float = 0.0
    scaler: ScalerParams | None = None
    target_scaler: ScalerParams | None = None
    config: dict = field(default_factory=dict)
    epoch: int = 0
    best_val_loss: float = float("inf")

    @classmethod
    def build(cls, variant="cond", hidden=32, lookback=24, seed=0, n_features=len(FEATURES),
              dtype="float64"):
        if variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}")
        d = n_features - 1 if variant == "cond" else n_features
        rng = np.random.default_rng(seed)
        return cls(lstm.LstmWeights.init(hidden, d, rng).astype(dtype), variant, lookback)

    @property
    def n_params(self):
        return self.weights.n_params

    @property
    def lstm_columns(self):
        cols = np.arange(self.weights.n_inputs + (self.variant == "cond"))
        if self.variant == "cond":
            cols = cols[cols != self.gate_feature_index]
        return cols

    # --------------------------------------------------------- plumbing

    def gate(self, raw_dhi):
        if self.variant == "lstm":
            return np.ones(np.shape(raw_dhi), dtype=bool)
        return np.asarray(raw_dhi) > self.gate_threshold

    def require_fitted(self):
        if self.scaler is None or self.target_scaler is None:
            raise StateError("model has no fitted scalers; train or load a checkpoint first")

    def scaled_inputs(self, features):
        """Scale a raw ``(N, 12)`` feature matrix and keep the LSTM columns."""
        self.require_fitted()
        return self.scaler.transform(features)[:, self.lstm_columns]

    def target_zero(self):
        """Scaled image of a zero-Wh target (what a closed gate emits)."""
        self.require_fitted()
        return float(self.target_scaler.transform(0.0))


def _windows(Z, ends, lookback):
    """Stack windows ``Z[e-lookback+1 : e+1]`` for each end index ``e``."""
    offs = np.arange(-lookback + 1, 1)
    return Z[ends[:, None] + offs[None, :]]


def forward(model, window):
    """Prediction (Wh, before clamping) for one raw ``(lookback, 12)`` window
    or a batch ``(B, lookback, 12)``; the last row is the prediction hour."""
    w = np.asarray(window, dtype=np.float64)
    single = w.ndim == 2
    if single:
        w = w[None]
    if w.ndim != 3 or w.shape[1] != model.lookback or w.shape[2] != len(FEATURES):
        raise ShapeError(f"window must be ({model.lookback}, {len(FEATURES)}), got {np.shape(window)}")
    B = w.shape[0]
    model.require_fitted()
    Xs = model.scaler.transform(w.reshape(-1, w.shape[2]))[:, model.lstm_columns]
    y_s, _ = lstm.forward(model.weights, Xs.reshape(B, model.lookback, -1))
    raw = model.target_scaler.inverse(y_s)
    out = np.where(model.gate(w[:, -1, model.gate_feature_index]), raw, 0.0)
    return float(out[0]) if single else out


def backward(model, windows, targets):
    """Loss and gradients of the gated MSE (scaled target domain) for raw
    windows ``(B, lookback, 12)`` and raw targets (Wh)."""
    windows = np.asarray(windows, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if windows.ndim != 3 or len(windows) != len(targets):
        raise ShapeError("windows and targets must agree in batch size")
    if len(targets) == 0:
        raise ShapeError("empty batch")
    B = len(targets)
    gate = model.gate(windows[:, -1, model.gate_feature_index])
    Xs = model.scaler.transform(windows.reshape(-1, windows.shape[2]))[:, model.lstm_columns]
    ys = model.target_scaler.transform(targets)
    loss, grads = lstm.mse_loss_and_grads(model.weights, Xs.reshape(B, model.lookback, -1), ys, gate)
    off = ~gate
    loss += float(np.sum((model.target_zero() - ys[off]) ** 2)) / B
    return loss, grads


# ------------------------------------------------------------- training

@dataclass
class _Prepared:
    Z: np.ndarray        # scaled LSTM inputs, (N, D)
    y: np.ndarray        # scaled targets, (N,)
    gate: np.ndarray     # (N,) bool
    ends: np.ndarray     # window end indices used as samples


def _prepare(model, features, targets, first):
    """Samples ending at rows ``first..N-1`` of a contiguous block."""
    Z = model.scaled_inputs(features)
    y = model.target_scaler.transform(targets)
    gate = model.gate(features[:, model.gate_feature_index])
    start = max(first, model.lookback - 1)
    return _Prepared(Z, y, gate, np.arange(start, len(targets)))


def _eval_loss(model, data, batch=4096):
    """Gated MSE over every sample in ``data`` (scaled domain)."""
    if len(data.ends) == 0:
        return float("nan")
    total = 0.0
    z0 = model.target_zero()
    for s in range(0, len(data.ends), batch):
        ends = data.ends[s:s + batch]
        g = data.gate[ends]
        yt = data.y[ends]
        total += float(np.sum((z0 - yt[~g]) ** 2))
        on = ends[g]
        if on.size:
            pred, _ = lstm.forward(model.weights, _windows(data.Z, on, model.lookback))
            r = pred - data.y[on]
            total += float(r @ r)
    return total / len(data.ends)


@dataclass
class TrainingLog:
    epochs: list = field(default_factory=list)
    best_epoch: int = 0
    stopped_early: bool = False

    def append(self, epoch, train_mse, val_mse, lr):
        self.epochs.append({"epoch": epoch, "train_mse": train_mse, "val_mse": val_mse, "lr": lr})

    def to_csv(self):
        lines = ["epoch,train_mse,val_mse,lr"]
        for e in self.epochs:
            lines.append(f"{e['epoch']},{e['train_mse']!r},{e['val_mse']!r},{e['lr']!r}")
        return "\n".join(lines) + "\n"

    def write_csv(self, path):
        Path(path).write_text(self.to_csv(), encoding="utf-8")


def train(split, targets, config=None, variant="cond", checkpoint_path=None):
    """Fit a forecaster on ``split`` with hourly ``targets`` (Wh) covering
    train + validation + test rows (or train + validation only).

    Scalers are fit on training rows only. Validation windows may reach
    back into the training rows for context. Returns ``(model, log)`` with
    the best-validation weights restored; without a validation part the
    training loss is monitored instead.
    """
    config = config or TrainConfig()
    targets = np.asarray(targets, dtype=np.float64)
    n_tr, n_va = len(split.train), len(split.validation)
    if len(targets) not in (n_tr + n_va, n_tr + n_va + len(split.test)):
        raise AlignmentError(
            f"targets have {len(targets)} rows; split has {n_tr} train + {n_va} validation + {len(split.test)} test"
        )
    if n_tr < config.lookback:
        raise SizingError(f"training split shorter than lookback ({n_tr} < {config.lookback})")

    model = CondLstmModel.build(variant, config.hidden_size, config.lookback, config.seed,
                                dtype=config.dtype)
    F_tr = feature_matrix(split.train)
    method = "robust" if variant == "cond" else "minmax"
    model.scaler = fit_scaler(F_tr, method)
    model.target_scaler = fit_scaler(targets[:n_tr], method)
    model.config = asdict(config)

    train_data = _prepare(model, F_tr, targets[:n_tr], 0)
    val_data = None
    if n_va:
        F_all = np.vstack([F_tr, feature_matrix(split.validation)])
        val_data = _prepare(model, F_all, targets[:n_tr + n_va], n_tr)

    # closed-gate samples carry no gradient; leave them out of the minibatches
    fit_ends = train_data.ends[train_data.gate[train_data.ends]]
    rng = np.random.default_rng(config.seed + 1)
    state = AdamState()
    params = model.weights.arrays()
    zero_loss = float(np.sum((model.target_zero() - train_data.y[train_data.ends[~train_data.gate[train_data.ends]]]) ** 2))

    log_ = TrainingLog()
    best = float("inf")
    best_weights = model.weights.copy()
    since_best = 0
    plateau_mult = 1.0
    since_plateau = 0
    plateau_best = float("inf")

    for epoch in range(config.max_epochs):
        lr = max(config.min_lr, config.scheduled_lr(epoch) * plateau_mult)
        order = rng.permutation(fit_ends)
        nb = int(np.ceil(len(order) / config.batch_size))
        if config.steps_per_epoch is not None:
            nb = min(nb, config.steps_per_epoch)
        sse = 0.0
        seen = 0
        for b in range(nb):
            ends = order[b * config.batch_size:(b + 1) * config.batch_size]
            if ends.size == 0:
                break
            X = _windows(train_data.Z, ends, config.lookback)
            loss, grads = lstm.mse_loss_and_grads(model.weights, X, train_data.y[ends])
            adam_step(params, grads, state, lr)
            sse += loss * len(ends)
            seen += len(ends)
        n_all = len(train_data.ends)
        train_mse = (sse / max(1, seen)) * len(fit_ends) / n_all + zero_loss / n_all
        monitor = _eval_loss(model, val_data) if val_data is not None else _eval_loss(model, train_data)
        log_.append(epoch + 1, train_mse, monitor, lr)
        log.debug("epoch %d train %.6g val %.6g lr %.3g", epoch + 1, train_mse, monitor, lr)

        if monitor < best:
            best = monitor
            best_weights = model.weights.copy()
            log_.best_epoch = epoch + 1
            since_best = 0
            if checkpoint_path is not None:
                snap = _clone_with(model, best_weights, epoch + 1, best)
                save_checkpoint(snap, checkpoint_path)
        else:
            since_best += 1

        if monitor < plateau_best:
            plateau_best = monitor
            since_plateau = 0
        else:
            since_plateau += 1
            if since_plateau >= config.plateau_patience:
                plateau_mult *= config.plateau_factor
                since_plateau = 0

        if since_best >= config.patience:
            log_.stopped_early = True
            break

    model.weights = best_weights
    model.epoch = log_.best_epoch
    model.best_val_loss = best
    return model, log_


def _clone_with(model, weights, epoch, best):
    return CondLstmModel(weights, model.variant, model.lookback, model.gate_feature_index,
                         model.gate_threshold, model.scaler, model.target_scaler,
                         dict(model.config), epoch, best)


# ------------------------------------------------------------ inference

def predict_features(model, features, batch=4096):
    """Clamped Wh predictions for every row ``lookback-1 ..`` of a raw feature matrix."""
    F = np.asarray(features, dtype=np.float64)
    if len(F) < model.lookback:
        raise SizingError(f"need at least {model.lookback} rows, got {len(F)}")
    Z = model.scaled_inputs(F)
    ends = np.arange(model.lookback - 1, len(F))
    out = np.zeros(len(ends))
    gate = model.gate(F[ends, model.gate_feature_index])
    for s in range(0, len(ends), batch):
        sl = slice(s, s + batch)
        on = np.flatnonzero(gate[sl]) + s
        if on.size:
            y_s, _ = lstm.forward(model.weights, _windows(Z, ends[on], model.lookback))
            out[on] = model.target_scaler.inverse(y_s)
    return np.maximum(out, 0.0)


def predict_series(model, series):
    """Hourly harvest predictions (Wh) for hours ``lookback-1 .. len-1``."""
    if len(series) < model.lookback:
        raise SizingError(f"series has {len(series)} rows, lookback is {model.lookback}")
    return predict_features(model, feature_matrix(series))


# ----------------------------------------------------------- checkpoints

def checkpoint_dict(model):
    w = model.weights
    return {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "variant": model.variant,
        "hidden_size": w.hidden,
        "n_inputs": w.n_inputs,
        "dtype": str(w.dtype),
        "lookback": model.lookback,
        "gate_feature_index": model.gate_feature_index,
        "gate_threshold": model.gate_threshold,
        "weights": {
            "input_kernel": w.input_kernel.tolist(),
            "recurrent_kernel": w.recurrent_kernel.tolist(),
            "bias": w.bias.tolist(),
            "dense_kernel": w.dense_kernel.tolist(),
            "dense_bias": float(w.dense_bias[0]),
        },
        "scaler": model.scaler.to_dict(),
        "target_scaler": model.target_scaler.to_dict(),
        "config": model.config,
        "epoch": model.epoch,
        "best_val_loss": model.best_val_loss if np.isfinite(model.best_val_loss) else None,
    }


def dumps_checkpoint(model):
    return json.dumps(checkpoint_dict(model), indent=1, sort_keys=True)


def save_checkpoint(model, path):
    Path(path).write_text(dumps_checkpoint(model), encoding="utf-8")


def _req(d, key):
    if key not in d:
        raise SchemaError(key)
    return d[key]


def model_from_dict(d):
    if d.get("format") != CHECKPOINT_FORMAT:
        raise SchemaError("format", "not a forecaster checkpoint")
    if d.get("version") != CHECKPOINT_VERSION:
        raise SchemaError("version", f"unsupported checkpoint version {d.get('version')!r}")
    wd = _req(d, "weights")
    dtype = d.get("dtype", "float64")
    if dtype not in ("float32", "float64"):
        raise SchemaError("dtype")
    arrays = {k: np.asarray(_req(wd, k), dtype=dtype) for k in lstm.PARAM_NAMES}
    arrays["dense_bias"] = arrays["dense_bias"].reshape(1)
    try:
        weights = lstm.LstmWeights(**arrays)
    except ShapeError as exc:
        raise SchemaError("weights", str(exc)) from None
    variant = _req(d, "variant")
    if variant not in VARIANTS:
        raise SchemaError("variant")
    best = d.get("best_val_loss")
    return CondLstmModel(
        weights,
        variant,
        int(_req(d, "lookback")),
        int(_req(d, "gate_feature_index")),
        float(_req(d, "gate_threshold")),
        ScalerParams.from_dict(_req(d, "scaler")),
        ScalerParams.from_dict(_req(d, "target_scaler")),
        dict(d.get("config", {})),
        int(d.get("epoch", 0)),
        float("inf") if best is None else float(best),
    )


def load_checkpoint(path):
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaError("document", f"{path}: invalid JSON ({exc})") from None
    return model_from_dict(d)
