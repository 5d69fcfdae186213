"""Fully connected ReLU regressors trained with momentum SGD, written from scratch.

Inputs and labels are standardized with training statistics that travel
inside the model, so a saved model needs nothing else at inference time.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from ..errors import ConfigurationError, DegenerateInputError, DivergenceError, ModelError, ShapeError

ACTIVATIONS = {"linear": 0, "relu": 1}
_ACT_NAMES = {v: k for k, v in ACTIVATIONS.items()}
MLPM_MAGIC = b"MLPM"
_STD_FLOOR = 1e-6


@dataclass(frozen=True)
class MlpArch:
    hidden: tuple = (512,) * 8
    output: int = 3

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if any(h < 1 for h in self.hidden) or self.output < 1:
            raise ConfigurationError("layer widths must be positive")


@dataclass(frozen=True)
class TrainConfig:
    """Mini-batch SGD with momentum; the step size follows a cosine schedule
    from ``learning_rate`` down to ``learning_rate * final_lr_fraction``."""

    learning_rate: float = 0.01
    epochs: int = 60
    batch_size: int = 32
    seed: int = 0
    momentum: float = 0.9
    final_lr_fraction: float = 0.02
    clip_norm: float = 5.0
    weight_decay: float = 0.0
    input_noise: float = 0.0  # std of Gaussian jitter on standardized inputs
    ema_decay: float = 0.0  # per-step decay of the weight average; 0 keeps raw weights

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigurationError("learning_rate must be positive")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigurationError("epochs and batch_size must be >= 1")
        if not 0 <= self.momentum < 1:
            raise ConfigurationError("momentum must be in [0, 1)")
        if not 0 <= self.ema_decay < 1:
            raise ConfigurationError("ema_decay must be in [0, 1)")

    def lr_at(self, epoch: int) -> float:
        if self.epochs == 1:
            return self.learning_rate
        frac = epoch / (self.epochs - 1)
        lo = self.final_lr_fraction
        return self.learning_rate * (lo + (1 - lo) * 0.5 * (1 + np.cos(np.pi * frac)))


@dataclass(eq=False)
class Layer:
    W: np.ndarray  # (in, out)
    b: np.ndarray  # (out,)
    activation: str

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ModelError(f"unknown activation {self.activation!r}")
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[1],):
            raise ShapeError(f"layer weight {self.W.shape} / bias {self.b.shape} mismatch")


@dataclass(eq=False)
class MlpModel:
    """Layer stack plus input/label standardization vectors."""

    layers: list
    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: np.ndarray
    y_scale: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.layers:
            raise ModelError("model has no layers")
        for a, b in zip(self.layers, self.layers[1:]):
            if a.W.shape[1] != b.W.shape[0]:
                raise ShapeError(f"layer widths do not chain: {a.W.shape} -> {b.W.shape}")
        if self.x_mean.shape != (self.n_inputs,) or self.x_scale.shape != (self.n_inputs,):
            raise ShapeError("input standardization length mismatch")
        if self.y_mean.shape != (self.n_outputs,) or self.y_scale.shape != (self.n_outputs,):
            raise ShapeError("label standardization length mismatch")

    @property
    def n_inputs(self) -> int:
        return self.layers[0].W.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.layers[-1].W.shape[1]

    @property
    def depth(self) -> int:
        """Hidden layer count."""
        return len(self.layers) - 1

    def params(self) -> list[np.ndarray]:
        return [p for layer in self.layers for p in (layer.W, layer.b)]

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        if X.shape[1] != self.n_inputs:
            raise ShapeError(f"expected {self.n_inputs} features, got {X.shape[1]}")
        dt = self.layers[0].W.dtype
        Z = ((X - self.x_mean) / self.x_scale).astype(dt)
        out = forward(self.layers, Z)[-1]
        Y = out.astype(np.float64) * self.y_scale + self.y_mean
        return Y[0] if single else Y


class TrainResult(NamedTuple):
    model: MlpModel
    loss_curve: np.ndarray  # per-epoch mean squared position error, m^2


# -- forward / backward ---------------------------------------------------------

def forward(layers, X: np.ndarray) -> list[np.ndarray]:
    """Activations of every layer, input first."""
    acts = [X]
    a = X
    for layer in layers:
        z = a @ layer.W + layer.b
        a = np.maximum(z, 0) if layer.activation == "relu" else z
        acts.append(a)
    return acts


def backward(layers, acts: list[np.ndarray], d_out: np.ndarray) -> list[np.ndarray]:
    """Parameter gradients ``[dW0, db0, dW1, db1, ...]`` given dLoss/dOutput."""
    grads = [None] * (2 * len(layers))
    delta = d_out
    for i in range(len(layers) - 1, -1, -1):
        layer = layers[i]
        if layer.activation == "relu":
            delta = delta * (acts[i + 1] > 0)
        grads[2 * i] = acts[i].T @ delta
        grads[2 * i + 1] = delta.sum(axis=0)
        if i:
            delta = delta @ layer.W.T
    return grads


def mse_loss(layers, X, Y, weights=None) -> tuple[float, list[np.ndarray]]:
    """Mean over samples of the (optionally per-output weighted) squared error, and its gradients."""
    acts = forward(layers, X)
    err = acts[-1] - Y
    w = np.ones(Y.shape[1], dtype=err.dtype) if weights is None else np.asarray(weights, err.dtype)
    loss = float(np.sum(w * err * err) / len(X))
    d_out = (2.0 / len(X)) * w * err
    return loss, backward(layers, acts, d_out)


def init_layers(n_in: int, arch: MlpArch, rng: np.random.Generator,
                dtype=np.float32) -> list[Layer]:
    """He-normal weights for ReLU layers, zero biases, linear output layer."""
    widths = [n_in, *arch.hidden, arch.output]
    layers = []
    for k, (a, b) in enumerate(zip(widths[:-1], widths[1:])):
        act = "linear" if k == len(widths) - 2 else "relu"
        std = np.sqrt(2.0 / a) if act == "relu" else np.sqrt(1.0 / a)
        layers.append(Layer((rng.standard_normal((a, b)) * std).astype(dtype),
                            np.zeros(b, dtype=dtype), act))
    return layers


# -- training -------------------------------------------------------------------

def _scale(x: np.ndarray, axis=0) -> tuple[np.ndarray, np.ndarray]:
    mean = x.mean(axis=axis)
    sd = x.std(axis=axis)
    # Near-constant dimensions keep unit scale; the floor is relative because
    # channel powers sit many decades below 1.
    top = float(sd.max(initial=0.0))
    return mean, np.where(sd > _STD_FLOOR * top, sd, 1.0) if top > 0 else np.ones_like(sd)


def _dataset_loss(layers, X, Y, w, chunk: int = 1024) -> float:
    total = 0.0
    for s in range(0, len(X), chunk):
        err = forward(layers, X[s:s + chunk])[-1] - Y[s:s + chunk]
        total += float(np.sum(w * err * err, dtype=np.float64))
    return total / len(X)


def data_fingerprint(X: np.ndarray, Y: np.ndarray) -> str:
    h = hashlib.sha256()
    for a in (X, Y):
        a = np.ascontiguousarray(a, dtype=np.float64)
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()


def train_fcnn(features, labels, arch: MlpArch = MlpArch(),
               hyper: TrainConfig = TrainConfig()) -> TrainResult:
    """Fit an MLP regressor from features to positions (meters).

    Standardization statistics come from ``features``/``labels`` only. The
    optimized loss is the squared position error in meters, so the loss
    curve reads directly in m^2. Training is float32 and deterministic given
    ``hyper.seed``.
    """
    X = np.asarray(features, dtype=np.float64)
    Y = np.asarray(labels, dtype=np.float64)
    if X.ndim != 2 or Y.ndim != 2:
        raise ShapeError("features and labels must be 2-D")
    if len(X) != len(Y):
        raise ShapeError(f"{len(X)} feature rows for {len(Y)} labels")
    if len(X) == 0:
        raise DegenerateInputError("no training samples")
    if Y.shape[1] != arch.output:
        raise ShapeError(f"labels have {Y.shape[1]} columns, arch outputs {arch.output}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise DegenerateInputError("non-finite training data")

    # Stored as float32, so train on exactly what inference will apply.
    x_mean, x_scale = (v.astype(np.float32) for v in _scale(X))
    y_mean, y_scale = (v.astype(np.float32) for v in _scale(Y))
    Xs = ((X - x_mean) / x_scale).astype(np.float32)
    Ys = ((Y - y_mean) / y_scale).astype(np.float32)
    w = y_scale ** 2  # brings the standardized error back to m^2

    rng = np.random.default_rng(np.random.SeedSequence(hyper.seed))
    layers = init_layers(X.shape[1], arch, rng)
    params = [p for layer in layers for p in (layer.W, layer.b)]
    velocity = [np.zeros_like(p) for p in params]
    # Exponential average of the weights; the returned model uses it when enabled.
    decay = np.float32(hyper.ema_decay)
    avg_layers = [Layer(l.W.copy(), l.b.copy(), l.activation) for l in layers] if decay else layers
    averaged = [p for layer in avg_layers for p in (layer.W, layer.b)]
    n = len(Xs)
    bs = min(hyper.batch_size, n)
    curve = np.empty(hyper.epochs)
    for epoch in range(hyper.epochs):
        lr = np.float32(hyper.lr_at(epoch))
        order = rng.permutation(n)
        for s in range(0, n, bs):
            idx = order[s:s + bs]
            xb = Xs[idx]
            if hyper.input_noise:
                xb = xb + (hyper.input_noise * rng.standard_normal(xb.shape)).astype(np.float32)
            loss, grads = mse_loss(layers, xb, Ys[idx], w)
            if not np.isfinite(loss):
                raise DivergenceError(f"non-finite loss in epoch {epoch}", epoch=epoch)
            if hyper.weight_decay:
                grads = [g + hyper.weight_decay * p for g, p in zip(grads, params)]
            gnorm = np.sqrt(sum(float(np.sum(g * g)) for g in grads))
            if not np.isfinite(gnorm):
                raise DivergenceError(f"non-finite gradient in epoch {epoch}", epoch=epoch)
            if hyper.clip_norm and gnorm > hyper.clip_norm:
                c = np.float32(hyper.clip_norm / gnorm)
                grads = [g * c for g in grads]
            for p, v, g in zip(params, velocity, grads):
                v *= np.float32(hyper.momentum)
                v += g
                p -= lr * v
            if decay:
                for a, p in zip(averaged, params):
                    a *= decay
                    a += (1 - decay) * p
        # Recorded loss: full pass over the clean training set at epoch end.
        curve[epoch] = _dataset_loss(avg_layers, Xs, Ys, w)
        if not np.isfinite(curve[epoch]):
            raise DivergenceError(f"non-finite loss in epoch {epoch}", epoch=epoch)

    model = MlpModel(avg_layers, x_mean, x_scale, y_mean, y_scale,
                     meta={"arch": {"hidden": list(arch.hidden), "output": arch.output},
                           "hyper": hyper.__dict__.copy(),
                           "data_fingerprint": data_fingerprint(X, Y),
                           "samples": int(n)})
    return TrainResult(model, curve)


def smoothed(curve, window: int = 10) -> np.ndarray:
    """Trailing moving average (valid part only)."""
    curve = np.asarray(curve, dtype=float)
    if len(curve) < window:
        return curve.copy()
    return np.convolve(curve, np.ones(window) / window, mode="valid")


def gradient_check(layers, X, Y, eps: float = 1e-6) -> float:
    """Max relative error between backprop and central differences (float64 layers)."""
    _, grads = mse_loss(layers, X, Y)
    worst = 0.0
    for layer_idx, layer in enumerate(layers):
        for k, p in enumerate((layer.W, layer.b)):
            g = grads[2 * layer_idx + k]
            num = np.zeros_like(p)
            it = np.nditer(p, flags=["multi_index"])
            for _ in it:
                i = it.multi_index
                old = p[i]
                p[i] = old + eps
                lp, _ = mse_loss(layers, X, Y)
                p[i] = old - eps
                lm, _ = mse_loss(layers, X, Y)
                p[i] = old
                num[i] = (lp - lm) / (2 * eps)
            denom = np.maximum(np.abs(g) + np.abs(num), 1e-8)
            worst = max(worst, float(np.max(np.abs(g - num) / denom)))
    return worst


# -- serialization --------------------------------------------------------------

_HEAD = struct.Struct("<4sI")
_DIMS = struct.Struct("<II")


def save_model(model: MlpModel, path) -> Path:
    """Little-endian ``MLPM``: layer count; per layer rows, cols, f32 weights
    (row-major), f32 biases, activation byte; then input mean/scale and label
    mean/scale, each prefixed by its length."""
    path = Path(path)
    parts = [_HEAD.pack(MLPM_MAGIC, len(model.layers))]
    for layer in model.layers:
        rows, cols = layer.W.shape
        parts.append(_DIMS.pack(rows, cols))
        parts.append(np.ascontiguousarray(layer.W, dtype="<f4").tobytes())
        parts.append(np.ascontiguousarray(layer.b, dtype="<f4").tobytes())
        parts.append(bytes([ACTIVATIONS[layer.activation]]))
    for v in (model.x_mean, model.x_scale, model.y_mean, model.y_scale):
        parts.append(struct.pack("<I", len(v)))
        parts.append(np.ascontiguousarray(v, dtype="<f4").tobytes())
    try:
        path.write_bytes(b"".join(parts))
    except OSError as exc:
        raise OSError(f"cannot write model to {path}: {exc}") from exc
    return path


def load_model(path) -> MlpModel:
    raw = Path(path).read_bytes()
    if len(raw) < _HEAD.size:
        raise ModelError(f"{path}: truncated model file")
    magic, n_layers = _HEAD.unpack_from(raw)
    if magic != MLPM_MAGIC:
        raise ModelError(f"{path}: bad magic {magic!r}")
    off = _HEAD.size

    def take(n_bytes):
        nonlocal off
        if off + n_bytes > len(raw):
            raise ModelError(f"{path}: truncated model file")
        chunk = raw[off:off + n_bytes]
        off += n_bytes
        return chunk

    layers = []
    for _ in range(n_layers):
        rows, cols = _DIMS.unpack(take(_DIMS.size))
        W = np.frombuffer(take(4 * rows * cols), dtype="<f4").reshape(rows, cols).astype(np.float32)
        b = np.frombuffer(take(4 * cols), dtype="<f4").astype(np.float32)
        code = take(1)[0]
        if code not in _ACT_NAMES:
            raise ModelError(f"{path}: unknown activation code {code}")
        layers.append(Layer(W, b, _ACT_NAMES[code]))
    vecs = []
    for _ in range(4):
        (n,) = struct.unpack("<I", take(4))
        vecs.append(np.frombuffer(take(4 * n), dtype="<f4").astype(np.float32))
    if off != len(raw):
        raise ModelError(f"{path}: {len(raw) - off} trailing bytes")
    return MlpModel(layers, *vecs)


def write_loss_curve(curve, path) -> Path:
    path = Path(path)
    lines = ["epoch,loss_m2"] + [f"{i},{float(v)!r}" for i, v in enumerate(curve)]
    path.write_text("\n".join(lines) + "\n")
    return path
