"""Model-error network: two hidden ReLU layers of 256 units mapping the
37-feature context to a 6-vector correction, trained on mean squared error
with Adam. Plain NumPy forward/backward keeps training bit-reproducible per
seed and the weight file portable.
"""

from __future__ import annotations

import json
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .filter import N_FEATURES

_MAGIC = b"MWNN"
_VERSION = 1

# Default training-time augmentation: the first six features are the filter's
# own prior state, which deviates from the recorded truth at deployment.
STATE_FEATURE_NOISE_STD = 0.05


def default_feature_noise(n_features: int = N_FEATURES) -> np.ndarray:
    noise = np.zeros(n_features)
    noise[:6] = STATE_FEATURE_NOISE_STD
    return noise


class TrainingDivergedError(RuntimeError):
    pass


class NetFormatError(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    hidden: int = 256
    learning_rate: float = 1e-3
    batch_size: int = 256
    max_epochs: int = 200
    seed: int = 0
    loss_target: float | None = None
    lr_decay: float = 0.985  # per-epoch multiplicative; Adam alone stalls short of tight minima
    weight_decay: float = 1e-4  # decoupled (AdamW), weights only


class ModelErrorNet:
    """Feedforward 37 -> hidden -> hidden -> 6 with ReLU activations.

    Inputs are standardized by training-set statistics stored with the
    weights; inference is deterministic.
    """

    def __init__(self, weights, biases, x_mean, x_std):
        self.weights = [np.asarray(w, dtype=float) for w in weights]
        self.biases = [np.asarray(b, dtype=float) for b in biases]
        self.x_mean = np.asarray(x_mean, dtype=float)
        self.x_std = np.asarray(x_std, dtype=float)
        if len(self.weights) != 3 or len(self.biases) != 3:
            raise ValueError("expected exactly three layers")

    @classmethod
    def initialized(cls, rng: np.random.Generator, hidden: int = 256, n_in: int = N_FEATURES):
        dims = [n_in, hidden, hidden, 6]
        weights, biases = [], []
        for fan_in, fan_out in zip(dims[:-1], dims[1:]):
            scale = np.sqrt(2.0 / fan_in)  # He init for ReLU
            weights.append(rng.standard_normal((fan_in, fan_out)) * scale)
            biases.append(np.zeros(fan_out))
        # Residual-correction net: the output layer starts at zero so an
        # untrained net predicts exactly no correction.
        weights[-1][:] = 0.0
        return cls(weights, biases, np.zeros(n_in), np.ones(n_in))

    @classmethod
    def zeroed(cls, hidden: int = 256, n_in: int = N_FEATURES):
        """Net that outputs exactly zero: the pure-model filter baseline."""
        dims = [n_in, hidden, hidden, 6]
        weights = [np.zeros((a, b)) for a, b in zip(dims[:-1], dims[1:])]
        biases = [np.zeros(b) for b in dims[1:]]
        return cls(weights, biases, np.zeros(n_in), np.ones(n_in))

    def _forward(self, x: np.ndarray):
        z = (x - self.x_mean) / self.x_std
        h1 = np.maximum(z @ self.weights[0] + self.biases[0], 0.0)
        h2 = np.maximum(h1 @ self.weights[1] + self.biases[1], 0.0)
        out = h2 @ self.weights[2] + self.biases[2]
        return z, h1, h2, out

    def predict(self, phi: np.ndarray) -> np.ndarray:
        return self._forward(np.asarray(phi, dtype=float).reshape(1, -1))[3][0]

    def predict_batch(self, phi: np.ndarray) -> np.ndarray:
        return self._forward(np.asarray(phi, dtype=float))[3]

    def save(self, path: str | Path, metadata: dict | None = None):
        """Flat binary: magic, version, layer shapes, row-major f64 weights
        and biases, standardization vectors, trailing crc32. A JSON sidecar
        (<path>.json) carries human-readable metadata."""
        path = Path(path)
        buf = bytearray()
        buf += _MAGIC
        buf += struct.pack("<II", _VERSION, len(self.weights))
        for w in self.weights:
            buf += struct.pack("<II", *w.shape)
        for w, b in zip(self.weights, self.biases):
            buf += np.ascontiguousarray(w, dtype="<f8").tobytes()
            buf += np.ascontiguousarray(b, dtype="<f8").tobytes()
        buf += np.ascontiguousarray(self.x_mean, dtype="<f8").tobytes()
        buf += np.ascontiguousarray(self.x_std, dtype="<f8").tobytes()
        buf += struct.pack("<I", zlib.crc32(bytes(buf)))
        path.write_bytes(bytes(buf))
        sidecar = {"format_version": _VERSION, "layers": [list(w.shape) for w in self.weights]}
        sidecar.update(metadata or {})
        Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=2))

    @classmethod
    def load(cls, path: str | Path) -> "ModelErrorNet":
        raw = Path(path).read_bytes()
        if len(raw) < 16 or raw[:4] != _MAGIC:
            raise NetFormatError("not a model-error net file")
        if zlib.crc32(raw[:-4]) != struct.unpack("<I", raw[-4:])[0]:
            raise NetFormatError("checksum mismatch (truncated or corrupt)")
        version, n_layers = struct.unpack_from("<II", raw, 4)
        if version != _VERSION:
            raise NetFormatError(f"unsupported version {version}")
        off = 12
        shapes = []
        for _ in range(n_layers):
            shapes.append(struct.unpack_from("<II", raw, off))
            off += 8
        weights, biases = [], []
        for rows, cols in shapes:
            w = np.frombuffer(raw, dtype="<f8", count=rows * cols, offset=off).reshape(rows, cols)
            off += rows * cols * 8
            b = np.frombuffer(raw, dtype="<f8", count=cols, offset=off)
            off += cols * 8
            weights.append(w.copy())
            biases.append(b.copy())
        n_in = shapes[0][0]
        x_mean = np.frombuffer(raw, dtype="<f8", count=n_in, offset=off).copy()
        off += n_in * 8
        x_std = np.frombuffer(raw, dtype="<f8", count=n_in, offset=off).copy()
        return cls(weights, biases, x_mean, x_std)


def train_model_error_net(
    features: np.ndarray,
    targets: np.ndarray,
    cfg: TrainConfig = TrainConfig(),
    feature_noise: np.ndarray | None = None,
) -> tuple[ModelErrorNet, list[float]]:
    """Minimize (1/N) sum ||eps_pred - eps_true||^2 with mini-batch Adam.

    ``feature_noise`` (per-feature std, broadcastable to the feature width)
    adds fresh Gaussian noise to each batch: at deployment the filter feeds
    its own prior back through phi, so the net must stay flat along
    directions the training states barely excited. The stored
    standardization absorbs the augmentation so inference needs nothing
    extra.

    Deterministic per seed. Returns the trained net and the per-epoch loss
    history; stops early when cfg.loss_target is reached.
    """
    x = np.asarray(features, dtype=float)
    y = np.asarray(targets, dtype=float)
    if x.ndim != 2 or len(x) == 0:
        raise ValueError("features must be a nonempty (N, d) array")
    if y.shape != (len(x), 6):
        raise ValueError("targets must be (N, 6)")
    noise_std = None
    if feature_noise is not None:
        noise_std = np.broadcast_to(np.asarray(feature_noise, dtype=float), (x.shape[1],)).copy()

    rng = np.random.default_rng(cfg.seed)
    net = ModelErrorNet.initialized(rng, cfg.hidden, x.shape[1])
    net.x_mean = x.mean(axis=0)
    raw_std = x.std(axis=0)
    if noise_std is not None:
        raw_std = np.sqrt(raw_std**2 + noise_std**2)
    net.x_std = np.maximum(raw_std, 1e-8)

    params = net.weights + net.biases
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    beta1, beta2, eps_adam = 0.9, 0.999, 1e-8
    step = 0
    history: list[float] = []
    lr = cfg.learning_rate

    for epoch in range(cfg.max_epochs):
        order = rng.permutation(len(x))
        for start in range(0, len(x), cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            xb, yb = x[idx], y[idx]
            if noise_std is not None:
                xb = xb + noise_std * rng.standard_normal(xb.shape)
            z, h1, h2, out = net._forward(xb)
            diff = out - yb
            # d(mean ||diff||^2)/d out
            g_out = 2.0 * diff / len(xb)
            g_w3 = h2.T @ g_out
            g_b3 = g_out.sum(axis=0)
            g_h2 = (g_out @ net.weights[2].T) * (h2 > 0.0)
            g_w2 = h1.T @ g_h2
            g_b2 = g_h2.sum(axis=0)
            g_h1 = (g_h2 @ net.weights[1].T) * (h1 > 0.0)
            g_w1 = z.T @ g_h1
            g_b1 = g_h1.sum(axis=0)
            grads = [g_w1, g_w2, g_w3, g_b1, g_b2, g_b3]
            step += 1
            for j, (p, g, mi, vi) in enumerate(zip(params, grads, m, v)):
                mi *= beta1
                mi += (1.0 - beta1) * g
                vi *= beta2
                vi += (1.0 - beta2) * g * g
                m_hat = mi / (1.0 - beta1**step)
                v_hat = vi / (1.0 - beta2**step)
                p -= lr * m_hat / (np.sqrt(v_hat) + eps_adam)
                if j < 3:  # weights, not biases
                    p -= lr * cfg.weight_decay * p
        lr *= cfg.lr_decay
        pred = net.predict_batch(x)
        loss = float(np.mean(np.sum((pred - y) ** 2, axis=1)))
        if not np.isfinite(loss):
            raise TrainingDivergedError(
                f"non-finite loss at epoch {epoch} (lr={cfg.learning_rate}, batch={cfg.batch_size})"
            )
        history.append(loss)
        if cfg.loss_target is not None and loss <= cfg.loss_target:
            break
    return net, history
