"""Minimal feed-forward machinery: shared-trunk two-head MLP, Adam, normalization.

The trunk is two rectifier layers; the noise-prediction head and the auxiliary
head are separate affine output layers on the shared trunk. Everything is
float64 numpy with hand-written backprop, so training is bitwise deterministic
given a seed.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence

import numpy as np

HIDDEN_WIDTH = 256

CHECKPOINT_MAGIC = b"T2DC"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 1000
    batch_size: int = 512
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8


class Normalizer:
    """Per-dimension affine map onto [0, 1].

    Dimensions whose observed range is below 1 are shifted to start at 0 but
    not rescaled.
    """

    def __init__(self, shift: np.ndarray, scale: np.ndarray) -> None:
        self.shift = np.asarray(shift, dtype=np.float64)
        self.scale = np.asarray(scale, dtype=np.float64)

    @classmethod
    def fit(cls, data: np.ndarray) -> "Normalizer":
        data = np.asarray(data, dtype=np.float64)
        lo = data.min(axis=0)
        hi = data.max(axis=0)
        spread = hi - lo
        scale = np.where(spread < 1.0, 1.0, spread)
        return cls(lo, scale)

    @classmethod
    def identity(cls, dim: int) -> "Normalizer":
        return cls(np.zeros(dim), np.ones(dim))

    def normalize(self, v: np.ndarray) -> np.ndarray:
        return (np.asarray(v, dtype=np.float64) - self.shift) / self.scale

    def denormalize(self, v: np.ndarray) -> np.ndarray:
        return np.asarray(v, dtype=np.float64) * self.scale + self.shift

    def to_json(self) -> dict:
        return {"shift": self.shift.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_json(cls, d: dict) -> "Normalizer":
        return cls(np.array(d["shift"]), np.array(d["scale"]))


def sinusoidal_embed(t: float, dim: int) -> np.ndarray:
    """Alternating sin/cos embedding with geometric frequencies from 1 to 1e-4."""
    if dim % 2 != 0:
        raise ValueError("embedding dimension must be even")
    half = dim // 2
    exponents = np.arange(half, dtype=np.float64) / max(half - 1, 1)
    freqs = (1.0 / 10_000.0) ** exponents
    angles = float(t) * freqs
    out = np.empty(dim, dtype=np.float64)
    out[0::2] = np.sin(angles)
    out[1::2] = np.cos(angles)
    return out


def sinusoidal_embed_batch(ts: np.ndarray, dim: int) -> np.ndarray:
    if dim % 2 != 0:
        raise ValueError("embedding dimension must be even")
    half = dim // 2
    exponents = np.arange(half, dtype=np.float64) / max(half - 1, 1)
    freqs = (1.0 / 10_000.0) ** exponents
    angles = np.asarray(ts, dtype=np.float64)[:, None] * freqs[None, :]
    out = np.empty((len(ts), dim), dtype=np.float64)
    out[:, 0::2] = np.sin(angles)
    out[:, 1::2] = np.cos(angles)
    return out


PARAM_KEYS = ("W1", "b1", "W2", "b2", "Wn", "bn", "Wa", "ba")


class Mlp:
    """Two hidden rectifier layers with separate noise and auxiliary heads."""

    def __init__(
        self,
        d_in: int,
        d_noise: int,
        d_aux: int,
        hidden: tuple[int, int] = (HIDDEN_WIDTH, HIDDEN_WIDTH),
        seed: int = 0,
    ) -> None:
        self.d_in = d_in
        self.d_noise = d_noise
        self.d_aux = d_aux
        self.hidden = tuple(hidden)
        rng = np.random.default_rng(seed)
        h1, h2 = self.hidden

        def uniform_fan_in(fan_in: int, shape) -> np.ndarray:
            bound = 1.0 / np.sqrt(fan_in)
            return rng.uniform(-bound, bound, size=shape)

        self.params: dict[str, np.ndarray] = {
            "W1": uniform_fan_in(d_in, (d_in, h1)),
            "b1": np.zeros(h1),
            "W2": uniform_fan_in(h1, (h1, h2)),
            "b2": np.zeros(h2),
            "Wn": uniform_fan_in(h2, (h2, d_noise)) if d_noise else np.zeros((h2, 0)),
            "bn": np.zeros(d_noise),
            "Wa": uniform_fan_in(h2, (h2, d_aux)) if d_aux else np.zeros((h2, 0)),
            "ba": np.zeros(d_aux),
        }

    @property
    def layer_dims(self) -> list[int]:
        return [self.d_in, *self.hidden, self.d_noise + self.d_aux]

    def forward(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Both heads; accepts a single vector or a batch."""
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        _, _, _, a2 = self._trunk(x)
        noise = a2 @ self.params["Wn"] + self.params["bn"]
        aux = a2 @ self.params["Wa"] + self.params["ba"]
        if single:
            return noise[0], aux[0]
        return noise, aux

    def _trunk(self, x: np.ndarray):
        p = self.params
        z1 = x @ p["W1"] + p["b1"]
        a1 = np.maximum(z1, 0.0)
        z2 = a1 @ p["W2"] + p["b2"]
        a2 = np.maximum(z2, 0.0)
        return z1, a1, z2, a2

    def forward_batch_cached(self, x: np.ndarray):
        """Forward pass retaining activations for a subsequent backward call."""
        z1, a1, z2, a2 = self._trunk(x)
        noise = a2 @ self.params["Wn"] + self.params["bn"]
        aux = a2 @ self.params["Wa"] + self.params["ba"]
        return noise, aux, (x, z1, a1, z2, a2)

    def backward(self, cache, g_noise: Optional[np.ndarray], g_aux: Optional[np.ndarray]) -> dict:
        """Gradients of a scalar loss given d(loss)/d(head outputs)."""
        x, z1, a1, z2, a2 = cache
        p = self.params
        n = x.shape[0]
        if g_noise is None:
            g_noise = np.zeros((n, self.d_noise))
        if g_aux is None:
            g_aux = np.zeros((n, self.d_aux))
        grads = {
            "Wn": a2.T @ g_noise,
            "bn": g_noise.sum(axis=0),
            "Wa": a2.T @ g_aux,
            "ba": g_aux.sum(axis=0),
        }
        g_a2 = g_noise @ p["Wn"].T + g_aux @ p["Wa"].T
        g_z2 = g_a2 * (z2 > 0.0)
        grads["W2"] = a1.T @ g_z2
        grads["b2"] = g_z2.sum(axis=0)
        g_a1 = g_z2 @ p["W2"].T
        g_z1 = g_a1 * (z1 > 0.0)
        grads["W1"] = x.T @ g_z1
        grads["b1"] = g_z1.sum(axis=0)
        return grads

    def copy(self) -> "Mlp":
        clone = Mlp.__new__(Mlp)
        clone.d_in, clone.d_noise, clone.d_aux = self.d_in, self.d_noise, self.d_aux
        clone.hidden = self.hidden
        clone.params = {k: v.copy() for k, v in self.params.items()}
        return clone


def forward(net: Mlp, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if np.asarray(x).shape[-1] != net.d_in:
        raise ValueError(f"input dim {np.asarray(x).shape[-1]} != {net.d_in}")
    return net.forward(x)


def aux_forward(net: Mlp, phi: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Auxiliary head evaluated with the t=0 time embedding."""
    embed = sinusoidal_embed(0, len(x))
    _, aux = net.forward(np.concatenate([phi, x, embed]))
    return aux


class Adam:
    def __init__(self, net: Mlp, cfg: TrainConfig) -> None:
        self.cfg = cfg
        self.m = {k: np.zeros_like(v) for k, v in net.params.items()}
        self.v = {k: np.zeros_like(v) for k, v in net.params.items()}
        self.t = 0

    def step(self, net: Mlp, grads: dict) -> None:
        cfg = self.cfg
        self.t += 1
        b1t = 1.0 - cfg.beta1**self.t
        b2t = 1.0 - cfg.beta2**self.t
        for key, g in grads.items():
            self.m[key] = cfg.beta1 * self.m[key] + (1.0 - cfg.beta1) * g
            self.v[key] = cfg.beta2 * self.v[key] + (1.0 - cfg.beta2) * g * g
            m_hat = self.m[key] / b1t
            v_hat = self.v[key] / b2t
            net.params[key] -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.adam_eps)


LossFn = Callable[[Mlp, tuple, np.random.Generator], tuple[float, dict]]


def train(
    net: Mlp,
    data: tuple[np.ndarray, ...],
    loss_fn: LossFn,
    cfg: TrainConfig,
    seed: int,
    epochs: Optional[int] = None,
) -> list[float]:
    """Mini-batch training with Adam; deterministic per seed.

    data is a tuple of aligned arrays. Datasets smaller than the batch size
    train as a single batch per epoch. Returns per-epoch mean losses.
    """
    n = len(data[0])
    if n == 0:
        raise ValueError("empty training data")
    rng = np.random.default_rng(seed)
    opt = Adam(net, cfg)
    n_epochs = cfg.epochs if epochs is None else epochs
    history: list[float] = []
    for _ in range(n_epochs):
        if n <= cfg.batch_size:
            batches = [np.arange(n)]
        else:
            perm = rng.permutation(n)
            batches = [perm[i : i + cfg.batch_size] for i in range(0, n, cfg.batch_size)]
        epoch_loss = 0.0
        for idx in batches:
            batch = tuple(arr[idx] for arr in data)
            loss, grads = loss_fn(net, batch, rng)
            opt.step(net, grads)
            epoch_loss += loss * len(idx)
        history.append(epoch_loss / n)
    return history


def train_balanced(
    net: Mlp,
    new_data: tuple[np.ndarray, ...],
    old_data: tuple[np.ndarray, ...],
    loss_fn: LossFn,
    cfg: TrainConfig,
    seed: int,
    epochs: int,
) -> list[float]:
    """Adaptation on batches drawn half from new data and half from old.

    An epoch covers ceil((|new| + |old|) / batch_size) batches; rows are drawn
    uniformly with replacement from each pool.
    """
    n_new, n_old = len(new_data[0]), len(old_data[0])
    if n_new == 0 or n_old == 0:
        raise ValueError("balanced training needs both pools nonempty")
    rng = np.random.default_rng(seed)
    opt = Adam(net, cfg)
    per_epoch = max(1, int(np.ceil((n_new + n_old) / cfg.batch_size)))
    half = max(1, cfg.batch_size // 2)
    history: list[float] = []
    for _ in range(epochs):
        epoch_loss = 0.0
        for _ in range(per_epoch):
            new_idx = rng.integers(0, n_new, size=half)
            old_idx = rng.integers(0, n_old, size=half)
            batch = tuple(
                np.concatenate([new_arr[new_idx], old_arr[old_idx]])
                for new_arr, old_arr in zip(new_data, old_data)
            )
            loss, grads = loss_fn(net, batch, rng)
            opt.step(net, grads)
            epoch_loss += loss
        history.append(epoch_loss / per_epoch)
    return history


# ---------------------------------------------------------------------------
# Checkpoints


def save_checkpoint(path: str | Path, arrays: dict[str, np.ndarray], meta: dict) -> None:
    """Versioned binary: JSON header then row-major float64 blocks."""
    names = list(arrays)
    header = {
        "version": CHECKPOINT_VERSION,
        "arrays": [[name, list(arrays[name].shape)] for name in names],
        "meta": meta,
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(blob)))
        fh.write(blob)
        for name in names:
            fh.write(np.ascontiguousarray(arrays[name], dtype=np.float64).tobytes())


def load_checkpoint(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"not a checkpoint file: {path}")
        version, header_len = struct.unpack("<II", fh.read(8))
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version {version}")
        header = json.loads(fh.read(header_len).decode("utf-8"))
        arrays: dict[str, np.ndarray] = {}
        for name, shape in header["arrays"]:
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(count * 8)
            arrays[name] = np.frombuffer(buf, dtype=np.float64).reshape(shape).copy()
    return arrays, header["meta"]


def mlp_arrays(net: Mlp) -> dict[str, np.ndarray]:
    return {key: net.params[key] for key in PARAM_KEYS}


def mlp_from_arrays(arrays: dict[str, np.ndarray], meta: dict) -> Mlp:
    dims = meta["mlp"]
    net = Mlp.__new__(Mlp)
    net.d_in = dims["d_in"]
    net.d_noise = dims["d_noise"]
    net.d_aux = dims["d_aux"]
    net.hidden = tuple(dims["hidden"])
    net.params = {key: arrays[key] for key in PARAM_KEYS}
    return net


def mlp_meta(net: Mlp) -> dict:
    return {
        "d_in": net.d_in,
        "d_noise": net.d_noise,
        "d_aux": net.d_aux,
        "hidden": list(net.hidden),
    }
