"""Denoising diffusion training and ancestral sampling for action parameters.

The forward process mixes data with Gaussian noise by cumulative schedule
constants; the network predicts the injected noise from (noisy params,
conditioning, time embedding). Sampling starts at a standard Gaussian and
walks the reverse chain, then denormalizes and clamps to controller bounds.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .nn import (
    Mlp,
    Normalizer,
    TrainConfig,
    load_checkpoint,
    mlp_arrays,
    mlp_from_arrays,
    mlp_meta,
    save_checkpoint,
    sinusoidal_embed,
    sinusoidal_embed_batch,
    train,
)

DEFAULT_T = 100
DEFAULT_BETA_START = 1e-4
DEFAULT_BETA_END = 0.02


@dataclass(frozen=True)
class NoiseSchedule:
    T: int
    beta: np.ndarray
    alpha_bar: np.ndarray

    @classmethod
    def linear(
        cls, T: int = DEFAULT_T, beta_start: float = DEFAULT_BETA_START, beta_end: float = DEFAULT_BETA_END
    ) -> "NoiseSchedule":
        beta = np.linspace(beta_start, beta_end, T, dtype=np.float64)
        if np.any(beta <= 0.0) or np.any(beta >= 1.0):
            raise ValueError("beta values must lie in (0, 1)")
        alpha_bar = np.cumprod(1.0 - beta)
        return cls(T, beta, alpha_bar)

    def sqrt_ab(self, t: int) -> float:
        return float(np.sqrt(self.alpha_bar[t - 1]))

    def sqrt_one_minus_ab(self, t: int) -> float:
        return float(np.sqrt(1.0 - self.alpha_bar[t - 1]))


def forward_sample(phi0: np.ndarray, t: int, eps: np.ndarray, schedule: NoiseSchedule) -> np.ndarray:
    """Noised parameters at step t given injected noise eps (1 <= t <= T)."""
    if not 1 <= t <= schedule.T:
        raise ValueError(f"t must be in [1, {schedule.T}]")
    return np.asarray(phi0) * schedule.sqrt_ab(t) + np.asarray(eps) * schedule.sqrt_one_minus_ab(t)


def diffusion_loss(
    net: Mlp,
    phi0: np.ndarray,
    x: np.ndarray,
    t: int,
    eps: np.ndarray,
    schedule: NoiseSchedule,
) -> float:
    """Norm of (predicted noise - true noise) for a single example."""
    phi_t = forward_sample(phi0, t, eps, schedule)
    inp = np.concatenate([phi_t, x, sinusoidal_embed(t, len(x))])
    pred, _ = net.forward(inp)
    return float(np.linalg.norm(pred - eps))


def make_joint_loss(schedule: NoiseSchedule, aux_weight: float = 1.0, min_rows: int = 512):
    """Batch loss: mean noise-prediction norm plus auxiliary-head MSE.

    Batches are (phi0, x, z) in normalized units; z may be None-shaped (width
    0) to train the noise head alone. Both passes share one trunk evaluation
    by stacking the noisy-input rows and the t=0 auxiliary rows. Batches
    smaller than min_rows are replicated with independent (t, eps) draws per
    copy, which keeps the gradient estimate low-variance on tiny datasets at
    fixed per-step compute.
    """

    def loss_fn(net: Mlp, batch, rng: np.random.Generator):
        phi0, x, z = batch
        if len(phi0) < min_rows:
            k = int(np.ceil(min_rows / len(phi0)))
            phi0, x, z = (np.repeat(arr, k, axis=0) for arr in (phi0, x, z))
        n, d_phi = phi0.shape
        ts = rng.integers(1, schedule.T + 1, size=n)
        eps = rng.standard_normal((n, d_phi))
        root_ab = np.sqrt(schedule.alpha_bar[ts - 1])[:, None]
        root_1mab = np.sqrt(1.0 - schedule.alpha_bar[ts - 1])[:, None]
        phi_t = phi0 * root_ab + eps * root_1mab
        noise_rows = np.concatenate([phi_t, x, sinusoidal_embed_batch(ts, x.shape[1])], axis=1)
        has_aux = z.shape[1] > 0
        if has_aux:
            aux_rows = np.concatenate(
                [phi0, x, sinusoidal_embed_batch(np.zeros(n), x.shape[1])], axis=1
            )
            stacked = np.concatenate([noise_rows, aux_rows], axis=0)
        else:
            stacked = noise_rows
        noise_out, aux_out, cache = net.forward_batch_cached(stacked)
        diff = noise_out[:n] - eps
        norms = np.linalg.norm(diff, axis=1)
        safe = np.maximum(norms, 1e-12)
        g_noise = np.zeros_like(noise_out)
        g_noise[:n] = diff / (safe[:, None] * n)
        loss = float(norms.mean())
        g_aux = np.zeros_like(aux_out)
        if has_aux:
            diff_a = aux_out[n:] - z
            loss_aux = float(np.mean(diff_a**2))
            g_aux[n:] = aux_weight * 2.0 * diff_a / diff_a.size
            loss += aux_weight * loss_aux
        grads = net.backward(cache, g_noise, g_aux)
        return loss, grads

    return loss_fn


@dataclass
class DiffusionSampler:
    """A trained conditional sampler plus its normalization state."""

    net: Mlp
    schedule: NoiseSchedule
    phi_normalizer: Normalizer
    cond_normalizer: Normalizer
    aux_normalizer: Normalizer
    param_bounds: np.ndarray  # (param_dim, 2)
    literal_reverse_mean: bool = False

    @property
    def param_dim(self) -> int:
        return self.net.d_noise

    @property
    def cond_dim(self) -> int:
        return self.cond_normalizer.shift.size

    def reverse_chain(self, x_norm: np.ndarray, rng: np.random.Generator, count: int = 1) -> np.ndarray:
        """Normalized-space samples from the reverse process, shape (count, d)."""
        sched = self.schedule
        d = self.param_dim
        phi = rng.standard_normal((count, d))
        cond = np.tile(x_norm, (count, 1))
        for t in range(sched.T, 0, -1):
            embed = sinusoidal_embed(t, len(x_norm))
            inp = np.concatenate([phi, cond, np.tile(embed, (count, 1))], axis=1)
            pred, _ = self.net.forward(inp)
            beta_t = sched.beta[t - 1]
            if self.literal_reverse_mean:
                phi = phi - pred
            else:
                alpha_t = 1.0 - beta_t
                phi = (phi - (beta_t / np.sqrt(1.0 - sched.alpha_bar[t - 1])) * pred) / np.sqrt(alpha_t)
            if t > 1:
                phi = phi + np.sqrt(beta_t) * rng.standard_normal((count, d))
        return phi

    def sample(self, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        return self.sample_batch(x, rng, 1)[0]

    def sample_batch(self, x: np.ndarray, rng: np.random.Generator, count: int) -> np.ndarray:
        x_norm = self.cond_normalizer.normalize(x)
        phi_norm = self.reverse_chain(x_norm, rng, count)
        raw = self.phi_normalizer.denormalize(phi_norm)
        return np.clip(raw, self.param_bounds[:, 0], self.param_bounds[:, 1])

    def predict_aux(self, x: np.ndarray, phi: np.ndarray) -> np.ndarray:
        """Auxiliary-head prediction in raw signal units."""
        x_norm = self.cond_normalizer.normalize(x)
        phi_norm = self.phi_normalizer.normalize(phi)
        inp = np.concatenate([phi_norm, x_norm, sinusoidal_embed(0, len(x_norm))])
        _, aux = self.net.forward(inp)
        return self.aux_normalizer.denormalize(aux)

    def save(self, path: str | Path, extra_meta: Optional[dict] = None) -> None:
        arrays = dict(mlp_arrays(self.net))
        arrays["beta"] = self.schedule.beta
        arrays["alpha_bar"] = self.schedule.alpha_bar
        arrays["param_bounds"] = self.param_bounds
        meta = {
            "mlp": mlp_meta(self.net),
            "T": self.schedule.T,
            "phi_normalizer": self.phi_normalizer.to_json(),
            "cond_normalizer": self.cond_normalizer.to_json(),
            "aux_normalizer": self.aux_normalizer.to_json(),
            "literal_reverse_mean": self.literal_reverse_mean,
        }
        if extra_meta:
            meta.update(extra_meta)
        save_checkpoint(path, arrays, meta)

    @classmethod
    def load(cls, path: str | Path) -> tuple["DiffusionSampler", dict]:
        arrays, meta = load_checkpoint(path)
        net = mlp_from_arrays(arrays, meta)
        schedule = NoiseSchedule(meta["T"], arrays["beta"], arrays["alpha_bar"])
        sampler = cls(
            net=net,
            schedule=schedule,
            phi_normalizer=Normalizer.from_json(meta["phi_normalizer"]),
            cond_normalizer=Normalizer.from_json(meta["cond_normalizer"]),
            aux_normalizer=Normalizer.from_json(meta["aux_normalizer"]),
            param_bounds=arrays["param_bounds"],
            literal_reverse_mean=meta["literal_reverse_mean"],
        )
        return sampler, meta


def fit(
    data_x: np.ndarray,
    data_phi: np.ndarray,
    param_bounds: np.ndarray,
    cfg: TrainConfig,
    seed: int,
    data_z: Optional[np.ndarray] = None,
    schedule: Optional[NoiseSchedule] = None,
    epochs: Optional[int] = None,
    literal_reverse_mean: bool = False,
    net: Optional[Mlp] = None,
) -> DiffusionSampler:
    """Train a conditional sampler (and optional auxiliary head) from scratch."""
    data_x = np.asarray(data_x, dtype=np.float64)
    data_phi = np.asarray(data_phi, dtype=np.float64)
    if data_x.ndim != 2 or len(data_x) != len(data_phi) or len(data_x) == 0:
        raise ValueError("conditioning/parameter arrays must be nonempty and aligned")
    schedule = schedule or NoiseSchedule.linear()
    cond_norm = Normalizer.fit(data_x)
    phi_norm = Normalizer.fit(data_phi)
    if data_z is None:
        data_z = np.zeros((len(data_x), 0))
        aux_norm = Normalizer.identity(0)
    else:
        data_z = np.asarray(data_z, dtype=np.float64)
        aux_norm = Normalizer.fit(data_z)
    d_x = data_x.shape[1]
    if net is None:
        net = Mlp(
            d_in=data_phi.shape[1] + 2 * d_x,
            d_noise=data_phi.shape[1],
            d_aux=data_z.shape[1],
            seed=seed,
        )
    batch = (
        phi_norm.normalize(data_phi),
        cond_norm.normalize(data_x),
        aux_norm.normalize(data_z) if data_z.shape[1] else data_z,
    )
    train(net, batch, make_joint_loss(schedule), cfg, seed=seed, epochs=epochs)
    return DiffusionSampler(
        net=net,
        schedule=schedule,
        phi_normalizer=phi_norm,
        cond_normalizer=cond_norm,
        aux_normalizer=aux_norm,
        param_bounds=np.asarray(param_bounds, dtype=np.float64),
        literal_reverse_mean=literal_reverse_mean,
    )
