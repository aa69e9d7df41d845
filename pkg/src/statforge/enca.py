"""Explicit noise conditional autoencoder.

The encoder compresses a trajectory into q statistics; the decoder gets those
statistics tiled over time together with the exact bare-noise record that
generated the trajectory, and reconstructs the trajectory with a two-layer
bidirectional LSTM plus a per-step linear readout.  Joint loss: mean squared
relative error of the parameter regressors plus mean squared relative
reconstruction error.

Reconstruction denominators are floored at c_x because trajectory values can
sit arbitrarily close to zero in the zero attractor; the default floor is
5% of the prior-predictive standard deviation of |x| from a pilot run.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, asdict

import numpy as np

from . import tensor as T
from .encoder import encode_forward, init_encoder
from .errors import TrainingDivergedError
from .models import (
    BareNoise,
    PriorSpec,
    draw_noise_batch,
    noise_channels,
    prior_for,
    sample_prior,
    simulate_batch,
    stream,
)

DEFAULT_MINIBATCH = {"nlar1": 300, "dynamo": 100}


@dataclass
class EncaConfig:
    q: int = 3
    minibatch: int | None = None   # None -> per-model default
    steps: int = 1000
    lr: float = 1e-3
    seed: int = 0
    n_steps: int = 200
    c_x: float | None = None       # None -> pilot estimate
    log_every: int = 100
    checkpoint_every: int = 10_000

    def resolve_minibatch(self, model_id: str) -> int:
        return self.minibatch if self.minibatch is not None else DEFAULT_MINIBATCH[model_id]


@dataclass
class Reconstruction:
    x_hat: np.ndarray

    def __post_init__(self):
        self.x_hat = np.asarray(self.x_hat, dtype=float)


@dataclass
class TrainResult:
    store: T.ParameterStore
    log: list
    meta: dict
    diverged: bool = False


def _init_bilstm(store: T.ParameterStore, prefix: str, c_in: int, units: int,
                 rng: np.random.Generator):
    for tag in ("f", "b"):
        store.add(f"{prefix}wx_{tag}",
                  T.glorot_uniform(rng, (c_in, 4 * units), c_in, 4 * units))
        store.add(f"{prefix}wh_{tag}",
                  T.glorot_uniform(rng, (units, 4 * units), units, 4 * units))
        bias = np.zeros(4 * units)
        bias[units:2 * units] = 1.0  # forget-gate bias
        store.add(f"{prefix}b_{tag}", bias)


def init_enca(model_id: str, q: int, rng: np.random.Generator) -> T.ParameterStore:
    store = init_encoder(q, rng)
    c = noise_channels(model_id)
    _init_bilstm(store, "decoder.bilstm1.", q + c, 16, rng)
    _init_bilstm(store, "decoder.bilstm2.", 32, 16, rng)
    store.add("decoder.fc.weight", T.glorot_uniform(rng, (32, 1), 32, 1))
    store.add("decoder.fc.bias", np.zeros(1))
    return store


def _param(weights, name: str) -> T.Tensor:
    v = weights[name]
    return v if isinstance(v, T.Tensor) else T.Tensor(v)


def _bilstm_params(weights, prefix: str):
    return tuple(_param(weights, f"{prefix}{k}")
                 for k in ("wx_f", "wh_f", "b_f", "wx_b", "wh_b", "b_b"))


def decode_forward(weights, s, noise: np.ndarray):
    """Differentiable decoder: summaries (B, q) + noise (B, N, c) -> (B, N).

    Decoder step t is paired with the noise row that generated x_t.
    """
    s = T.astensor(s)
    noise = np.asarray(noise, dtype=float)
    n_steps = noise.shape[-2]
    expected = weights["decoder.bilstm1.wx_f"]
    in_dim = (expected.data if isinstance(expected, T.Tensor) else np.asarray(expected)).shape[0]
    if s.shape[-1] + noise.shape[-1] != in_dim:
        raise ValueError(
            f"decoder expects per-step feature dim {in_dim}, got "
            f"q={s.shape[-1]} plus c={noise.shape[-1]}")
    h = T.concat([T.tile_time(s, n_steps), T.Tensor(noise)], axis=-1)
    h = T.bilstm(h, *_bilstm_params(weights, "decoder.bilstm1."))
    h = T.bilstm(h, *_bilstm_params(weights, "decoder.bilstm2."))
    y = T.dense(h, _param(weights, "decoder.fc.weight"),
                _param(weights, "decoder.fc.bias"), "linear")
    return T.reshape(y, y.shape[:-1])


def enca_decode(s, noise: BareNoise, weights) -> Reconstruction:
    """Reconstruct one trajectory from its statistics and bare noise."""
    s = np.asarray(getattr(s, "s", s), dtype=float)
    x_hat = decode_forward(weights, T.Tensor(s[None, :]), noise.channels[None]).data[0]
    return Reconstruction(x_hat=x_hat)


def enca_loss(s, theta, x_hat, x, c_x: float) -> float:
    """Joint loss of one sample: regression term plus reconstruction term."""
    s = np.asarray(getattr(s, "s", s), dtype=float)
    theta = np.asarray(theta, dtype=float)
    x_hat = np.asarray(getattr(x_hat, "x_hat", x_hat), dtype=float)
    x = np.asarray(getattr(x, "x", x), dtype=float)
    p = theta.shape[0]
    reg = float(np.mean(((s[:p] - theta) / theta) ** 2))
    denom = np.maximum(np.abs(x), c_x)
    rec = float(np.mean(((x_hat - x) / denom) ** 2))
    return reg + rec


def estimate_cx(model_id: str, prior: PriorSpec | None = None,
                n_pilot: int = 10_000, n_steps: int = 200, seed: int = 0) -> float:
    """Denominator floor: 0.05 * prior-predictive std of |x| over a pilot run."""
    prior = prior or prior_for(model_id)
    rng = stream(seed, 0xC0)
    thetas = sample_prior(prior, rng, size=n_pilot)
    noise = draw_noise_batch(model_id, n_pilot, n_steps, rng)
    x = simulate_batch(model_id, thetas, noise, x0=prior.x0)
    return 0.05 * float(np.std(np.abs(x)))


def training_losses(store, thetas, noise, x, c_x: float):
    """Forward pass + loss tensors for one minibatch; returns (loss, reg, rec)."""
    batch, n_steps = x.shape
    p = thetas.shape[1]
    s = encode_forward(store.params, T.Tensor(x[..., None]))
    rel = T.mul(T.sub(s[:, :p], thetas), 1.0 / thetas)
    reg = T.mul(T.tsum(T.mul(rel, rel)), 1.0 / (batch * p))
    x_hat = decode_forward(store.params, s, noise)
    denom = np.maximum(np.abs(x), c_x)
    rrel = T.mul(T.sub(x_hat, x), 1.0 / denom)
    rec = T.mul(T.tsum(T.mul(rrel, rrel)), 1.0 / (batch * n_steps))
    return T.add(reg, rec), reg, rec


def train_enca(model_id: str, cfg: EncaConfig, prior: PriorSpec | None = None,
               progress=None) -> TrainResult:
    """On-the-fly training: fresh prior draws and noise every step.

    Single-threaded and bit-reproducible for a fixed seed.  Raises
    TrainingDivergedError (carrying the last checkpoint) if the loss or a
    gradient goes non-finite.
    """
    prior = prior or prior_for(model_id)
    minibatch = cfg.resolve_minibatch(model_id)
    init_rng = stream(cfg.seed, 1)
    data_rng = stream(cfg.seed, 2)
    store = init_enca(model_id, cfg.q, init_rng)
    c_x = cfg.c_x if cfg.c_x is not None else estimate_cx(
        model_id, prior, n_steps=cfg.n_steps, seed=cfg.seed)
    meta = {
        "model_id": model_id,
        "architecture": "enca",
        "config": {**asdict(cfg), "minibatch": minibatch},
        "c_x": c_x,
        "init": "glorot-uniform conv/dense, uniform lstm with forget bias 1.0",
        "conv3_bias": True,
    }
    log: list = []
    checkpoint = store.clone()
    t_start = time.perf_counter()
    for step in range(cfg.steps):
        thetas = sample_prior(prior, data_rng, size=minibatch)
        noise = draw_noise_batch(model_id, minibatch, cfg.n_steps, data_rng)
        x = simulate_batch(model_id, thetas, noise, x0=prior.x0)
        store.zero_grad()
        try:
            loss, reg, rec = training_losses(store, thetas, noise, x, c_x)
            if not np.isfinite(loss.data):
                raise TrainingDivergedError(f"non-finite loss at step {step + 1}")
            T.backward(loss)
            T.adam_step(store, store.gradients(), lr=cfg.lr)
        except TrainingDivergedError as err:
            err.checkpoint = checkpoint
            err.log = log
            raise
        if (step + 1) % cfg.log_every == 0 or step == 0:
            log.append({
                "step": step + 1,
                "loss": float(loss.data),
                "regression": float(reg.data),
                "reconstruction": float(rec.data),
                "wall_time_s": time.perf_counter() - t_start,
            })
        if (step + 1) % cfg.checkpoint_every == 0:
            checkpoint = store.clone()
        if progress is not None:
            progress(step + 1, cfg.steps)
    return TrainResult(store=store, log=log, meta=meta)
