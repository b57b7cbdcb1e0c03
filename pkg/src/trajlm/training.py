"""Next-token training loop: batching with PAD, Adam updates, gradient clipping.

Everything is deterministic given the config seed: batch order comes from a
seeded permutation per epoch and parameter updates run in canonical order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, TrajLMError
from .model import Model, backward
from .vocab import PAD_ID, EncodedTrajectory


class TrainingDivergedError(TrajLMError, RuntimeError):
    """Loss became non-finite; training aborted."""


@dataclass
class TrainConfig:
    n_epochs: int = 50
    batch_size: int = 64
    learning_rate: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    clip_norm: float = 1.0
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ConfigError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.n_epochs < 0:
            raise ConfigError(f"n_epochs must be >= 0, got {self.n_epochs}")


class AdamOptimizer:
    """Adaptive moment estimation with bias correction and global-norm clipping."""

    def __init__(self, model: Model, tc: TrainConfig):
        self.tc = tc
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in model.params.items()}
        self.v = {k: np.zeros_like(v) for k, v in model.params.items()}

    def step(self, model: Model, grads: dict[str, np.ndarray]) -> None:
        tc = self.tc
        if tc.clip_norm > 0:
            total = math.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
            if total > tc.clip_norm:
                scale = tc.clip_norm / total
                grads = {k: g * scale for k, g in grads.items()}
        self.t += 1
        bc1 = 1.0 - tc.beta1**self.t
        bc2 = 1.0 - tc.beta2**self.t
        for name, p in model.params.items():
            g = grads[name]
            self.m[name] = tc.beta1 * self.m[name] + (1.0 - tc.beta1) * g
            self.v[name] = tc.beta2 * self.v[name] + (1.0 - tc.beta2) * (g * g)
            mhat = self.m[name] / bc1
            vhat = self.v[name] / bc2
            p -= tc.learning_rate * mhat / (np.sqrt(vhat) + tc.eps)


def pad_batch(batch: list[EncodedTrajectory]) -> np.ndarray:
    """Stack id sequences into an (n, max_len) array, right-padded with PAD."""
    max_len = max(len(t.ids) for t in batch)
    out = np.full((len(batch), max_len), PAD_ID, dtype=np.int64)
    for i, t in enumerate(batch):
        out[i, : len(t.ids)] = t.ids
    return out


def train(
    model: Model,
    corpus: list[EncodedTrajectory],
    tc: TrainConfig,
    log_fn=None,
) -> list[float]:
    """Train in place; returns the per-epoch mean loss log.

    Aborts with TrainingDivergedError if the loss stops being finite. With
    n_epochs=0 the model is returned untouched and the log is empty.
    """
    if not corpus:
        raise ConfigError("training corpus is empty")
    too_long = [t.traj_id for t in corpus if len(t.ids) > model.config.max_seq_len]
    if too_long:
        raise ConfigError(
            f"{len(too_long)} trajectories exceed max_seq_len={model.config.max_seq_len} "
            f"(first: {too_long[0]!r})"
        )
    opt = AdamOptimizer(model, tc)
    order_rng = np.random.default_rng(tc.seed)
    dropout_rng = (
        np.random.default_rng(tc.seed ^ 0x5EED_D809) if model.config.dropout_rate > 0 else None
    )
    epoch_losses: list[float] = []
    for epoch in range(tc.n_epochs):
        order = order_rng.permutation(len(corpus)) if tc.shuffle else np.arange(len(corpus))
        losses = []
        for start in range(0, len(corpus), tc.batch_size):
            batch = [corpus[i] for i in order[start : start + tc.batch_size]]
            ids = pad_batch(batch)
            loss, grads = backward(model, ids, dropout_rng=dropout_rng)
            if not math.isfinite(loss):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}, step {len(losses)}: {loss}"
                )
            opt.step(model, grads)
            losses.append(loss)
        mean_loss = float(np.mean(losses))
        epoch_losses.append(mean_loss)
        if log_fn is not None:
            log_fn(epoch, mean_loss)
    return epoch_losses
