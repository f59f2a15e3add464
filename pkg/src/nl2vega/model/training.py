"""Deterministic training: Adam, seeded shuffling, min-val-loss selection."""

from __future__ import annotations

import math
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

from ..dataset import AugmentedItem, EncodedItem, Vocabulary
from ..errors import TrainingDivergedError
from .checkpoint import Checkpoint
from .config import ModelConfig
from .network import Batch, Seq2Seq, make_batch

# one embedding matrix [n_tokens, external_dim] per source, e.g. a bridge call
ExternalProvider = Callable[[AugmentedItem], np.ndarray]


class Adam:
    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.t = 0
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}

    def meta(self) -> dict:
        return {"name": "adam", "learning_rate": self.lr, "beta1": self.beta1,
                "beta2": self.beta2, "eps": self.eps}

    def step(self, params) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for name, p in params.items():
            g = p.grad
            m = self._m.setdefault(name, np.zeros_like(p.value))
            v = self._v.setdefault(name, np.zeros_like(p.value))
            m += (1.0 - self.beta1) * (g - m)
            v += (1.0 - self.beta2) * (g * g - v)
            p.value -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def _batches(items: Sequence[EncodedItem], order: np.ndarray, batch_size: int,
             pad_id: int, external: Optional[ExternalProvider], dtype) -> list[Batch]:
    out = []
    for start in range(0, len(order), batch_size):
        chunk = [items[i] for i in order[start : start + batch_size]]
        ext = [external(c.item) for c in chunk] if external else None
        out.append(make_batch([c.example for c in chunk], pad_id, dtype=dtype, external=ext))
    return out


def dataset_loss(net: Seq2Seq, items: Sequence[EncodedItem], batch_size: int,
                 pad_id: int, external: Optional[ExternalProvider] = None) -> float:
    """Token-weighted mean loss without dropout or gradient computation."""
    order = np.arange(len(items))
    total, tokens = 0.0, 0
    for batch in _batches(items, order, batch_size, pad_id, external, net.dtype):
        total += net.loss(batch) * batch.target_tokens
        tokens += batch.target_tokens
    return total / tokens


def train(train_items: Sequence[EncodedItem], val_items: Sequence[EncodedItem],
          config: ModelConfig, vocab: Vocabulary,
          external: Optional[ExternalProvider] = None,
          progress: Optional[Callable[[int, float, float], None]] = None) -> Checkpoint:
    """Train from scratch and return the checkpoint of the best-validation epoch.

    Bitwise-reproducible for a fixed config: initialization, shuffling and
    dropout all derive from config.seed.
    """
    if not train_items:
        raise ValueError("training split is empty")
    if not val_items:
        raise ValueError("validation split is empty")

    net = Seq2Seq(config, len(vocab), dtype=np.float32)
    adam = Adam(config.learning_rate)
    shuffle_rng = np.random.default_rng([config.seed, 1])
    dropout_rng = np.random.default_rng([config.seed, 2]) if config.dropout > 0 else None
    pad = vocab.pad_id

    history: list[tuple[float, float]] = []
    best_val = math.inf
    best_epoch = -1
    best_params: dict[str, np.ndarray] = {}

    order = np.arange(len(train_items))
    for epoch in range(config.epochs):
        shuffle_rng.shuffle(order)
        total, tokens = 0.0, 0
        for b, batch in enumerate(_batches(train_items, order, config.batch_size,
                                           pad, external, np.float32)):
            net.zero_grads()
            loss = net.loss_and_grads(batch, dropout_rng)
            if not math.isfinite(loss):
                raise TrainingDivergedError(epoch, b)
            adam.step(net.parameters())
            total += loss * batch.target_tokens
            tokens += batch.target_tokens
        train_loss = total / tokens
        val_loss = dataset_loss(net, val_items, config.batch_size, pad, external)
        if not math.isfinite(val_loss):
            raise TrainingDivergedError(epoch, -1)
        history.append((train_loss, val_loss))
        if val_loss < best_val:
            best_val = val_loss
            best_epoch = epoch
            best_params = {n: p.value.copy() for n, p in net.parameters().items()}
        if progress is not None:
            progress(epoch, train_loss, val_loss)

    return Checkpoint(config, vocab, best_params, history, best_epoch, adam.meta())


def write_history_csv(history: Sequence[tuple[float, float]], path: Union[str, Path]) -> None:
    lines = ["epoch,train_loss,val_loss"]
    lines += [f"{i},{t!r},{v!r}" for i, (t, v) in enumerate(history)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
