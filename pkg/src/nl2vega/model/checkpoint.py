"""Self-describing checkpoint container.

Layout: 8-byte magic, little-endian uint64 header length, UTF-8 JSON header,
then the parameter tensors as contiguous little-endian float32 blobs in the
order given by the header's tensor index. The header carries the config, the
vocabulary token list, the loss history, the selected epoch and the optimizer
hyperparameters; it deliberately contains nothing run-dependent (no paths, no
timestamps) so equal training runs produce byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Union

import numpy as np

from ..dataset import Vocabulary
from ..errors import CheckpointError
from .config import ModelConfig
from .network import Seq2Seq

MAGIC = b"NVZCKPT1"
FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    config: ModelConfig
    vocab: Vocabulary
    params: dict[str, np.ndarray]
    history: list[tuple[float, float]] = field(default_factory=list)  # (train, val) per epoch
    selected_epoch: int = 0
    optimizer: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.history:
            best = min(v for _, v in self.history)
            if self.history[self.selected_epoch][1] != best:
                raise CheckpointError(
                    f"selected epoch {self.selected_epoch} does not carry the minimal val loss")


def save(ckpt: Checkpoint, path: Union[str, Path]) -> None:
    names = sorted(ckpt.params)
    index = []
    offset = 0
    blobs = []
    for name in names:
        arr = np.ascontiguousarray(ckpt.params[name], dtype="<f4")
        blob = arr.tobytes()
        index.append({"name": name, "shape": list(arr.shape), "offset": offset})
        offset += len(blob)
        blobs.append(blob)
    header = {
        "format": FORMAT_VERSION,
        "config": ckpt.config.to_dict(),
        "vocab": ckpt.vocab.tokens,
        "history": [[t, v] for t, v in ckpt.history],
        "selected_epoch": ckpt.selected_epoch,
        "optimizer": ckpt.optimizer,
        "tensors": index,
    }
    payload = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(np.uint64(len(payload)).tobytes())
        fh.write(payload)
        for blob in blobs:
            fh.write(blob)


def load(path: Union[str, Path]) -> Checkpoint:
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise CheckpointError(f"cannot read checkpoint {path}: {exc}") from exc
    if raw[: len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{path} is not a checkpoint file (bad magic)")
    pos = len(MAGIC)
    header_len = int(np.frombuffer(raw[pos : pos + 8], dtype="<u8")[0])
    pos += 8
    try:
        header = json.loads(raw[pos : pos + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"{path}: corrupt header: {exc}") from exc
    pos += header_len
    if header.get("format") != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported format {header.get('format')!r}")

    body = raw[pos:]
    params: dict[str, np.ndarray] = {}
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        end = start + 4 * count
        if end > len(body):
            raise CheckpointError(f"{path}: tensor {entry['name']} overruns the file")
        params[entry["name"]] = np.frombuffer(body[start:end], dtype="<f4").reshape(shape).copy()

    config = ModelConfig.from_dict(header["config"])
    vocab = Vocabulary.from_token_list(header["vocab"])
    return Checkpoint(
        config=config,
        vocab=vocab,
        params=params,
        history=[(t, v) for t, v in header["history"]],
        selected_epoch=header["selected_epoch"],
        optimizer=header.get("optimizer", {}),
    )


def from_network(net: Seq2Seq, vocab: Vocabulary, history=None,
                 selected_epoch: int = 0, optimizer: dict | None = None) -> Checkpoint:
    params = {name: p.value.astype("<f4") for name, p in net.parameters().items()}
    return Checkpoint(net.cfg, vocab, params, list(history or []), selected_epoch,
                      dict(optimizer or {}))


def build_network(ckpt: Checkpoint, dtype=np.float32) -> Seq2Seq:
    """Reconstruct the network and load the stored tensors into it."""
    net = Seq2Seq(ckpt.config, len(ckpt.vocab), dtype=dtype)
    own = net.parameters()
    if set(own) != set(ckpt.params):
        missing = set(own) ^ set(ckpt.params)
        raise CheckpointError(f"parameter names do not match the architecture: {sorted(missing)}")
    for name, param in own.items():
        stored = ckpt.params[name]
        if stored.shape != param.value.shape:
            raise CheckpointError(
                f"tensor {name}: stored shape {stored.shape} != expected {param.value.shape}")
        param.value[...] = stored.astype(dtype)
    return net
