"""Embedding backends behind one small interface.

A backend exposes ``dim``, ``model_name``, ``encode(tokens) -> rows`` and
optionally ``generate(tokens) -> tokens``. Rows are plain lists of floats
so the server can JSON-serialize them without caring where they came from.
"""

from __future__ import annotations

import hashlib
import struct
from typing import Optional, Sequence


class HashEncoder:
    """Deterministic pseudo-embeddings derived from token digests.

    Always available; no model files, no heavy dependencies. Useful for
    protocol work, CI, and as a stand-in while a real model downloads.
    Vectors are uniform in [-1, 1), identical across processes and runs.
    """

    def __init__(self, dim: int = 64, name: str = "hash-v1"):
        if dim <= 0:
            raise ValueError(f"dim must be positive, got {dim}")
        self.dim = dim
        self.model_name = f"{name}-{dim}d"
        self._cache: dict[str, list[float]] = {}

    def _vector(self, token: str) -> list[float]:
        hit = self._cache.get(token)
        if hit is not None:
            return hit
        raw = b""
        block = 0
        while len(raw) < 4 * self.dim:
            raw += hashlib.sha256(f"{token}\x00{block}".encode("utf-8")).digest()
            block += 1
        ints = struct.unpack(f"<{self.dim}I", raw[: 4 * self.dim])
        row = [v / 2147483648.0 - 1.0 for v in ints]
        self._cache[token] = row
        return row

    def encode(self, tokens: Sequence[str]) -> list[list[float]]:
        return [self._vector(t) for t in tokens]

    def generate(self, tokens: Sequence[str]) -> list[str]:
        # placeholder generator: echoes the input so the protocol path can
        # be exercised without an actual seq2seq behind the bridge
        return list(tokens)


class TransformersEncoder:
    """Pretrained contextual embeddings via a local Hugging Face model.

    Subword pooling happens here: each whitespace token is embedded as the
    mean of its piece vectors, so the caller always gets exactly one row
    per input token. Inference mode, dropout off, deterministic.
    """

    def __init__(self, model: str):
        try:
            import torch
            from transformers import AutoModel, AutoTokenizer
        except ImportError as exc:
            raise RuntimeError(
                "the transformers backend needs the 'transformers' and 'torch' "
                "packages (pip install nl2vega-bridge[transformers])") from exc
        self._torch = torch
        self._tokenizer = AutoTokenizer.from_pretrained(model)
        self._model = AutoModel.from_pretrained(model)
        self._model.eval()
        self.dim = int(self._model.config.hidden_size)
        self.model_name = model

    def encode(self, tokens: Sequence[str]) -> list[list[float]]:
        torch = self._torch
        enc = self._tokenizer(list(tokens), is_split_into_words=True,
                              return_tensors="pt", truncation=True)
        with torch.no_grad():
            hidden = self._model(**enc).last_hidden_state[0]
        rows: list[list[float]] = []
        word_ids = enc.word_ids(0)
        for index in range(len(tokens)):
            pieces = [hidden[i] for i, w in enumerate(word_ids) if w == index]
            if not pieces:  # tokenizer dropped it; fall back to the CLS row
                pieces = [hidden[0]]
            rows.append(torch.stack(pieces).mean(dim=0).tolist())
        return rows

    generate = None  # encoder-only checkpoints cannot generate


def load_backend(name: str, model: Optional[str] = None, dim: int = 64):
    if name == "hash":
        return HashEncoder(dim=dim)
    if name == "transformers":
        if not model:
            raise ValueError("the transformers backend needs --model NAME_OR_PATH")
        return TransformersEncoder(model)
    raise ValueError(f"unknown backend {name!r}; expected 'hash' or 'transformers'")
