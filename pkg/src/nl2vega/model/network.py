"""Sequence-to-sequence network: embeddings, encoder variants, decoder.

Four interchangeable encoders feed one decoder:

* native        — stacked self-attention over token+position+segment embeddings
* external      — bridge-supplied embeddings, linearly projected to d_model
* external_cnn  — the projection followed by parallel linear 1-D convolutions
                  whose channel counts sum to d_model
* combined      — native memory and projected external memory concatenated on
                  the feature axis, then fused back down to d_model

Backward passes are hand-written; gradients accumulate into Param.grad.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..errors import EncoderError
from .config import ModelConfig
from .layers import (
    Conv1d,
    Dropout,
    Embedding,
    FeedForward,
    LayerNorm,
    Linear,
    MultiHeadAttention,
    Param,
    cross_entropy,
)

N_SEGMENTS = 6


@dataclass
class Batch:
    """Padded id arrays for one training step (teacher-forced layout)."""

    src_ids: np.ndarray  # [b, ts] int
    src_seg: np.ndarray  # [b, ts] int
    src_mask: np.ndarray  # [b, ts] bool, True = real token
    label_in: np.ndarray  # [b, tl] int, begins with <sos>
    label_out: np.ndarray  # [b, tl] int, next-token targets
    label_mask: np.ndarray  # [b, tl] bool
    external: Optional[np.ndarray] = None  # [b, ts, external_dim]

    @property
    def size(self) -> int:
        return self.src_ids.shape[0]

    @property
    def target_tokens(self) -> int:
        return int(self.label_mask.sum())


def make_batch(examples: Sequence, pad_id: int, dtype=np.float32,
               external: Optional[Sequence[np.ndarray]] = None) -> Batch:
    """Pad EncodedExamples to a rectangular batch."""
    ts = max(len(e.source_ids) for e in examples)
    tl = max(len(e.label_ids) for e in examples) - 1
    b = len(examples)
    src_ids = np.full((b, ts), pad_id, dtype=np.int64)
    src_seg = np.full((b, ts), 5, dtype=np.int64)  # pad positions carry SPECIAL
    src_mask = np.zeros((b, ts), dtype=bool)
    label_in = np.full((b, tl), pad_id, dtype=np.int64)
    label_out = np.full((b, tl), pad_id, dtype=np.int64)
    label_mask = np.zeros((b, tl), dtype=bool)
    ext = None
    if external is not None:
        dim = external[0].shape[-1]
        ext = np.zeros((b, ts, dim), dtype=dtype)
    for i, e in enumerate(examples):
        n, m = len(e.source_ids), len(e.label_ids) - 1
        src_ids[i, :n] = e.source_ids
        src_seg[i, :n] = e.source_segment_ids
        src_mask[i, :n] = True
        label_in[i, :m] = e.label_ids[:-1]
        label_out[i, :m] = e.label_ids[1:]
        label_mask[i, :m] = True
        if ext is not None:
            vecs = external[i]
            if vecs.shape[0] != n:
                raise EncoderError(f"external embeddings: {vecs.shape[0]} vectors for {n} tokens")
            ext[i, :n] = vecs
    return Batch(src_ids, src_seg, src_mask, label_in, label_out, label_mask, ext)


class _EncoderLayer:
    def __init__(self, rng, cfg: ModelConfig, dtype):
        self.attn = MultiHeadAttention(rng, cfg.d_model, cfg.n_heads, dtype)
        self.ln1 = LayerNorm(cfg.d_model, dtype)
        self.ffn = FeedForward(rng, cfg.d_model, cfg.d_ff, dtype)
        self.ln2 = LayerNorm(cfg.d_model, dtype)
        self.drop1 = Dropout(cfg.dropout)
        self.drop2 = Dropout(cfg.dropout)

    def params(self):
        out = [(f"attn.{n}", p) for n, p in self.attn.params()]
        out += [(f"ln1.{n}", p) for n, p in self.ln1.params()]
        out += [(f"ffn.{n}", p) for n, p in self.ffn.params()]
        out += [(f"ln2.{n}", p) for n, p in self.ln2.params()]
        return out

    def forward(self, x, mask, rng):
        a = self.attn.forward(x, x, x, mask)
        x = self.ln1.forward(x + self.drop1.forward(a, rng))
        f = self.ffn.forward(x)
        return self.ln2.forward(x + self.drop2.forward(f, rng))

    def backward(self, dout):
        d = self.ln2.backward(dout)
        dx = d + self.ffn.backward(self.drop2.backward(d))
        d = self.ln1.backward(dx)
        dq, dk, dv = self.attn.backward(self.drop1.backward(d))
        return d + dq + dk + dv


class _DecoderLayer:
    def __init__(self, rng, cfg: ModelConfig, dtype):
        self.self_attn = MultiHeadAttention(rng, cfg.d_model, cfg.n_heads, dtype)
        self.ln1 = LayerNorm(cfg.d_model, dtype)
        self.cross_attn = MultiHeadAttention(rng, cfg.d_model, cfg.n_heads, dtype)
        self.ln2 = LayerNorm(cfg.d_model, dtype)
        self.ffn = FeedForward(rng, cfg.d_model, cfg.d_ff, dtype)
        self.ln3 = LayerNorm(cfg.d_model, dtype)
        self.drop1 = Dropout(cfg.dropout)
        self.drop2 = Dropout(cfg.dropout)
        self.drop3 = Dropout(cfg.dropout)

    def params(self):
        out = [(f"self_attn.{n}", p) for n, p in self.self_attn.params()]
        out += [(f"ln1.{n}", p) for n, p in self.ln1.params()]
        out += [(f"cross_attn.{n}", p) for n, p in self.cross_attn.params()]
        out += [(f"ln2.{n}", p) for n, p in self.ln2.params()]
        out += [(f"ffn.{n}", p) for n, p in self.ffn.params()]
        out += [(f"ln3.{n}", p) for n, p in self.ln3.params()]
        return out

    def forward(self, y, memory, self_mask, cross_mask, rng):
        a = self.self_attn.forward(y, y, y, self_mask)
        y = self.ln1.forward(y + self.drop1.forward(a, rng))
        c = self.cross_attn.forward(y, memory, memory, cross_mask)
        y = self.ln2.forward(y + self.drop2.forward(c, rng))
        f = self.ffn.forward(y)
        return self.ln3.forward(y + self.drop3.forward(f, rng))

    def backward(self, dout):
        d = self.ln3.backward(dout)
        dy = d + self.ffn.backward(self.drop3.backward(d))
        d = self.ln2.backward(dy)
        dq, dmk, dmv = self.cross_attn.backward(self.drop2.backward(d))
        dmem = dmk + dmv
        d = self.ln1.backward(d + dq)
        dq2, dk2, dv2 = self.self_attn.backward(self.drop1.backward(d))
        return d + dq2 + dk2 + dv2, dmem


class _NativeEncoder:
    def __init__(self, rng, cfg: ModelConfig, vocab_size: int, dtype):
        self.cfg = cfg
        self.tok = Embedding(rng, vocab_size, cfg.d_model, dtype)
        self.pos = Embedding(rng, cfg.max_len, cfg.d_model, dtype)
        self.seg = Embedding(rng, N_SEGMENTS, cfg.d_model, dtype)
        self.drop = Dropout(cfg.dropout)
        self.layers = [_EncoderLayer(rng, cfg, dtype) for _ in range(cfg.n_layers)]

    def params(self):
        out = [("tok.table", self.tok.table), ("pos.table", self.pos.table),
               ("seg.table", self.seg.table)]
        for i, layer in enumerate(self.layers):
            out += [(f"layer{i}.{n}", p) for n, p in layer.params()]
        return out

    def forward(self, src_ids, src_seg, src_mask, rng):
        b, t = src_ids.shape
        if t > self.cfg.max_len:
            raise ValueError(f"source length {t} exceeds max_len {self.cfg.max_len}")
        positions = np.broadcast_to(np.arange(t), (b, t))
        x = self.tok.forward(src_ids) + self.pos.forward(positions) + self.seg.forward(src_seg)
        x = self.drop.forward(x, rng)
        attn_mask = src_mask[:, None, None, :]
        for layer in self.layers:
            x = layer.forward(x, attn_mask, rng)
        return x

    def backward(self, dout):
        for layer in reversed(self.layers):
            dout = layer.backward(dout)
        dout = self.drop.backward(dout)
        self.tok.backward(dout)
        self.pos.backward(dout)
        self.seg.backward(dout)


class Seq2Seq:
    """The full network; construction is deterministic in config.seed."""

    def __init__(self, config: ModelConfig, vocab_size: int, dtype=np.float32):
        self.cfg = config
        self.vocab_size = vocab_size
        self.dtype = dtype
        rng = np.random.default_rng(config.seed)
        cfg = config

        self.native = None
        self.ext_proj = None
        self.convs = []
        self.fuse = None
        if cfg.encoder_variant in ("native", "combined"):
            self.native = _NativeEncoder(rng, cfg, vocab_size, dtype)
        if cfg.encoder_variant in ("external", "external_cnn", "combined"):
            self.ext_proj = Linear(rng, cfg.external_dim, cfg.d_model, dtype)
        if cfg.encoder_variant == "external_cnn":
            self.convs = [Conv1d(rng, w, cfg.d_model, c, dtype) for w, c in cfg.cnn]
        if cfg.encoder_variant == "combined":
            self.fuse = Linear(rng, 2 * cfg.d_model, cfg.d_model, dtype)

        self.tgt_tok = Embedding(rng, vocab_size, cfg.d_model, dtype)
        self.tgt_pos = Embedding(rng, cfg.max_len, cfg.d_model, dtype)
        self.tgt_drop = Dropout(cfg.dropout)
        self.dec_layers = [_DecoderLayer(rng, cfg, dtype) for _ in range(cfg.n_layers)]
        self.out = Linear(rng, cfg.d_model, vocab_size, dtype)

        self._params = dict(self._named_params())

    def _named_params(self):
        out = []
        if self.native is not None:
            out += [(f"enc.{n}", p) for n, p in self.native.params()]
        if self.ext_proj is not None:
            out += [(f"ext_proj.{n}", p) for n, p in self.ext_proj.params()]
        for i, conv in enumerate(self.convs):
            out += [(f"cnn{i}.{n}", p) for n, p in conv.params()]
        if self.fuse is not None:
            out += [(f"fuse.{n}", p) for n, p in self.fuse.params()]
        out += [("dec.tok.table", self.tgt_tok.table), ("dec.pos.table", self.tgt_pos.table)]
        for i, layer in enumerate(self.dec_layers):
            out += [(f"dec.layer{i}.{n}", p) for n, p in layer.params()]
        out += [(f"out.{n}", p) for n, p in self.out.params()]
        return out

    def parameters(self) -> dict[str, Param]:
        return self._params

    def zero_grads(self) -> None:
        for p in self._params.values():
            p.zero_grad()

    def parameter_count(self) -> int:
        return sum(p.value.size for p in self._params.values())

    def _require_external(self, batch: Batch) -> np.ndarray:
        if batch.external is None:
            raise EncoderError(
                f"encoder variant {self.cfg.encoder_variant!r} needs external embeddings")
        return batch.external

    def encode(self, batch: Batch, rng=None) -> np.ndarray:
        variant = self.cfg.encoder_variant
        if variant == "native":
            return self.native.forward(batch.src_ids, batch.src_seg, batch.src_mask, rng)
        if variant == "external":
            return self.ext_proj.forward(self._require_external(batch))
        if variant == "external_cnn":
            h = self.ext_proj.forward(self._require_external(batch))
            return np.concatenate([conv.forward(h) for conv in self.convs], axis=-1)
        nat = self.native.forward(batch.src_ids, batch.src_seg, batch.src_mask, rng)
        proj = self.ext_proj.forward(self._require_external(batch))
        return self.fuse.forward(np.concatenate([nat, proj], axis=-1))

    def _encode_backward(self, dmem: np.ndarray) -> None:
        variant = self.cfg.encoder_variant
        if variant == "native":
            self.native.backward(dmem)
        elif variant == "external":
            self.ext_proj.backward(dmem)
        elif variant == "external_cnn":
            dh = 0.0
            offset = 0
            for conv, (_, c_out) in zip(self.convs, self.cfg.cnn):
                dh = dh + conv.backward(dmem[..., offset : offset + c_out])
                offset += c_out
            self.ext_proj.backward(dh)
        else:
            dcat = self.fuse.backward(dmem)
            d = self.cfg.d_model
            self.native.backward(dcat[..., :d])
            self.ext_proj.backward(dcat[..., d:])

    def decode(self, memory: np.ndarray, batch: Batch, rng=None) -> np.ndarray:
        return self._decode_ids(memory, batch.src_mask, batch.label_in, rng)

    def _decode_ids(self, memory, src_mask, label_in, rng):
        b, t = label_in.shape
        if t > self.cfg.max_len:
            raise ValueError(f"label length {t} exceeds max_len {self.cfg.max_len}")
        positions = np.broadcast_to(np.arange(t), (b, t))
        y = self.tgt_tok.forward(label_in) + self.tgt_pos.forward(positions)
        y = self.tgt_drop.forward(y, rng)
        causal = np.tril(np.ones((t, t), dtype=bool))
        self_mask = causal[None, None, :, :]
        cross_mask = src_mask[:, None, None, :]
        for layer in self.dec_layers:
            y = layer.forward(y, memory, self_mask, cross_mask, rng)
        return self.out.forward(y)

    def _decode_backward(self, dlogits: np.ndarray) -> np.ndarray:
        dy = self.out.backward(dlogits)
        dmem = 0.0
        for layer in reversed(self.dec_layers):
            dy, dm = layer.backward(dy)
            dmem = dmem + dm
        dy = self.tgt_drop.backward(dy)
        self.tgt_tok.backward(dy)
        self.tgt_pos.backward(dy)
        return dmem

    def forward(self, batch: Batch, rng=None) -> np.ndarray:
        memory = self.encode(batch, rng)
        return self.decode(memory, batch, rng)

    def loss(self, batch: Batch) -> float:
        logits = self.forward(batch)
        value, _ = cross_entropy(logits, batch.label_out, batch.label_mask)
        return value

    def loss_and_grads(self, batch: Batch, rng=None) -> float:
        """One forward/backward pass; gradients accumulate into parameters."""
        memory = self.encode(batch, rng)
        logits = self._decode_ids(memory, batch.src_mask, batch.label_in, rng)
        value, dlogits = cross_entropy(logits, batch.label_out, batch.label_mask)
        dmem = self._decode_backward(dlogits)
        self._encode_backward(dmem)
        return value

    def decode_step(self, memory: np.ndarray, src_mask: np.ndarray,
                    prefix_ids: Sequence[int]) -> np.ndarray:
        """Logits over the vocabulary for the token after the prefix.

        memory [ts, d_model] and src_mask [ts] describe one encoded source;
        the prefix must begin with <sos>.
        """
        if len(prefix_ids) == 0:
            raise ValueError("decode_step needs a non-empty prefix")
        label_in = np.asarray(prefix_ids, dtype=np.int64)[None, :]
        logits = self._decode_ids(memory[None, :, :], src_mask[None, :], label_in, None)
        return logits[0, -1]
