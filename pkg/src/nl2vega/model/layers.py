"""Dense network primitives with explicit forward and backward passes.

Everything operates on batched arrays [batch, seq, features]. Each layer
caches what its backward pass needs; backward returns the input gradient
and accumulates parameter gradients in place. Attention masks are boolean
with True = may attend; rows whose mask is all False produce zero output
rather than a uniform average.
"""

from __future__ import annotations

import numpy as np

NEG_INF = -1e9


class Param:
    """One trainable tensor plus its accumulated gradient."""

    __slots__ = ("value", "grad")

    def __init__(self, value: np.ndarray):
        self.value = value
        self.grad = np.zeros_like(value)

    @property
    def dtype(self):
        return self.value.dtype

    def zero_grad(self) -> None:
        self.grad[...] = 0


def glorot(rng: np.random.Generator, shape: tuple[int, ...], dtype) -> np.ndarray:
    fan_in, fan_out = shape[0] if len(shape) > 1 else 1, shape[-1]
    if len(shape) == 3:  # convolution kernel [width, in, out]
        fan_in = shape[0] * shape[1]
    bound = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-bound, bound, size=shape).astype(dtype)


def softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_backward(p: np.ndarray, dp: np.ndarray) -> np.ndarray:
    return p * (dp - (dp * p).sum(axis=-1, keepdims=True))


class Linear:
    def __init__(self, rng, d_in: int, d_out: int, dtype):
        self.w = Param(glorot(rng, (d_in, d_out), dtype))
        self.b = Param(np.zeros(d_out, dtype=dtype))
        self._x = None

    def params(self):
        return [("w", self.w), ("b", self.b)]

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._x = x
        return x @ self.w.value + self.b.value

    def backward(self, dout: np.ndarray) -> np.ndarray:
        x2 = self._x.reshape(-1, self._x.shape[-1])
        d2 = dout.reshape(-1, dout.shape[-1])
        self.w.grad += x2.T @ d2
        self.b.grad += d2.sum(axis=0)
        return dout @ self.w.value.T


class LayerNorm:
    def __init__(self, d: int, dtype, eps: float = 1e-5):
        self.gamma = Param(np.ones(d, dtype=dtype))
        self.beta = Param(np.zeros(d, dtype=dtype))
        self.eps = eps
        self._xhat = None
        self._inv = None

    def params(self):
        return [("gamma", self.gamma), ("beta", self.beta)]

    def forward(self, x: np.ndarray) -> np.ndarray:
        mu = x.mean(axis=-1, keepdims=True)
        var = x.var(axis=-1, keepdims=True)
        self._inv = 1.0 / np.sqrt(var + self.eps)
        self._xhat = (x - mu) * self._inv
        return self.gamma.value * self._xhat + self.beta.value

    def backward(self, dout: np.ndarray) -> np.ndarray:
        xhat, inv = self._xhat, self._inv
        self.gamma.grad += (dout * xhat).reshape(-1, xhat.shape[-1]).sum(axis=0)
        self.beta.grad += dout.reshape(-1, dout.shape[-1]).sum(axis=0)
        dxhat = dout * self.gamma.value
        mean_dxhat = dxhat.mean(axis=-1, keepdims=True)
        mean_dxhat_xhat = (dxhat * xhat).mean(axis=-1, keepdims=True)
        return inv * (dxhat - mean_dxhat - xhat * mean_dxhat_xhat)


class Embedding:
    def __init__(self, rng, n: int, d: int, dtype):
        self.table = Param(rng.normal(0.0, 0.02, size=(n, d)).astype(dtype))
        self._ids = None

    def params(self):
        return [("table", self.table)]

    def forward(self, ids: np.ndarray) -> np.ndarray:
        self._ids = ids
        return self.table.value[ids]

    def backward(self, dout: np.ndarray) -> None:
        np.add.at(self.table.grad, self._ids, dout)


class Dropout:
    def __init__(self, p: float):
        self.p = p
        self._mask = None

    def forward(self, x: np.ndarray, rng: np.random.Generator | None) -> np.ndarray:
        if rng is None or self.p == 0.0:
            self._mask = None
            return x
        keep = 1.0 - self.p
        self._mask = (rng.random(x.shape) < keep).astype(x.dtype) / keep
        return x * self._mask

    def backward(self, dout: np.ndarray) -> np.ndarray:
        if self._mask is None:
            return dout
        return dout * self._mask


class MultiHeadAttention:
    """softmax(QK^T / sqrt(d_head)) V per head, concatenated, output-projected."""

    def __init__(self, rng, d_model: int, n_heads: int, dtype):
        if d_model % n_heads != 0:
            raise ValueError(f"d_model {d_model} not divisible by n_heads {n_heads}")
        self.h = n_heads
        self.dh = d_model // n_heads
        self.wq = Linear(rng, d_model, d_model, dtype)
        self.wk = Linear(rng, d_model, d_model, dtype)
        self.wv = Linear(rng, d_model, d_model, dtype)
        self.wo = Linear(rng, d_model, d_model, dtype)
        self._cache = None

    def params(self):
        out = []
        for name, lin in (("wq", self.wq), ("wk", self.wk), ("wv", self.wv), ("wo", self.wo)):
            out.extend((f"{name}.{p}", param) for p, param in lin.params())
        return out

    def _split(self, x: np.ndarray) -> np.ndarray:
        b, t, _ = x.shape
        return x.reshape(b, t, self.h, self.dh).transpose(0, 2, 1, 3)

    def _merge(self, x: np.ndarray) -> np.ndarray:
        b, h, t, dh = x.shape
        return x.transpose(0, 2, 1, 3).reshape(b, t, h * dh)

    def forward(self, q_in: np.ndarray, k_in: np.ndarray, v_in: np.ndarray,
                mask: np.ndarray) -> np.ndarray:
        """mask: boolean, broadcastable to [batch, 1, t_q, t_k], True = attend."""
        q = self._split(self.wq.forward(q_in))
        k = self._split(self.wk.forward(k_in))
        v = self._split(self.wv.forward(v_in))
        scale = 1.0 / np.sqrt(self.dh)
        scores = (q @ k.swapaxes(-1, -2)) * scale
        scores = np.where(mask, scores, NEG_INF)
        p = softmax(scores)
        live = mask.any(axis=-1, keepdims=True)  # all-forbid rows output zero
        p = np.where(live, p, 0.0)
        ctx = p @ v
        out = self.wo.forward(self._merge(ctx))
        self._cache = (p, q, k, v, mask, live, scale)
        return out

    def backward(self, dout: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        p, q, k, v, mask, live, scale = self._cache
        dctx = self._split(self.wo.backward(dout))
        dp = dctx @ v.swapaxes(-1, -2)
        dv = p.swapaxes(-1, -2) @ dctx
        dp = np.where(live, dp, 0.0)
        dscores = softmax_backward(p, dp)
        dscores = np.where(mask, dscores, 0.0)
        dq = (dscores @ k) * scale
        dk = (dscores.swapaxes(-1, -2) @ q) * scale
        dq_in = self.wq.backward(self._merge(dq))
        dk_in = self.wk.backward(self._merge(dk))
        dv_in = self.wv.backward(self._merge(dv))
        return dq_in, dk_in, dv_in


class FeedForward:
    def __init__(self, rng, d_model: int, d_ff: int, dtype):
        self.lin1 = Linear(rng, d_model, d_ff, dtype)
        self.lin2 = Linear(rng, d_ff, d_model, dtype)
        self._pre = None

    def params(self):
        out = [(f"lin1.{n}", p) for n, p in self.lin1.params()]
        out += [(f"lin2.{n}", p) for n, p in self.lin2.params()]
        return out

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._pre = self.lin1.forward(x)
        return self.lin2.forward(np.maximum(self._pre, 0.0))

    def backward(self, dout: np.ndarray) -> np.ndarray:
        dh = self.lin2.backward(dout)
        dh = dh * (self._pre > 0)
        return self.lin1.backward(dh)


class Conv1d:
    """Linear 1-D convolution over the token axis with same-length padding."""

    def __init__(self, rng, width: int, c_in: int, c_out: int, dtype):
        self.width = width
        self.w = Param(glorot(rng, (width, c_in, c_out), dtype))
        self.b = Param(np.zeros(c_out, dtype=dtype))
        self._x_pad = None
        self._t = None

    def params(self):
        return [("w", self.w), ("b", self.b)]

    def forward(self, x: np.ndarray) -> np.ndarray:
        b, t, c_in = x.shape
        left = (self.width - 1) // 2
        right = self.width - 1 - left
        x_pad = np.pad(x, ((0, 0), (left, right), (0, 0)))
        self._x_pad, self._t = x_pad, t
        out = np.broadcast_to(self.b.value, (b, t, self.b.value.shape[0])).copy()
        for i in range(self.width):
            out += x_pad[:, i : i + t, :] @ self.w.value[i]
        return out

    def backward(self, dout: np.ndarray) -> np.ndarray:
        x_pad, t = self._x_pad, self._t
        dx_pad = np.zeros_like(x_pad)
        d2 = dout.reshape(-1, dout.shape[-1])
        for i in range(self.width):
            window = x_pad[:, i : i + t, :]
            self.w.grad[i] += window.reshape(-1, window.shape[-1]).T @ d2
            dx_pad[:, i : i + t, :] += dout @ self.w.value[i].T
        self.b.grad += d2.sum(axis=0)
        left = (self.width - 1) // 2
        return dx_pad[:, left : left + t, :]


def cross_entropy(logits: np.ndarray, targets: np.ndarray,
                  target_mask: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean token cross-entropy over unmasked positions, with dlogits.

    logits [b, t, v]; targets [b, t] int ids; target_mask [b, t] bool.
    """
    if logits.shape[:2] != targets.shape:
        raise ValueError(f"logits {logits.shape} do not align with targets {targets.shape}")
    n = int(target_mask.sum())
    if n == 0:
        raise ValueError("no unmasked target positions")
    p = softmax(logits)
    b_idx, t_idx = np.nonzero(target_mask)
    picked = p[b_idx, t_idx, targets[b_idx, t_idx]]
    loss = float(-np.log(np.maximum(picked, 1e-12)).sum() / n)
    dlogits = p / n
    dlogits[b_idx, t_idx, targets[b_idx, t_idx]] -= 1.0 / n
    dlogits[~target_mask] = 0.0
    return loss, dlogits
