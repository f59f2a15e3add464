"""Central finite-difference verification of the hand-written backward passes.

Run the network in float64 with dropout disabled; compare every analytic
gradient entry against (loss(w+eps) - loss(w-eps)) / 2eps with the scale-aware
relative error |a - f| / max(1, |a|, |f|).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import Batch, Seq2Seq


@dataclass(frozen=True)
class TensorCheck:
    name: str
    max_rel_err: float
    worst_index: tuple
    analytic: float
    numeric: float


@dataclass(frozen=True)
class GradCheckReport:
    tensors: tuple[TensorCheck, ...]
    tolerance: float

    @property
    def max_rel_err(self) -> float:
        return max(t.max_rel_err for t in self.tensors)

    @property
    def ok(self) -> bool:
        return self.max_rel_err <= self.tolerance

    def failures(self) -> list[TensorCheck]:
        return [t for t in self.tensors if t.max_rel_err > self.tolerance]


def gradient_check(net: Seq2Seq, batch: Batch, eps: float = 1e-5,
                   tolerance: float = 1e-4) -> GradCheckReport:
    """Check every entry of every parameter tensor. Intended for tiny configs."""
    if net.dtype != np.float64:
        raise ValueError("gradient_check requires a float64 network")

    net.zero_grads()
    net.loss_and_grads(batch)
    analytic = {name: p.grad.copy() for name, p in net.parameters().items()}

    checks = []
    for name, param in net.parameters().items():
        w = param.value
        a = analytic[name]
        worst = (0.0, (), 0.0, 0.0)
        it = np.nditer(w, flags=["multi_index"])
        while not it.finished:
            idx = it.multi_index
            orig = w[idx]
            w[idx] = orig + eps
            up = net.loss(batch)
            w[idx] = orig - eps
            down = net.loss(batch)
            w[idx] = orig
            fd = (up - down) / (2 * eps)
            rel = abs(a[idx] - fd) / max(1.0, abs(a[idx]), abs(fd))
            if rel > worst[0]:
                worst = (rel, idx, float(a[idx]), fd)
            it.iternext()
        checks.append(TensorCheck(name, worst[0], worst[1], worst[2], worst[3]))
    return GradCheckReport(tuple(checks), tolerance)
