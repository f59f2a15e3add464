"""Model and training configuration."""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Any

from ..errors import ConfigError

ENCODER_VARIANTS = ("native", "external", "external_cnn", "combined")


@dataclass(frozen=True)
class ModelConfig:
    d_model: int = 64
    n_heads: int = 2
    n_layers: int = 2
    d_ff: int = 128
    dropout: float = 0.1
    max_len: int = 256
    encoder_variant: str = "native"
    external_dim: int = 0
    # parallel 1-D convolutions as (kernel_width, out_channels); channel
    # counts must sum to d_model so their concatenation feeds the decoder
    cnn: tuple[tuple[int, int], ...] = ((3, 32), (5, 32))
    learning_rate: float = 0.0005
    epochs: int = 5
    batch_size: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.d_model <= 0 or self.n_heads <= 0 or self.n_layers <= 0:
            raise ConfigError("d_model, n_heads and n_layers must be positive")
        if self.d_model % self.n_heads != 0:
            raise ConfigError(f"d_model {self.d_model} not divisible by n_heads {self.n_heads}")
        if self.encoder_variant not in ENCODER_VARIANTS:
            raise ConfigError(f"unknown encoder variant {self.encoder_variant!r}")
        if self.encoder_variant != "native" and self.external_dim <= 0:
            raise ConfigError(f"variant {self.encoder_variant!r} requires external_dim > 0")
        if self.encoder_variant == "external_cnn":
            if not self.cnn:
                raise ConfigError("external_cnn requires at least one kernel")
            if any(w <= 0 or c <= 0 for w, c in self.cnn):
                raise ConfigError("kernel widths and channel counts must be positive")
            total = sum(c for _, c in self.cnn)
            if total != self.d_model:
                raise ConfigError(f"cnn channels sum to {total}, expected d_model {self.d_model}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout {self.dropout} outside [0, 1)")
        if self.max_len <= 0:
            raise ConfigError("max_len must be positive")
        if self.learning_rate < 0:
            raise ConfigError("learning_rate must be non-negative")
        if self.epochs < 1:
            raise ConfigError("epochs must be at least 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be at least 1")

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["cnn"] = [list(k) for k in self.cnn]
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        kwargs = dict(d)
        if "cnn" in kwargs:
            try:
                kwargs["cnn"] = tuple((int(w), int(c)) for w, c in kwargs["cnn"])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad cnn spec {kwargs['cnn']!r}") from exc
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
