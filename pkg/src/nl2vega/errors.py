"""Exception hierarchy shared across the toolchain."""

from __future__ import annotations


class Nl2VegaError(Exception):
    """Base class for all errors raised by this package."""


class LexError(Nl2VegaError):
    """Malformed raw text, e.g. an unterminated quote."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class ParseError(Nl2VegaError):
    """Token stream does not form a valid vega-zero query."""


class VqlError(ParseError):
    """Malformed VQL input."""


class UnsupportedVqlError(VqlError):
    """VQL construct outside the single-table subset (JOIN, multi-table FROM)."""


class CompileError(Nl2VegaError):
    """AST cannot be compiled to a Vega-Lite document."""


class CorpusError(Nl2VegaError):
    """Corpus file unusable as a whole (unreadable, empty, or too many rejects)."""


class EncodingError(Nl2VegaError):
    """Token cannot be encoded (label token outside the closed vocabulary)."""


class ConfigError(Nl2VegaError):
    """Invalid model configuration."""


class CheckpointError(Nl2VegaError):
    """Checkpoint file is corrupt or inconsistent with its header."""


class TrainingDivergedError(Nl2VegaError):
    """Non-finite loss encountered during training."""

    def __init__(self, epoch: int, batch: int):
        super().__init__(f"non-finite loss at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch


class BridgeError(Nl2VegaError):
    """Embedding bridge is unreachable or returned an error response."""


class EncoderError(Nl2VegaError):
    """Encoder variant cannot produce a memory for the given source."""
