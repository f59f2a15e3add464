"""Sequence-to-sequence model: layers, network, training, checkpoints, bridge."""

from .bridge import BridgeClient, make_bridge_provider
from .checkpoint import Checkpoint, build_network, from_network, load, save
from .config import ENCODER_VARIANTS, ModelConfig
from .gradcheck import GradCheckReport, gradient_check
from .network import Batch, Seq2Seq, make_batch
from .training import Adam, dataset_loss, train, write_history_csv

__all__ = [
    "Adam",
    "Batch",
    "BridgeClient",
    "Checkpoint",
    "ENCODER_VARIANTS",
    "GradCheckReport",
    "ModelConfig",
    "Seq2Seq",
    "build_network",
    "dataset_loss",
    "from_network",
    "gradient_check",
    "load",
    "make_batch",
    "make_bridge_provider",
    "save",
    "train",
    "write_history_csv",
]
