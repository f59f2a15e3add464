import json

import numpy as np
import pytest

from modelutil import VOCAB_SIZE, tiny_batch, tiny_config

from nl2vega.dataset import Vocabulary
from nl2vega.errors import CheckpointError
from nl2vega.model import Seq2Seq, build_network, from_network
from nl2vega.model import checkpoint as ckpt_mod


def small_vocab() -> Vocabulary:
    return Vocabulary([f"tok{i}" for i in range(VOCAB_SIZE - 4)])


def sample_checkpoint():
    net = Seq2Seq(tiny_config(), VOCAB_SIZE)
    return from_network(net, small_vocab(), history=[(2.0, 1.5), (1.0, 1.2)],
                        selected_epoch=1, optimizer={"name": "adam", "learning_rate": 0.0005})


class TestRoundTrip:
    def test_bitwise_parameter_round_trip(self, tmp_path):
        ckpt = sample_checkpoint()
        path = tmp_path / "m.ckpt"
        ckpt_mod.save(ckpt, path)
        loaded = ckpt_mod.load(path)
        assert set(loaded.params) == set(ckpt.params)
        for name, arr in ckpt.params.items():
            assert arr.dtype == np.float32
            assert np.array_equal(loaded.params[name], arr)
        assert loaded.config == ckpt.config
        assert loaded.vocab.tokens == ckpt.vocab.tokens
        assert loaded.history == ckpt.history
        assert loaded.selected_epoch == 1
        assert loaded.optimizer["name"] == "adam"

    def test_save_is_deterministic(self, tmp_path):
        ckpt = sample_checkpoint()
        a, b = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
        ckpt_mod.save(ckpt, a)
        ckpt_mod.save(ckpt, b)
        assert a.read_bytes() == b.read_bytes()

    def test_rebuilt_network_computes_identically(self, tmp_path):
        net = Seq2Seq(tiny_config(), VOCAB_SIZE)
        ckpt = from_network(net, small_vocab())
        path = tmp_path / "m.ckpt"
        ckpt_mod.save(ckpt, path)
        rebuilt = build_network(ckpt_mod.load(path))
        batch = tiny_batch(dtype=np.float32)
        assert np.array_equal(net.forward(batch), rebuilt.forward(batch))


class TestHeader:
    def test_header_is_fully_enumerated_and_run_independent(self, tmp_path):
        path = tmp_path / "m.ckpt"
        ckpt_mod.save(sample_checkpoint(), path)
        raw = path.read_bytes()
        assert raw.startswith(ckpt_mod.MAGIC)
        n = int(np.frombuffer(raw[8:16], dtype="<u8")[0])
        header = json.loads(raw[16 : 16 + n])
        assert set(header) == {"format", "config", "vocab", "history",
                               "selected_epoch", "optimizer", "tensors"}
        blob = json.dumps(header)
        assert "time" not in blob and "date" not in blob

    def test_tensor_index_contiguous(self, tmp_path):
        path = tmp_path / "m.ckpt"
        ckpt = sample_checkpoint()
        ckpt_mod.save(ckpt, path)
        raw = path.read_bytes()
        n = int(np.frombuffer(raw[8:16], dtype="<u8")[0])
        header = json.loads(raw[16 : 16 + n])
        offset = 0
        for entry in header["tensors"]:
            assert entry["offset"] == offset
            offset += 4 * int(np.prod(entry["shape"]))
        assert len(raw) == 16 + n + offset


class TestCorruption:
    def test_bad_magic(self, tmp_path):
        path = tmp_path / "m.ckpt"
        path.write_bytes(b"NOTACKPT" + b"\x00" * 32)
        with pytest.raises(CheckpointError, match="magic"):
            ckpt_mod.load(path)

    def test_truncated_body(self, tmp_path):
        path = tmp_path / "m.ckpt"
        ckpt_mod.save(sample_checkpoint(), path)
        path.write_bytes(path.read_bytes()[:-100])
        with pytest.raises(CheckpointError, match="overruns"):
            ckpt_mod.load(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError, match="cannot read"):
            ckpt_mod.load(tmp_path / "nope.ckpt")

    def test_selected_epoch_must_be_minimal(self):
        net = Seq2Seq(tiny_config(), VOCAB_SIZE)
        with pytest.raises(CheckpointError, match="minimal val loss"):
            from_network(net, small_vocab(), history=[(2.0, 1.0), (1.5, 2.0)],
                         selected_epoch=1)

    def test_architecture_mismatch(self, tmp_path):
        ckpt = sample_checkpoint()
        del ckpt.params["out.b"]
        with pytest.raises(CheckpointError, match="parameter names"):
            build_network(ckpt)
