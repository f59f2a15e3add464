"""Acceptance: the contract the core model relies on, against a live bridge.

Uses the core package's own client and encoder stack, so a pass here means
the two sides actually speak the same protocol end to end.
"""

import sys
import threading

import numpy as np
import pytest

from nl2vega.dataset import augment_corpus, build_vocabulary, bundled_corpus_path, encode_corpus, load_corpus
from nl2vega.model import BridgeClient, ModelConfig, Seq2Seq, make_batch, make_bridge_provider

from nl2vega_bridge import BridgeServer, HashEncoder


def criterion(name: str, ok: bool, detail: str) -> None:
    print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def tcp_address():
    server = BridgeServer(HashEncoder(dim=24))
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"tcp:127.0.0.1:{server.server_address[1]}"
    server.shutdown()
    server.server_close()


def test_bridge_contract(tcp_address):
    with BridgeClient(tcp_address) as client:
        dims = {client.hello()[0] for _ in range(3)}
        name = client.hello()[1]
        tokens = ["mark", "bar", "data", "flights", "<N>", "mark"]
        first = client.embed(tokens)
        client._cache.clear()  # force a second wire round trip
        second = client.embed(tokens)
        shape_ok = first.shape == (len(tokens), 24)
        identical = first.tobytes() == second.tobytes()
    criterion("bridge contract",
              dims == {24} and shape_ok and identical,
              f"dim constant {sorted(dims)} from {name!r}, "
              f"{len(tokens)} tokens -> {first.shape[0]} vectors, "
              f"repeat embeds byte-identical: {identical}")


def test_external_variant_encodes_against_live_bridge(tcp_address):
    result = load_corpus(bundled_corpus_path())
    items = augment_corpus(result.pairs[:4])
    vocab = build_vocabulary(augment_corpus(result.pairs))
    encoded = encode_corpus(items, vocab)

    with BridgeClient(tcp_address) as client:
        dim, _ = client.hello()
        provider = make_bridge_provider(client, "external")
        config = ModelConfig(d_model=16, n_heads=2, n_layers=1, d_ff=32,
                             dropout=0.0, max_len=128, encoder_variant="external",
                             external_dim=dim, learning_rate=0.001, epochs=1,
                             batch_size=4, seed=13)
        net = Seq2Seq(config, len(vocab), dtype=np.float32)
        external = [provider(item) for item in items]
        batch = make_batch([e.example for e in encoded], vocab.pad_id,
                           dtype=np.float32, external=external)
        memory = net.encode(batch)
        loss = float(net.loss_and_grads(batch))

    finite = bool(np.isfinite(memory).all()) and np.isfinite(loss)
    criterion("external-variant encode",
              memory.shape[:2] == batch.src_ids.shape and finite,
              f"{len(items)} items encoded to {memory.shape}, "
              f"all finite: {finite}, loss {loss:.3f}")


def test_stdio_transport_via_spawned_process():
    address = f"{sys.executable} -m nl2vega_bridge.cli --dim 16"
    with BridgeClient(address) as client:
        dim, name = client.hello()
        vectors = client.embed(["encoding", "x"])
    criterion("stdio transport",
              dim == 16 and vectors.shape == (2, 16),
              f"spawned process served dim {dim} ({name!r}), "
              f"matrix shape {vectors.shape}")
