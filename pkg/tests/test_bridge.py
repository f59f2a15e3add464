import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from nl2vega.dataset import augment_pair
from nl2vega.errors import BridgeError, EncoderError
from nl2vega.model import BridgeClient, make_bridge_provider

STUB = Path(__file__).parent / "fixtures" / "bridge_stub.py"
STUB_CMD = f"{sys.executable} {STUB}"


@pytest.fixture
def client():
    with BridgeClient(STUB_CMD) as c:
        yield c


class TestStdioTransport:
    def test_hello_reports_width_and_name(self, client):
        dim, name = client.hello()
        assert dim == 12
        assert name == "hash-stub"

    def test_embed_shape_and_dtype(self, client):
        vecs = client.embed(["mark", "bar"])
        assert vecs.shape == (2, 12)
        assert vecs.dtype == np.float32

    def test_repeat_embeds_are_identical(self, client):
        a = client.embed(["mark", "bar", "data"])
        b = client.embed(["mark", "bar", "data"])
        assert a is b  # served from the client cache
        with BridgeClient(STUB_CMD) as other:
            assert np.array_equal(other.embed(["mark", "bar", "data"]), a)

    def test_generate_round_trip(self, client):
        assert client.generate(["a", "b", "c"]) == ["c", "b", "a"]

    def test_empty_embed_rejected_client_side(self, client):
        with pytest.raises(BridgeError, match="at least one token"):
            client.embed([])

    def test_unknown_kind_error_response(self, client):
        with pytest.raises(BridgeError, match="unknown-kind"):
            client._roundtrip({"kind": "dance"})

    def test_dead_bridge_raises(self):
        client = BridgeClient(f"{sys.executable} -c pass")
        with pytest.raises(BridgeError, match="closed the connection"):
            client.hello()
        client.close()

    def test_unlaunchable_command_raises(self):
        with pytest.raises(BridgeError, match="cannot reach"):
            BridgeClient("/no/such/binary-at-all")


class TestTcpTransport:
    @pytest.fixture
    def tcp_server(self):
        proc = subprocess.Popen([sys.executable, str(STUB), "--tcp"],
                                stdout=subprocess.PIPE, text=True)
        port = int(proc.stdout.readline())
        yield port
        proc.terminate()
        proc.wait(timeout=5)

    def test_tcp_round_trip(self, tcp_server):
        with BridgeClient(f"tcp:127.0.0.1:{tcp_server}") as c:
            dim, _ = c.hello()
            vecs = c.embed(["flights", "carrier"])
            assert vecs.shape == (2, dim)

    def test_tcp_matches_stdio(self, tcp_server, client):
        with BridgeClient(f"tcp:127.0.0.1:{tcp_server}") as c:
            assert np.array_equal(c.embed(["topk", "3"]), client.embed(["topk", "3"]))

    def test_unreachable_port(self):
        with pytest.raises(BridgeError, match="cannot reach"):
            BridgeClient("tcp:127.0.0.1:1")


class TestProvider:
    def test_provider_embeds_source_tokens(self, client):
        from test_dataset import small_pair

        item = augment_pair(small_pair())[0]
        provider = make_bridge_provider(client, "external")
        vecs = provider(item)
        assert vecs.shape == (len(item.source.tokens), 12)

    def test_provider_wraps_failures_with_variant_name(self):
        dead = BridgeClient(f"{sys.executable} -c pass")
        provider = make_bridge_provider(dead, "external_cnn")
        from test_dataset import small_pair

        item = augment_pair(small_pair())[0]
        with pytest.raises(EncoderError, match="external_cnn"):
            provider(item)
        dead.close()
