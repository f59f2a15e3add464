"""Client for the external embedding bridge.

The bridge speaks line-delimited JSON: one request object per line, one
response per request, in order. Requests carry ``kind`` ∈ {hello, embed,
generate}; error responses carry an ``error`` object with code and message.
Addresses: ``tcp:HOST:PORT`` connects a socket, anything else is run as a
command line and spoken to over stdin/stdout.
"""

from __future__ import annotations

import json
import shlex
import socket
import subprocess
from typing import Optional, Sequence

import numpy as np

from ..dataset import AugmentedItem
from ..errors import BridgeError, EncoderError


class BridgeClient:
    def __init__(self, address: str, timeout: float = 30.0):
        self.address = address
        self._proc: Optional[subprocess.Popen] = None
        self._sock: Optional[socket.socket] = None
        self._cache: dict[tuple[str, ...], np.ndarray] = {}
        self.dim: Optional[int] = None
        self.model_name: Optional[str] = None
        try:
            if address.startswith("tcp:"):
                _, host, port = address.split(":", 2)
                self._sock = socket.create_connection((host, int(port)), timeout=timeout)
                self._reader = self._sock.makefile("rb")
                self._writer = self._sock.makefile("wb")
            else:
                self._proc = subprocess.Popen(
                    shlex.split(address), stdin=subprocess.PIPE, stdout=subprocess.PIPE)
                self._reader = self._proc.stdout
                self._writer = self._proc.stdin
        except (OSError, ValueError) as exc:
            raise BridgeError(f"cannot reach bridge at {address!r}: {exc}") from exc

    def __enter__(self) -> "BridgeClient":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def close(self) -> None:
        for stream in (getattr(self, "_writer", None), getattr(self, "_reader", None)):
            try:
                if stream is not None:
                    stream.close()
            except OSError:
                pass
        if self._sock is not None:
            self._sock.close()
        if self._proc is not None:
            self._proc.terminate()
            try:
                self._proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self._proc.kill()

    def _roundtrip(self, request: dict) -> dict:
        try:
            self._writer.write(json.dumps(request).encode("utf-8") + b"\n")
            self._writer.flush()
            line = self._reader.readline()
        except (OSError, BrokenPipeError) as exc:
            raise BridgeError(f"bridge {self.address!r} connection failed: {exc}") from exc
        if not line:
            raise BridgeError(f"bridge {self.address!r} closed the connection")
        try:
            response = json.loads(line)
        except json.JSONDecodeError as exc:
            raise BridgeError(f"bridge sent malformed JSON: {exc}") from exc
        if "error" in response:
            err = response["error"]
            raise BridgeError(f"bridge error {err.get('code')}: {err.get('message')}")
        return response

    def hello(self) -> tuple[int, str]:
        response = self._roundtrip({"kind": "hello"})
        dim, name = response.get("dim"), response.get("model_name")
        if not isinstance(dim, int) or dim <= 0:
            raise BridgeError(f"bridge reported a bad embedding width: {dim!r}")
        if self.dim is not None and dim != self.dim:
            raise BridgeError(f"bridge changed dim mid-session: {self.dim} -> {dim}")
        self.dim, self.model_name = dim, name
        return dim, name

    def embed(self, tokens: Sequence[str]) -> np.ndarray:
        """One float32 vector per token, cached per token sequence."""
        if not tokens:
            raise BridgeError("embed requires at least one token")
        key = tuple(tokens)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        if self.dim is None:
            self.hello()
        response = self._roundtrip({"kind": "embed", "tokens": list(tokens)})
        vectors = np.asarray(response.get("vectors"), dtype=np.float32)
        if vectors.ndim != 2 or vectors.shape[0] != len(tokens) or vectors.shape[1] != self.dim:
            raise BridgeError(
                f"expected {len(tokens)}x{self.dim} embedding matrix, got shape {vectors.shape}")
        self._cache[key] = vectors
        return vectors

    def generate(self, tokens: Sequence[str]) -> list[str]:
        response = self._roundtrip({"kind": "generate", "tokens": list(tokens)})
        out = response.get("tokens")
        if not isinstance(out, list) or not all(isinstance(t, str) for t in out):
            raise BridgeError("generate response lacks a token list")
        return out


def make_bridge_provider(client: BridgeClient, variant: str):
    """ExternalProvider that embeds each item's source tokens via the bridge."""

    def provider(item: AugmentedItem) -> np.ndarray:
        try:
            return client.embed(item.source.tokens)
        except BridgeError as exc:
            raise EncoderError(f"encoder variant {variant!r}: {exc}") from exc

    return provider
