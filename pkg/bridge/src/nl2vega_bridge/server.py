"""Line-delimited JSON server over stdio or TCP.

One request object per line, one response per request, order-preserving.
Each connection is handled sequentially (single in-flight request), while
the TCP server accepts many connections at once. Problems never kill the
connection; they come back as ``{"error": {"code", "message"}}`` lines.
"""

from __future__ import annotations

import json
import socketserver
import sys
from typing import IO

MAX_TOKENS = 4096


def _error(code: str, message: str) -> dict:
    return {"error": {"code": code, "message": message}}


def respond(backend, line: str, max_tokens: int = MAX_TOKENS) -> dict:
    """One response object for one request line."""
    try:
        request = json.loads(line)
    except json.JSONDecodeError as exc:
        return _error("bad-json", str(exc))
    if not isinstance(request, dict):
        return _error("bad-request", "request must be a JSON object")

    kind = request.get("kind")
    if kind == "hello":
        return {"dim": backend.dim, "model_name": backend.model_name}

    if kind == "embed":
        tokens = request.get("tokens")
        if not isinstance(tokens, list) or not tokens:
            return _error("empty", "embed requires a non-empty token list")
        if not all(isinstance(t, str) for t in tokens):
            return _error("bad-request", "tokens must be strings")
        if len(tokens) > max_tokens:
            return _error("oversize", f"got {len(tokens)} tokens, limit {max_tokens}")
        return {"vectors": backend.encode(tokens)}

    if kind == "generate":
        if getattr(backend, "generate", None) is None:
            return _error("unsupported", f"{backend.model_name} cannot generate")
        tokens = request.get("tokens")
        if not isinstance(tokens, list) or not all(isinstance(t, str) for t in tokens):
            return _error("bad-request", "generate requires a token list")
        if len(tokens) > max_tokens:
            return _error("oversize", f"got {len(tokens)} tokens, limit {max_tokens}")
        return {"tokens": backend.generate(tokens)}

    return _error("unknown-kind", f"unknown kind {kind!r}")


class BridgeServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, backend, host: str = "127.0.0.1", port: int = 0,
                 max_tokens: int = MAX_TOKENS):
        self.backend = backend
        self.max_tokens = max_tokens
        super().__init__((host, port), _TcpHandler)


class _TcpHandler(socketserver.StreamRequestHandler):
    def handle(self):
        server: BridgeServer = self.server
        for raw in self.rfile:
            line = raw.decode("utf-8", errors="replace").strip()
            if not line:
                continue
            out = respond(server.backend, line, server.max_tokens)
            self.wfile.write(json.dumps(out).encode("utf-8") + b"\n")
            self.wfile.flush()


def serve_tcp(backend, host: str = "127.0.0.1", port: int = 0,
              max_tokens: int = MAX_TOKENS, announce: IO = sys.stdout) -> None:
    """Blocks forever; prints the bound port first so callers can connect."""
    with BridgeServer(backend, host, port, max_tokens) as server:
        print(server.server_address[1], file=announce, flush=True)
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass


def serve_stdio(backend, max_tokens: int = MAX_TOKENS,
                stdin: IO = None, stdout: IO = None) -> None:
    """Reads requests from stdin until EOF."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout
    for raw in stdin:
        line = raw.strip()
        if not line:
            continue
        stdout.write(json.dumps(respond(backend, line, max_tokens)) + "\n")
        stdout.flush()
