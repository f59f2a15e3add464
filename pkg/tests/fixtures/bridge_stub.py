#!/usr/bin/env python3
"""Deterministic embedding bridge stub for tests.

Speaks the line-delimited JSON protocol over stdio, or over TCP with
``--tcp`` (binds an ephemeral port and prints it first). Vectors are
derived from token hashes, so repeats are byte-identical across runs.
"""

import argparse
import hashlib
import json
import socketserver
import sys

DIM = 12
MAX_TOKENS = 4096


def vector(token: str) -> list:
    digest = hashlib.sha256(token.encode("utf-8")).digest()
    return [int.from_bytes(digest[i : i + 2], "little") / 32768.0 - 1.0
            for i in range(0, 2 * DIM, 2)]


def respond(line: str) -> dict:
    try:
        request = json.loads(line)
    except json.JSONDecodeError as exc:
        return {"error": {"code": "bad-json", "message": str(exc)}}
    kind = request.get("kind")
    if kind == "hello":
        return {"dim": DIM, "model_name": "hash-stub"}
    if kind == "embed":
        tokens = request.get("tokens") or []
        if not tokens:
            return {"error": {"code": "empty", "message": "embed requires tokens"}}
        if len(tokens) > MAX_TOKENS:
            return {"error": {"code": "oversize", "message": f"more than {MAX_TOKENS} tokens"}}
        return {"vectors": [vector(t) for t in tokens]}
    if kind == "generate":
        return {"tokens": list(reversed(request.get("tokens") or []))}
    return {"error": {"code": "unknown-kind", "message": f"unknown kind {kind!r}"}}


def serve_stdio() -> None:
    for line in sys.stdin:
        if line.strip():
            sys.stdout.write(json.dumps(respond(line)) + "\n")
            sys.stdout.flush()


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        for line in self.rfile:
            if line.strip():
                self.wfile.write(json.dumps(respond(line.decode("utf-8"))).encode() + b"\n")
                self.wfile.flush()


def serve_tcp() -> None:
    with socketserver.ThreadingTCPServer(("127.0.0.1", 0), _Handler) as server:
        print(server.server_address[1], flush=True)
        server.serve_forever()


if __name__ == "__main__":
    parser = argparse.ArgumentParser()
    parser.add_argument("--tcp", action="store_true")
    args = parser.parse_args()
    serve_tcp() if args.tcp else serve_stdio()
