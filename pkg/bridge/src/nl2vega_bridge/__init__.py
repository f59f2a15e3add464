"""Embedding bridge: per-token vectors over a line-delimited JSON protocol.

The core model consumes this over stdio or TCP. Requests carry
``kind`` in {hello, embed, generate}; every request gets exactly one
response, in order. Backends plug in behind one small interface, so the
wire contract never changes whether the vectors come from a hash function
or a pretrained transformer.
"""

from .backends import HashEncoder, TransformersEncoder, load_backend
from .server import MAX_TOKENS, BridgeServer, respond, serve_stdio, serve_tcp

__all__ = [
    "BridgeServer",
    "HashEncoder",
    "MAX_TOKENS",
    "TransformersEncoder",
    "load_backend",
    "respond",
    "serve_stdio",
    "serve_tcp",
]
