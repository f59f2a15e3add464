"""Entry point: pick a backend and a transport, then serve."""

from __future__ import annotations

import argparse
import sys
from typing import Optional

from .backends import load_backend
from .server import MAX_TOKENS, serve_stdio, serve_tcp


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nl2vega-bridge",
        description="Serve per-token embeddings over line-delimited JSON.")
    parser.add_argument("--backend", choices=("hash", "transformers"), default="hash")
    parser.add_argument("--model", help="model name or path (transformers backend)")
    parser.add_argument("--dim", type=int, default=64,
                        help="embedding width (hash backend only)")
    parser.add_argument("--max-tokens", type=int, default=MAX_TOKENS)
    parser.add_argument("--tcp", action="store_true",
                        help="serve on TCP instead of stdio; prints the port first")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=0)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        backend = load_backend(args.backend, model=args.model, dim=args.dim)
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.tcp:
        serve_tcp(backend, args.host, args.port, args.max_tokens)
    else:
        serve_stdio(backend, args.max_tokens)
    return 0


if __name__ == "__main__":
    sys.exit(main())
