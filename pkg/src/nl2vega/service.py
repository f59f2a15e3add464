"""Read-only HTTP prediction service.

One immutable checkpoint and schema catalogue serve every request, so
concurrent identical requests produce identical bodies. POST /predict turns a
natural-language question into a repaired, validated vega-zero query plus its
compiled Vega-Lite document; GET /schema lists the tables a client can ask
about.
"""

from __future__ import annotations

import json
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional

from .dataset import AugmentedItem, NvPair, Vocabulary, build_source_sequence
from .errors import Nl2VegaError
from .evaluation import ExternalProvider, correct_systematic_errors
from .guided import DecoderMeta, batch_of_one, guided_search
from .model.network import Seq2Seq
from .vega_zero import (
    CHART_TYPES,
    MARK_PLACEHOLDER,
    DatabaseSchema,
    VegaZeroAST,
    compile_to_vegalite,
    parse,
    validate,
)


class RequestError(Exception):
    """Client-side problem; maps to HTTP 400."""


class PredictService:
    def __init__(self, net: Seq2Seq, vocab: Vocabulary, schema: DatabaseSchema,
                 external: Optional[ExternalProvider] = None, max_len: int = 64):
        self.net = net
        self.vocab = vocab
        self.schema = schema
        self.external = external
        self.max_len = max_len

    def schema_payload(self) -> dict:
        return self.schema.to_dict()

    def _source_item(self, nl: str, table: str, chart: Optional[str]) -> AugmentedItem:
        tschema = self.schema.table(table)
        if tschema is None:
            raise RequestError(f"unknown table {table!r}")
        if chart is not None and chart not in CHART_TYPES:
            raise RequestError(f"unknown chart type {chart!r}; expected one of {CHART_TYPES}")
        anchor = tschema.columns[0].name.lower()
        stub = VegaZeroAST(mark=chart or MARK_PLACEHOLDER, data=tschema.name.lower(),
                           x=anchor, y_agg="none", y=anchor)
        pair = NvPair(nl_query=nl, label=stub, table=tschema.name,
                      schema=DatabaseSchema((tschema,)))
        source = build_source_sequence(pair, chart_given=chart is not None)
        return AugmentedItem(source, (), pair)

    def predict(self, nl: str, table: str, chart: Optional[str] = None) -> dict:
        if not isinstance(nl, str) or not nl.strip():
            raise RequestError("field 'nl' must be a non-empty string")
        if not isinstance(table, str) or not table:
            raise RequestError("field 'table' must be a table name")
        item = self._source_item(nl, table, chart)
        tschema = item.pair.schema.table(table)
        try:
            meta = DecoderMeta.from_schema(tschema, chart)
            ext = self.external(item) if self.external else None
            batch = batch_of_one(item, self.vocab, external=ext, dtype=self.net.dtype)
            result = guided_search(self.net, self.vocab, batch, meta, self.max_len)
        except Nl2VegaError as exc:
            raise RequestError(str(exc)) from exc
        repaired = correct_systematic_errors(result.text)
        ast = parse(repaired)
        report = validate(ast, item.pair.schema)
        return {
            "vega_zero": repaired,
            "vega_lite": compile_to_vegalite(ast, {"name": ast.data}),
            "valid": report.ok,
            "corrected": repaired != result.text,
        }


class _Handler(BaseHTTPRequestHandler):
    service: PredictService  # set by make_server

    protocol_version = "HTTP/1.1"

    def log_message(self, fmt, *args):  # quiet by default; tests capture stderr
        pass

    def _send(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json; charset=utf-8")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        if self.path == "/schema":
            self._send(200, self.service.schema_payload())
        else:
            self._send(404, {"error": f"no such resource {self.path!r}"})

    def do_POST(self):
        if self.path != "/predict":
            self._send(404, {"error": f"no such resource {self.path!r}"})
            return
        try:
            length = int(self.headers.get("Content-Length", "0"))
            data = json.loads(self.rfile.read(length) or b"{}")
        except (ValueError, json.JSONDecodeError):
            self._send(400, {"error": "body must be a JSON object"})
            return
        if not isinstance(data, dict) or "nl" not in data or "table" not in data:
            self._send(400, {"error": "body must carry 'nl' and 'table' fields"})
            return
        try:
            out = self.service.predict(data["nl"], data["table"], data.get("chart"))
        except RequestError as exc:
            self._send(400, {"error": str(exc)})
            return
        except Exception as exc:  # unexpected: answer rather than drop the socket
            self._send(500, {"error": f"internal error: {exc}"})
            return
        self._send(200, out)


def make_server(service: PredictService, host: str = "127.0.0.1",
                port: int = 0) -> ThreadingHTTPServer:
    """Bound but not yet serving; port 0 picks a free one (server_address[1])."""
    handler = type("Handler", (_Handler,), {"service": service})
    return ThreadingHTTPServer((host, port), handler)
