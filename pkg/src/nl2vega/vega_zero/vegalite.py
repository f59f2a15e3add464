"""Compilation of vega-zero ASTs to Vega-Lite v5 documents.

The bundled Vega-Lite v5 JSON schema backs `validate_vegalite`, so every
compiled document can be checked without network access.
"""

from __future__ import annotations

import json
import re
from functools import lru_cache
from importlib import resources
from typing import Sequence, Union

import jsonschema

from ..errors import CompileError
from .ast import BetweenRange, Comparison, FilterExpr, LikePattern, VegaZeroAST
from .lexer import is_quoted

VEGA_LITE_SCHEMA_URL = "https://vega.github.io/schema/vega-lite/v5.json"

# vega-zero bin intervals → Vega-Lite timeUnit names ("weekday" is VL's "day",
# "day" means day-of-month, i.e. VL's "date").
_TIME_UNITS = {"month": "month", "weekday": "day", "year": "year", "day": "date", "quarter": "quarter"}

_AGG_OPS = {"count": "count", "sum": "sum", "avg": "mean", "max": "max", "min": "min"}

_NUMBER = re.compile(r"-?\d+(\.\d+)?")

DataRef = Union[str, Sequence[dict], dict]


def _data_block(data: DataRef) -> dict:
    if isinstance(data, str):
        return {"url": data}
    if isinstance(data, dict):
        return data
    return {"values": list(data)}


def _literal(token: str) -> str:
    """Vega expression literal for one filter value token."""
    if is_quoted(token):
        token = token[1:-1]
    elif _NUMBER.fullmatch(token):
        return token
    return "'" + token.replace("\\", "\\\\").replace("'", "\\'") + "'"


def _field(column: str) -> str:
    escaped = column.replace("\\", "\\\\").replace("'", "\\'")
    return f"datum['{escaped}']"


def _condition_expr(cond) -> str:
    if isinstance(cond, Comparison):
        op = {"=": "==", "!=": "!="}.get(cond.op, cond.op)
        return f"{_field(cond.column)} {op} {_literal(cond.value)}"
    if isinstance(cond, LikePattern):
        pattern = cond.pattern[1:-1] if is_quoted(cond.pattern) else cond.pattern
        regex = "^" + "".join(".*" if c == "%" else "." if c == "_" else re.escape(c) for c in pattern) + "$"
        return f"test(/{regex}/, {_field(cond.column)})"
    if isinstance(cond, BetweenRange):
        f = _field(cond.column)
        return f"({f} >= {_literal(cond.low)} && {f} <= {_literal(cond.high)})"
    raise CompileError(f"unknown filter condition {cond!r}")


def filter_expression(filt: FilterExpr) -> str:
    """Flat left-associative chain folded into an explicitly grouped expression."""
    expr = _condition_expr(filt.parts[0])
    i = 1
    while i < len(filt.parts):
        conn = "&&" if filt.parts[i] == "and" else "||"
        expr = f"({expr} {conn} {_condition_expr(filt.parts[i + 1])})"
        i += 2
    return expr


def compile_to_vegalite(ast: VegaZeroAST, data: DataRef) -> dict:
    """Renderable Vega-Lite v5 document for a concrete (non-placeholder) query."""
    if ast.has_placeholder_mark:
        raise CompileError("chart type unresolved: mark is the [T] placeholder")

    x_def: dict = {"field": ast.x, "type": "temporal" if ast.bin else "nominal"}
    if ast.bin is not None:
        x_def["timeUnit"] = _TIME_UNITS[ast.bin.interval]

    if ast.y_agg == "none":
        y_def: dict = {"field": ast.y, "type": "quantitative"}
    elif ast.y_agg == "count":
        y_def = {"aggregate": "count", "type": "quantitative"}
    else:
        y_def = {"aggregate": _AGG_OPS[ast.y_agg], "field": ast.y, "type": "quantitative"}

    if ast.sort is not None:
        direction = "ascending" if ast.sort.direction == "asc" else "descending"
        (x_def if ast.sort.axis == "x" else y_def)["sort"] = direction

    if ast.mark == "arc":
        # pie-style rendering: the measure drives the angle, the x column the color
        encoding = {"theta": y_def, "color": {"field": ast.x, "type": "nominal"}}
    else:
        encoding = {"x": x_def, "y": y_def}
        if ast.color is not None:
            encoding["color"] = {"field": ast.color, "type": "nominal"}

    transforms: list[dict] = []
    if ast.filter is not None:
        transforms.append({"filter": filter_expression(ast.filter)})
    if ast.topk is not None:
        order = "descending"
        if ast.sort is not None and ast.sort.axis == "y":
            order = "ascending" if ast.sort.direction == "asc" else "descending"
        transforms.append({
            "sort": [{"field": ast.y, "order": order}],
            "window": [{"op": "rank", "as": "rank"}],
        })
        transforms.append({"filter": f"datum.rank <= {ast.topk}"})

    doc: dict = {
        "$schema": VEGA_LITE_SCHEMA_URL,
        "data": _data_block(data),
        "mark": ast.mark,
        "encoding": encoding,
    }
    if transforms:
        doc["transform"] = transforms
    return doc


@lru_cache(maxsize=1)
def _validator() -> jsonschema.Draft7Validator:
    schema_text = resources.files("nl2vega.data").joinpath("vega-lite-v5.json").read_text("utf-8")
    return jsonschema.Draft7Validator(json.loads(schema_text))


def validate_vegalite(doc: dict) -> list[str]:
    """Schema violations as strings; empty list means the document conforms."""
    return [e.message for e in _validator().iter_errors(doc)]
