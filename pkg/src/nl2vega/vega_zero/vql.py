"""Translation of single-table VQL (``Visualize <TYPE> <SQL>``) into vega-zero.

Only the single-table subset is supported; JOINs and multi-table FROM lists
raise UnsupportedVqlError.
"""

from __future__ import annotations

import re
from typing import Optional

from ..errors import UnsupportedVqlError, VqlError
from .ast import AGG_FUNCTIONS, BIN_INTERVALS, CHART_TYPES, VegaZeroAST
from .parser import _Cursor, _parse_filter

_CHART_ALIASES = {"pie": "arc", "scatter": "point", **{c: c for c in CHART_TYPES}}

_TOKEN = re.compile(r"\"[^\"]*\"|'[^']*'|[(),]|[^\s(),]+")


def _lex(vql: str) -> list[str]:
    tokens = []
    for match in _TOKEN.finditer(vql):
        tok = match.group(0)
        tokens.append(tok if tok[0] in "\"'" else tok.lower())
    return tokens


def _until(cur: _Cursor, stops: set[str]) -> list[str]:
    out = []
    while cur.peek() is not None and cur.peek() not in stops:
        out.append(cur.advance())
    return out


def from_vql(vql: str) -> VegaZeroAST:
    """Clause-by-clause mapping of one VQL statement into a vega-zero AST."""
    cur = _Cursor(_lex(vql))
    cur.expect("visualize", "visualize")
    chart_word = cur.advance()
    mark = _CHART_ALIASES.get(chart_word)
    if mark is None:
        raise VqlError(f"unknown visualization type {chart_word!r}")

    cur.expect("select", "select")
    x = cur.advance()
    cur.expect(",", "select list")
    second = cur.advance()
    if second in AGG_FUNCTIONS and cur.peek() == "(":
        y_agg = second
        cur.advance()
        y = cur.advance()
        cur.expect(")", "aggregate")
    else:
        y_agg, y = "none", second

    cur.expect("from", "from")
    table = cur.advance()
    if cur.peek() == ",":
        raise UnsupportedVqlError("multi-table FROM is not supported; vega-zero covers single-table queries only")
    if cur.peek() == "join":
        raise UnsupportedVqlError("JOIN is not supported; vega-zero covers single-table queries only")

    stops = {"group", "order", "bin", "limit"}
    filt = None
    group: Optional[str] = None
    sort = None
    binc = None
    topk = None

    if cur.peek() == "where":
        cur.advance()
        predicate = _until(cur, stops)
        filt = _parse_filter(_Cursor(predicate))

    if cur.peek() == "group":
        cur.advance()
        cur.expect("by", "group by")
        col = cur.advance()
        group = "x" if col == x else ("y" if col == y else col)

    if cur.peek() == "order":
        cur.advance()
        cur.expect("by", "order by")
        target = cur.advance()
        if target == x or target == "x":
            axis = "x"
        elif target == y or target == "y":
            axis = "y"
        else:
            raise VqlError(f"ORDER BY target {target!r} matches neither the x nor the y column")
        direction = "asc"
        if cur.peek() in ("asc", "desc"):
            direction = cur.advance()
        from .ast import SortClause

        sort = SortClause(axis, direction)

    if cur.peek() == "bin":
        cur.advance()
        if cur.peek() != "by":
            cur.advance()  # tolerate an explicit binned column before BY
        cur.expect("by", "bin by")
        interval = cur.advance()
        if interval not in BIN_INTERVALS:
            raise VqlError(f"unknown bin interval {interval!r}")
        from .ast import BinClause

        binc = BinClause("x", interval)

    if cur.peek() == "limit":
        cur.advance()
        raw = cur.advance()
        try:
            topk = int(raw)
        except ValueError:
            raise VqlError(f"LIMIT expects an integer, got {raw!r}") from None

    leftover = cur.peek()
    if leftover is not None:
        raise VqlError(f"unexpected token {leftover!r} after the query")

    return VegaZeroAST(
        mark=mark, data=table, x=x, y_agg=y_agg, y=y,
        color=None, filter=filt, group=group, sort=sort, bin=binc, topk=topk,
    )
