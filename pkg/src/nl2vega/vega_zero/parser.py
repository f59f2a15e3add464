"""Recursive-descent parser and canonical serializer for vega-zero.

The parser accepts transform sub-clauses in any order; the serializer always
emits them as filter, group, sort, bin, topk, so ``serialize(parse(s))`` is the
canonical normalized form used for exact-match comparison.
"""

from __future__ import annotations

from typing import Optional, Sequence, Union

from ..errors import ParseError
from .ast import (
    AGG_FUNCTIONS,
    BIN_INTERVALS,
    CHART_TYPES,
    COMPARISON_OPS,
    MARK_PLACEHOLDER,
    SORT_AXES,
    SORT_DIRECTIONS,
    BetweenRange,
    BinClause,
    Comparison,
    Condition,
    FilterExpr,
    LikePattern,
    SortClause,
    VegaZeroAST,
)
from .lexer import tokenize

TRANSFORM_KEYWORDS = ("filter", "group", "sort", "bin", "topk")
CLAUSE_KEYWORDS = ("mark", "data", "encoding", "x", "y", "aggregate", "color", "transform") + TRANSFORM_KEYWORDS


class _Cursor:
    def __init__(self, tokens: Sequence[str]):
        self.tokens = list(tokens)
        self.pos = 0

    def peek(self) -> Optional[str]:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def advance(self) -> str:
        tok = self.peek()
        if tok is None:
            raise ParseError("unexpected end of query")
        self.pos += 1
        return tok

    def expect(self, keyword: str, clause: str) -> None:
        tok = self.peek()
        if tok != keyword:
            if tok is None:
                raise ParseError(f"missing mandatory clause '{clause}'")
            raise ParseError(f"expected '{keyword}' for clause '{clause}', got {tok!r}")
        self.pos += 1

    def identifier(self, what: str) -> str:
        tok = self.peek()
        if tok is None:
            raise ParseError(f"missing {what}")
        if tok in CLAUSE_KEYWORDS:
            raise ParseError(f"expected {what}, got clause keyword {tok!r}")
        self.pos += 1
        return tok


def parse(tokens: Union[str, Sequence[str]]) -> VegaZeroAST:
    """Parse one complete vega-zero query from tokens (or raw text)."""
    if isinstance(tokens, str):
        tokens = tokenize(tokens)
    cur = _Cursor(tokens)

    cur.expect("mark", "mark")
    mark = cur.advance()
    if mark not in CHART_TYPES and mark != MARK_PLACEHOLDER:
        raise ParseError(f"unknown chart type {mark!r}")

    cur.expect("data", "data")
    data = cur.identifier("table name")

    cur.expect("encoding", "encoding")
    cur.expect("x", "x")
    x = cur.identifier("x column")
    cur.expect("y", "y")
    cur.expect("aggregate", "y aggregate")
    y_agg = cur.advance()
    if y_agg not in AGG_FUNCTIONS:
        raise ParseError(f"unknown aggregate function {y_agg!r}")
    y = cur.identifier("y column")

    color = None
    if cur.peek() == "color":
        cur.advance()
        color = cur.identifier("color column")
    if cur.peek() == "color":
        raise ParseError("duplicate clause 'color'")

    filt: Optional[FilterExpr] = None
    group: Optional[str] = None
    sort: Optional[SortClause] = None
    binc: Optional[BinClause] = None
    topk: Optional[int] = None

    if cur.peek() == "transform":
        cur.advance()
        seen: set[str] = set()
        while cur.peek() in TRANSFORM_KEYWORDS:
            kw = cur.advance()
            if kw in seen:
                raise ParseError(f"duplicate clause {kw!r}")
            seen.add(kw)
            if kw == "filter":
                filt = _parse_filter(cur)
            elif kw == "group":
                # axis references ("group x") are more common than column refs
                if cur.peek() in SORT_AXES:
                    group = cur.advance()
                else:
                    group = cur.identifier("group target")
            elif kw == "sort":
                axis = cur.advance()
                if axis not in SORT_AXES:
                    raise ParseError(f"sort axis must be x or y, got {axis!r}")
                direction = cur.advance()
                if direction not in SORT_DIRECTIONS:
                    raise ParseError(f"sort direction must be asc or desc, got {direction!r}")
                sort = SortClause(axis, direction)
            elif kw == "bin":
                cur.expect("x", "bin axis")
                cur.expect("by", "bin")
                interval = cur.advance()
                if interval not in BIN_INTERVALS:
                    raise ParseError(f"unknown bin interval {interval!r}")
                binc = BinClause("x", interval)
            elif kw == "topk":
                raw = cur.advance()
                try:
                    k = int(raw)
                except ValueError:
                    raise ParseError(f"topk expects a positive integer, got {raw!r}") from None
                if k <= 0:
                    raise ParseError(f"topk expects a positive integer, got {k}")
                topk = k
        if not seen and cur.peek() is None:
            raise ParseError("transform clause is empty")

    leftover = cur.peek()
    if leftover is not None:
        raise ParseError(f"unknown clause keyword {leftover!r} in transform position")

    return VegaZeroAST(
        mark=mark, data=data, x=x, y_agg=y_agg, y=y,
        color=color, filter=filt, group=group, sort=sort, bin=binc, topk=topk,
    )


def _parse_condition(cur: _Cursor) -> Condition:
    column = cur.identifier("filter column")
    op = cur.peek()
    if op is None:
        raise ParseError(f"filter condition on {column!r} is missing an operator")
    cur.advance()
    if op in COMPARISON_OPS:
        value = cur.identifier("filter value")
        return Comparison(column, op, value)
    if op == "like":
        pattern = cur.identifier("like pattern")
        return LikePattern(column, pattern)
    if op == "between":
        low = cur.identifier("between lower bound")
        cur.expect("and", "between")
        high = cur.identifier("between upper bound")
        return BetweenRange(column, low, high)
    raise ParseError(f"unknown filter operator {op!r}")


def _parse_filter(cur: _Cursor) -> FilterExpr:
    parts: list[Union[Condition, str]] = [_parse_condition(cur)]
    while cur.peek() in ("and", "or"):
        parts.append(cur.advance())
        parts.append(_parse_condition(cur))
    return FilterExpr(tuple(parts))


def serialize(ast: VegaZeroAST) -> str:
    """Canonical single-space text form; round-trips through parse."""
    return " ".join(serialize_tokens(ast))


def serialize_tokens(ast: VegaZeroAST) -> list[str]:
    out = ["mark", ast.mark, "data", ast.data, "encoding", "x", ast.x, "y", "aggregate", ast.y_agg, ast.y]
    if ast.color is not None:
        out += ["color", ast.color]
    transforms: list[str] = []
    if ast.filter is not None:
        transforms += ["filter", *ast.filter.tokens()]
    if ast.group is not None:
        transforms += ["group", ast.group]
    if ast.sort is not None:
        transforms += ["sort", ast.sort.axis, ast.sort.direction]
    if ast.bin is not None:
        transforms += ["bin", "x", "by", ast.bin.interval]
    if ast.topk is not None:
        transforms += ["topk", str(ast.topk)]
    if transforms:
        out += ["transform", *transforms]
    return out
