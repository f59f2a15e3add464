"""Seeded random generator of schema-valid vega-zero ASTs.

Serves two roles: the independent oracle for parse/serialize round-trip
properties, and the authoring tool behind the bundled mini-corpus.
"""

from __future__ import annotations

import random
from typing import Optional

from .ast import (
    AGG_FUNCTIONS,
    BIN_INTERVALS,
    CHART_TYPES,
    BetweenRange,
    BinClause,
    ColumnSchema,
    Comparison,
    Condition,
    DatabaseSchema,
    FilterExpr,
    LikePattern,
    SortClause,
    TableSchema,
    VegaZeroAST,
)

_NAME_SYLLABLES = ["ta", "ri", "mo", "lu", "ke", "san", "ber", "gol", "fen", "dor"]

_WORD_VALUES = ["york", "berlin", "osaka", "lima", "cairo", "oslo", "perth", "quito"]


def random_table(rng: random.Random, name: Optional[str] = None) -> TableSchema:
    """A small table with a mix of categorical, numeric and temporal columns."""
    if name is None:
        name = "t_" + "".join(rng.sample(_NAME_SYLLABLES, 2))
    n_cols = rng.randint(3, 6)
    columns = []
    kinds = ["categorical", "numeric", "temporal"]
    used = set()
    for i in range(n_cols):
        base = rng.choice(_NAME_SYLLABLES) + "_" + rng.choice(["id", "name", "date", "amt", "cnt", "tag"])
        col = base
        k = 2
        while col in used:
            col = f"{base}{k}"
            k += 1
        used.add(col)
        kind = kinds[i % 3] if i < 3 else rng.choice(kinds)
        columns.append(ColumnSchema(col, kind))
    values = tuple(rng.sample(_WORD_VALUES, rng.randint(2, 5)))
    return TableSchema(name, tuple(columns), values)


def _pick_column(rng: random.Random, table: TableSchema, kind: Optional[str] = None) -> Optional[str]:
    pool = [c.name for c in table.columns if kind is None or c.kind == kind]
    return rng.choice(pool) if pool else None


def _random_value(rng: random.Random, table: TableSchema) -> str:
    roll = rng.random()
    if roll < 0.4:
        return str(rng.randint(1, 20000))
    if roll < 0.55:
        return f"{rng.randint(0, 99)}.{rng.randint(1, 9)}"
    if roll < 0.8 and table.sample_values:
        return '"%s"' % rng.choice(table.sample_values)
    return '"null"'


def _random_condition(rng: random.Random, table: TableSchema) -> Condition:
    column = _pick_column(rng, table)
    roll = rng.random()
    if roll < 0.55:
        op = rng.choice(["=", "!=", "<", ">", "<=", ">="])
        return Comparison(column, op, _random_value(rng, table))
    if roll < 0.8:
        letter = rng.choice("abcdeklmnors")
        # a leading wildcard always gets its closing twin: patterns that open
        # with "%" and never close it are treated as decoder errors downstream
        shape = rng.choice(["'%{0}%'", "'{0}%'"])
        return LikePattern(column, shape.format(letter))
    low = rng.randint(0, 5000)
    return BetweenRange(column, str(low), str(low + rng.randint(100, 9000)))


def random_filter(rng: random.Random, table: TableSchema) -> FilterExpr:
    parts: list = [_random_condition(rng, table)]
    for _ in range(rng.choice([0, 0, 1, 1, 2])):
        parts.append(rng.choice(["and", "or"]))
        parts.append(_random_condition(rng, table))
    return FilterExpr(tuple(parts))


def random_ast(
    rng: random.Random,
    table: Optional[TableSchema] = None,
    allow_placeholder: bool = False,
) -> VegaZeroAST:
    """One schema-valid AST over the given (or a fresh random) table."""
    if table is None:
        table = random_table(rng)

    bin_clause = None
    if rng.random() < 0.25:
        temporal = _pick_column(rng, table, "temporal")
        if temporal is not None:
            bin_clause = BinClause("x", rng.choice(BIN_INTERVALS))
            x = temporal
    if bin_clause is None:
        x = _pick_column(rng, table)

    y_agg = rng.choice(AGG_FUNCTIONS)
    y = x if (y_agg == "count" and rng.random() < 0.6) else _pick_column(rng, table)

    mark = "[T]" if (allow_placeholder and rng.random() < 0.1) else rng.choice(CHART_TYPES)
    color = _pick_column(rng, table) if rng.random() < 0.2 else None
    filt = random_filter(rng, table) if rng.random() < 0.35 else None
    group = None
    if rng.random() < 0.25:
        group = rng.choice(["x", "x", "y", _pick_column(rng, table)])
    sort = None
    if rng.random() < 0.4:
        sort = SortClause(rng.choice(["x", "y"]), rng.choice(["asc", "desc"]))
    topk = rng.choice([2, 3, 5, 10]) if rng.random() < 0.15 else None

    return VegaZeroAST(
        mark=mark, data=table.name, x=x, y_agg=y_agg, y=y,
        color=color, filter=filt, group=group, sort=sort, bin=bin_clause, topk=topk,
    )


def random_corpus_schema(rng: random.Random, n_tables: int) -> DatabaseSchema:
    tables = []
    names: set[str] = set()
    while len(tables) < n_tables:
        t = random_table(rng)
        if t.name not in names:
            names.add(t.name)
            tables.append(t)
    return DatabaseSchema(tuple(tables))
